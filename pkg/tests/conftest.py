from __future__ import annotations

import numpy as np
import pytest

from hadamard_bundle import Euclidean, Hyperboloid, ProductManifold, SymmetricPositiveDefinite


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def make_manifold(name: str):
    if name == "euclidean10":
        return Euclidean(10)
    if name == "spd5":
        return SymmetricPositiveDefinite(5)
    if name == "h2":
        return Hyperboloid(2)
    if name == "h10":
        return Hyperboloid(10)
    if name == "h2x8":
        return ProductManifold(Hyperboloid(2), 8)
    raise ValueError(name)


def anchor_point(M):
    """A canonical base point for sampling."""
    name = M.tag
    if name.startswith("euclidean"):
        return M.point(np.zeros(M.ambient_shape()))
    if name.startswith("spd"):
        d = M.ambient_shape()[0]
        return M.point(np.eye(d))
    if name.startswith("hyperboloid"):
        e = np.zeros(M.ambient_shape())
        e[-1] = 1.0
        return M.point(e)
    if name.startswith("("):  # product
        comp = anchor_point(M.base)
        return M.point(np.stack([comp.coords] * M.n))
    raise ValueError(name)


def random_point(M, rng, scale=1.0):
    a = anchor_point(M)
    return M.exp(a, M.random_tangent(a, rng, scale=scale))
