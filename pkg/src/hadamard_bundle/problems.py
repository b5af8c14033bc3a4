"""Objective/subgradient oracles and data generators for the benchmarks.

Every oracle returns a valid subgradient of a geodesically convex
objective; where a distance term vanishes the zero vector is selected
(0 is always in the subdifferential at the coincident point) so queries
are defined everywhere.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

from .geometry import Manifold, Point, Tangent
from .hyperboloid import Hyperboloid, ProductManifold
from .spd import SymmetricPositiveDefinite

__all__ = [
    "SubgradOracle",
    "DenoiseInstance",
    "median_oracle",
    "tv_oracle",
    "gen_random_spd",
    "gen_square_wave",
    "add_tangent_noise",
    "make_denoise_instance",
    "sharp_toy",
    "one_norm_toy",
    "squared_distance_toy",
]

_COINCIDENCE_TOL = 1e-12


@dataclass
class SubgradOracle:
    """First-order oracle x -> (f(x), g(x)) with a Lipschitz bound.

    ``lip_bound`` dominates the subgradient norms returned at any point the
    algorithms can visit; ``f_star_hint`` is the optimal value when known.
    """

    eval: Callable[[Point], tuple[float, Tangent]]
    lip_bound: float
    f_star_hint: Optional[float] = None


def median_oracle(data: list[Point], M: Manifold) -> SubgradOracle:
    """Mean of distances to the data points (the Riemannian median objective).

    f(X) = (1/n) sum_j d(X, X_j); the subgradient averages the unit
    vectors -log_X(X_j)/d(X, X_j), skipping coincident data points.  The
    average of unit vectors has norm at most 1, so lip_bound = 1.
    """
    if not data:
        raise ValueError("median oracle needs at least one data point")
    stack = np.stack([np.asarray(p.coords, dtype=float) for p in data])
    n = len(data)

    def evaluate(x: Point) -> tuple[float, Tangent]:
        logs, dists = M.log_with_dist_many(x, stack)
        value = float(dists.sum()) / n
        w = np.where(dists > _COINCIDENCE_TOL, 1.0 / np.maximum(dists, _COINCIDENCE_TOL), 0.0)
        shape = (n,) + (1,) * (logs.ndim - 1)
        g = -(logs * w.reshape(shape)).sum(axis=0) / n
        return value, M.project_tangent(x, g)

    return SubgradOracle(eval=evaluate, lip_bound=1.0)


@dataclass
class DenoiseInstance:
    """A clean signal, its noisy observation, and the data-fit weights."""

    clean: Point
    noisy: Point
    alpha: float
    n: int
    sigma: float
    seed: int


def tv_oracle(inst: DenoiseInstance, M: ProductManifold) -> SubgradOracle:
    """Total-variation denoising objective on a product manifold signal.

    f(p) = (1/n) ( sum_i 1/2 d^2(p[i], qhat[i]) + alpha sum_i d(p[i], p[i+1]) ).

    The data term has componentwise gradient -log_{p[i]}(qhat[i]); each TV
    edge contributes the unit vectors toward the neighbors, zeroed at
    coincident neighbors.  The Lipschitz bound holds on the sublevel set
    of the noisy signal: there d(p[i], qhat[i]) <= sqrt(2 alpha TV(qhat)),
    giving ||g|| <= (d_max + 2 alpha) / sqrt(n) in the product norm.
    """
    qhat = np.asarray(inst.noisy.coords, dtype=float)
    n = inst.n
    alpha = inst.alpha
    base = M.base

    def evaluate(p: Point) -> tuple[float, Tangent]:
        P = np.asarray(p.coords, dtype=float)
        logs_data, d_data = base.log_with_dist_batch(P, qhat)
        logs_fwd, d_edge = base.log_with_dist_batch(P[:-1], P[1:])
        logs_bwd, _ = base.log_with_dist_batch(P[1:], P[:-1])
        value = (0.5 * float(np.sum(d_data**2)) + alpha * float(np.sum(d_edge))) / n
        g = -logs_data
        w = np.where(d_edge > _COINCIDENCE_TOL, 1.0 / np.maximum(d_edge, _COINCIDENCE_TOL), 0.0)
        shape = (len(d_edge),) + (1,) * (logs_fwd.ndim - 1)
        g[:-1] += alpha * (-(logs_fwd * w.reshape(shape)))
        g[1:] += alpha * (-(logs_bwd * w.reshape(shape)))
        g /= n
        return value, M.project_tangent(p, g)

    _, tv_edges = base.log_with_dist_batch(qhat[:-1], qhat[1:])
    d_max = math.sqrt(2.0 * alpha * float(np.sum(tv_edges)))
    lip = (d_max + 2.0 * alpha) / math.sqrt(n)
    return SubgradOracle(eval=evaluate, lip_bound=lip)


def gen_random_spd(d: int, n: int, spread: float, seed: int, M: SymmetricPositiveDefinite | None = None) -> list[Point]:
    """Random SPD points exp_I(spread * S_j) with S_j symmetric Gaussian."""
    if d < 1 or n < 1:
        raise ValueError("d and n must be >= 1")
    manifold = M if M is not None else SymmetricPositiveDefinite(d)
    rng = np.random.default_rng(seed)
    eye = manifold.point(np.eye(d))
    out = []
    for _ in range(n):
        A = rng.standard_normal((d, d))
        S = 0.5 * (A + A.T)
        out.append(manifold.exp(eye, Tangent(eye, spread * S)))
    return out


def gen_square_wave(n: int, low: Point, high: Point, period: int) -> Point:
    """Piecewise-constant signal alternating between two levels.

    Each half period holds period//2 consecutive samples at one level;
    with period = n the first half is low and the second half is high.
    """
    if n < 1:
        raise ValueError("signal length must be >= 1")
    if period < 2:
        raise ValueError("period must be >= 2")
    if low.manifold != high.manifold:
        raise ValueError("wave levels must live on the same manifold")
    half = period // 2
    lo = np.asarray(low.coords, dtype=float)
    hi = np.asarray(high.coords, dtype=float)
    coords = np.stack([hi if (i // half) % 2 else lo for i in range(n)])
    from .hyperboloid import product_tag

    return Point(product_tag(low.manifold, n), coords)


def add_tangent_noise(M: ProductManifold, q: Point, sigma: float, seed: int) -> Point:
    """Perturb each component by exp of an isotropic Gaussian tangent vector.

    Coordinates are N(0, sigma^2) in a metric-orthonormal basis of each
    component tangent space; deterministic given the seed.
    """
    if sigma < 0:
        raise ValueError("sigma must be nonnegative")
    if sigma == 0.0:
        return q
    rng = np.random.default_rng(seed)
    comps = np.asarray(q.coords, dtype=float)
    noise = sigma * M.base.random_tangent_batch(comps, rng)
    return M.point(M.base.exp_batch(comps, noise))


def make_denoise_instance(
    n: int,
    alpha: float,
    sigma: float,
    seed: int,
    period: int | None = None,
    amplitude: float = 1.0,
) -> tuple[DenoiseInstance, ProductManifold]:
    """Square wave on H_2 plus tangent noise, ready for tv_oracle.

    The two levels sit at hyperbolic distance ``amplitude`` on a fixed
    geodesic through the vertex.
    """
    base = Hyperboloid(2)
    M = ProductManifold(base, n)
    vertex = base.vertex()
    direction = base.tangent(vertex, np.array([1.0, 0.0, 0.0]))
    low = vertex
    high = base.exp(vertex, Tangent(vertex, amplitude * direction.coords))
    clean = gen_square_wave(n, low, high, period if period is not None else max(2, n // 4))
    clean = M.point(clean.coords)
    noisy = add_tangent_noise(M, clean, sigma, seed)
    return DenoiseInstance(clean=clean, noisy=noisy, alpha=alpha, n=n, sigma=sigma, seed=seed), M


def sharp_toy(target: Point, M: Manifold) -> SubgradOracle:
    """Distance to a fixed point: 1-Lipschitz, 1-sharp, optimum value 0."""

    def evaluate(x: Point) -> tuple[float, Tangent]:
        d = M.dist(x, target)
        if d <= _COINCIDENCE_TOL:
            return 0.0, M.zero_tangent(x)
        g = Tangent(x, -(1.0 / d) * M.log(x, target).coords)
        return d, g

    return SubgradOracle(eval=evaluate, lip_bound=1.0, f_star_hint=0.0)


def one_norm_toy(target: Point) -> SubgradOracle:
    """Piecewise-linear convex toy f(x) = sum_i |x_i - c_i| on flat space."""
    c = np.asarray(target.coords, dtype=float)

    def evaluate(x: Point) -> tuple[float, Tangent]:
        r = np.asarray(x.coords, dtype=float) - c
        return float(np.abs(r).sum()), Tangent(x, np.sign(r))

    return SubgradOracle(eval=evaluate, lip_bound=math.sqrt(c.size), f_star_hint=0.0)


def squared_distance_toy(target: Point, M: Manifold, lip_bound: float) -> SubgradOracle:
    """f(x) = 1/2 d^2(x, target); gradient -log_x(target).

    Lipschitz only on bounded sets; pass a bound valid for the run region
    (the distance from the start point works, since centers only descend).
    """

    def evaluate(x: Point) -> tuple[float, Tangent]:
        lg = M.log(x, target)
        d = M.norm(x, lg)
        return 0.5 * d * d, Tangent(x, -lg.coords)

    return SubgradOracle(eval=evaluate, lip_bound=lip_bound, f_star_hint=0.0)
