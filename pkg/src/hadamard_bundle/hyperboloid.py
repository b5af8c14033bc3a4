"""Hyperboloid model of hyperbolic space, plus product manifolds.

H_d is the upper sheet { x in R^{d+1} : <x,x>_M = -1, x_{d+1} > 0 } of the
unit hyperboloid under the Minkowski form

    <x, y>_M = sum_{i<=d} x_i y_i - x_{d+1} y_{d+1},

whose restriction to each tangent space is positive definite.  Sectional
curvature is identically -1.  Closed forms:

    exp_x(v) = cosh(|v|) x + sinh(|v|) v / |v|        (x itself at v = 0)
    d(x, y)  = arcosh(-<x,y>_M)
    PT_{y<-x}(v) = v + <v,y>_M / (1 - <x,y>_M) (x + y)

The log map is computed from the tangential part u = y + <x,y>_M x, whose
Minkowski norm is sinh(d); the naive formula divides by that vanishing
quantity, so we scale u by d/sinh(d) with a series fallback below 1e-7.
The arcosh argument is clamped to [1, inf) because floating-point inners
of near-identical points dip below -1.

Cheap surrogates: the retraction normalizes x + v back to the sheet
(failing with NonTimelike once |v| >= 1, a signal to escalate the proximal
parameter), and the weak transporter is the Minkowski-orthogonal
projection onto the target tangent space.

All kernels are vectorized over a leading batch axis; ``ProductManifold``
rides on them, which keeps signal-sized problems fast.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from .errors import (
    ComponentCountMismatch,
    DimensionMismatch,
    MembershipViolation,
    NonTimelike,
    TangencyViolation,
)
from .geometry import GeometryConstants, Manifold, Point

__all__ = [
    "HyperboloidConfig",
    "Hyperboloid",
    "ProductManifold",
    "minkowski_inner",
    "product_tag",
]

_LOG_SERIES_CUTOFF = 1e-7


def minkowski_inner(x: np.ndarray, y: np.ndarray) -> np.ndarray | float:
    """<x,y>_M = sum of spacelike products minus the timelike product.

    Vectorized over leading axes; raises DimensionMismatch if the ambient
    dimensions differ.
    """
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if x.shape[-1] != y.shape[-1]:
        raise DimensionMismatch(f"ambient dims differ: {x.shape[-1]} vs {y.shape[-1]}")
    out = np.sum(x[..., :-1] * y[..., :-1], axis=-1) - x[..., -1] * y[..., -1]
    return float(out) if out.ndim == 0 else out


def _mink_project_tangent(x: np.ndarray, v: np.ndarray) -> np.ndarray:
    # <x,x> = -1, so the Minkowski-orthogonal projector is v + <v,x> x
    ip = np.asarray(minkowski_inner(v, x))
    return v + ip[..., None] * x


@dataclass(frozen=True)
class HyperboloidConfig:
    d: int
    tol_mem: float = 1e-9
    c_r: float = 1.0
    c_t: float = 1.0

    def __post_init__(self) -> None:
        if self.d < 1:
            raise ValueError("intrinsic dimension must be >= 1")


class Hyperboloid(Manifold):
    def __init__(self, d: int, config: HyperboloidConfig | None = None):
        cfg = config if config is not None else HyperboloidConfig(d=d)
        if cfg.d != d:
            raise ValueError("config dimension disagrees with d")
        super().__init__(
            GeometryConstants(k_min=-1.0, c_r=cfg.c_r, c_t=cfg.c_t, tol_mem=cfg.tol_mem)
        )
        self.config = cfg
        self._d = d
        self.tag = f"hyperboloid:{d}"

    def dim(self) -> int:
        return self._d

    def ambient_shape(self) -> tuple[int, ...]:
        return (self._d + 1,)

    def vertex(self) -> Point:
        """The apex (0, ..., 0, 1) of the upper sheet."""
        e = np.zeros(self._d + 1)
        e[-1] = 1.0
        return Point(self.tag, e)

    # largest geodesic length mapped exactly; cosh overflows near 710, and
    # candidates this far only arise while proximal escalation is rejecting
    # them, so capping keeps their evaluation finite without changing any
    # accept/reject decision
    _MAX_GEODESIC = 350.0

    # -- vectorized kernels (leading batch axes allowed) -------------------
    def _k_exp(self, x, v):
        n2 = np.maximum(np.asarray(minkowski_inner(v, v)), 0.0)
        n = np.sqrt(n2)
        over = n > self._MAX_GEODESIC
        if np.any(over):
            scale = np.where(over, self._MAX_GEODESIC / np.where(over, n, 1.0), 1.0)
            v = scale[..., None] * v
            n = np.minimum(n, self._MAX_GEODESIC)
        safe = np.where(n > 0, n, 1.0)
        factor = np.where(n > 0, np.sinh(safe) / safe, 1.0)
        out = np.cosh(n)[..., None] * x + factor[..., None] * v
        return self._k_project_point(out)

    @staticmethod
    def _k_gram(x, y):
        """(c, d) with c = -<x,y>_M clamped to >= 1 and d the distance.

        On the sheet -<x,y> = 1 + <x-y, x-y>_M / 2 exactly, and
        d = arcosh(c) = 2 arcsinh(||x-y||_M / 2); the difference form stays
        accurate where the raw inner product saturates near -1.
        """
        diff = x - y
        dd = np.maximum(np.asarray(minkowski_inner(diff, diff)), 0.0)
        c = 1.0 + 0.5 * dd
        d = 2.0 * np.arcsinh(0.5 * np.sqrt(dd))
        return c, d

    def _k_log(self, x, y):
        return self._k_log_with_dist(x, y)[0]

    def _k_dist(self, x, y):
        return self._k_gram(x, y)[1]

    def _k_pt(self, x, y, v):
        coeff = np.asarray(minkowski_inner(v, y)) / (1.0 - np.asarray(minkowski_inner(x, y)))
        return _mink_project_tangent(y, v + coeff[..., None] * (x + y))

    def _k_transporter(self, x, y, v):
        return _mink_project_tangent(y, v)

    def _k_retract(self, x, v):
        w = x + v
        s = np.asarray(minkowski_inner(w, w))
        if np.any(s >= -1e-14):
            raise NonTimelike("x + v is not timelike; increase the proximal parameter")
        return w / np.sqrt(-s)[..., None]

    def _k_project_point(self, raw):
        s = np.asarray(minkowski_inner(raw, raw))
        if np.any(s >= 0):
            raise NonTimelike("cannot normalize a non-timelike vector onto the sheet")
        out = raw / np.sqrt(-s)[..., None]
        sign = np.sign(out[..., -1])
        return out * sign[..., None]

    def _k_log_with_dist(self, x, y):
        c, d = self._k_gram(x, y)
        u = y - c[..., None] * x
        small = d < _LOG_SERIES_CUTOFF
        safe_d = np.where(small, 1.0, d)
        factor = np.where(small, 1.0 - d * d / 6.0, safe_d / np.sinh(safe_d))
        return _mink_project_tangent(x, factor[..., None] * u), d

    # -- hooks --------------------------------------------------------------
    def _inner(self, x, u, v):
        return float(minkowski_inner(u, v))

    def _exp(self, x, v):
        return self._k_exp(x, v)

    def _log(self, x, y):
        return self._k_log(x, y)

    def _dist(self, x, y):
        return float(self._k_dist(x, y))

    def _parallel_transport(self, x, y, v):
        return self._k_pt(x, y, v)

    def _transporter(self, x, y, v):
        return self._k_transporter(x, y, v)

    def _retract(self, x, v):
        return self._k_retract(x, v)

    def _project_point(self, raw):
        return self._k_project_point(np.asarray(raw, dtype=float))

    def _project_tangent(self, p, raw):
        return _mink_project_tangent(p, np.asarray(raw, dtype=float))

    def _check_point(self, coords):
        scale = 1.0 + float(np.abs(coords).max(initial=0.0)) ** 2
        tol = self._constants.tol_mem * scale
        s = float(minkowski_inner(coords, coords))
        if abs(s + 1.0) > tol:
            raise MembershipViolation(f"<x,x>_M = {s:.12g}, expected -1")
        if coords[-1] <= 0:
            raise MembershipViolation("point lies on the lower sheet")

    def _check_tangent(self, p, v):
        scale = 1.0 + float(np.abs(p).max(initial=0.0)) * float(np.abs(v).max(initial=1.0))
        if abs(float(minkowski_inner(p, v))) > self._constants.tol_mem * scale:
            raise TangencyViolation("vector is not Minkowski-orthogonal to the base point")

    def _random_tangent(self, x, rng):
        # orthonormal Gaussian at the vertex, carried to x by parallel
        # transport (an isometry), so the result is isotropic at x
        v0 = np.zeros(self._d + 1)
        v0[: self._d] = rng.standard_normal(self._d)
        e = np.zeros(self._d + 1)
        e[-1] = 1.0
        return self._k_pt(e, x, v0)

    # -- vectorized batched overrides ----------------------------------------
    def exp_batch(self, ps, vs):
        return self._k_exp(ps, vs)

    def log_batch(self, ps, qs):
        return self._k_log(ps, qs)

    def dist_batch(self, ps, qs):
        return np.asarray(self._k_dist(ps, qs))

    def log_with_dist_batch(self, ps, qs):
        logs, d = self._k_log_with_dist(ps, qs)
        return logs, np.asarray(d)

    def log_with_dist_many(self, p, targets):
        base = self._require_point(p)
        reps = np.broadcast_to(base, targets.shape)
        return self.log_with_dist_batch(reps, targets)

    def inner_batch(self, ps, us, vs):
        return np.asarray(minkowski_inner(us, vs))

    def parallel_transport_batch(self, ps, qs, vs):
        return self._k_pt(ps, qs, vs)

    def transporter_batch(self, ps, qs, vs):
        return self._k_transporter(ps, qs, vs)

    def retract_batch(self, ps, vs):
        return self._k_retract(ps, vs)

    def project_point_batch(self, raws):
        return self._k_project_point(np.asarray(raws, dtype=float))

    def project_tangent_batch(self, ps, raws):
        return _mink_project_tangent(ps, np.asarray(raws, dtype=float))

    def random_tangent_batch(self, ps, rng):
        n = ps.shape[0]
        v0 = np.zeros((n, self._d + 1))
        v0[:, : self._d] = rng.standard_normal((n, self._d))
        e = np.zeros((n, self._d + 1))
        e[:, -1] = 1.0
        return self._k_pt(e, ps, v0)


def product_tag(base_tag: str, n: int) -> str:
    return f"({base_tag})^{n}"


class ProductManifold(Manifold):
    """n-fold product of a base manifold, coordinates stacked along axis 0.

    The metric is the sum of component metrics, distances add in
    quadrature, and all maps act componentwise (results are independent of
    evaluation order).  Error constants aggregate by the max over
    components, which for identical factors is the base constant.
    """

    def __init__(self, base: Manifold, n: int):
        if n < 1:
            raise ValueError("component count must be >= 1")
        super().__init__(replace(base.constants()))
        self.base = base
        self.n = n
        self.tag = product_tag(base.tag, n)

    def dim(self) -> int:
        return self.n * self.base.dim()

    def ambient_shape(self) -> tuple[int, ...]:
        return (self.n, *self.base.ambient_shape())

    def _require_shape(self, coords: np.ndarray) -> np.ndarray:
        arr = np.asarray(coords, dtype=float)
        if arr.shape != self.ambient_shape():
            raise ComponentCountMismatch(
                f"{self.tag}: expected {self.ambient_shape()}, got {arr.shape}"
            )
        return arr

    def _split(self, arr: np.ndarray) -> np.ndarray:
        return self._require_shape(arr)

    def component(self, p: Point, i: int) -> Point:
        return Point(self.base.tag, np.asarray(p.coords)[i])

    def from_components(self, coords_list) -> Point:
        stack = np.stack([np.asarray(c, dtype=float) for c in coords_list])
        return self.point(stack)

    # -- hooks delegate to the base batched API -----------------------------
    def _inner(self, p, u, v):
        return float(np.sum(self.base.inner_batch(p, u, v)))

    def _exp(self, p, v):
        return self.base.exp_batch(self._split(p), self._split(v))

    def _log(self, p, q):
        return self.base.log_batch(self._split(p), self._split(q))

    def _dist(self, p, q):
        d = self.base.dist_batch(self._split(p), self._split(q))
        return float(np.sqrt(np.sum(d * d)))

    def _parallel_transport(self, p, q, v):
        return self.base.parallel_transport_batch(p, q, v)

    def _transporter(self, p, q, v):
        return self.base.transporter_batch(p, q, v)

    def _retract(self, p, v):
        return self.base.retract_batch(p, v)

    def _project_point(self, raw):
        return self.base.project_point_batch(self._split(raw))

    def _project_tangent(self, p, raw):
        return self.base.project_tangent_batch(p, self._split(raw))

    def _check_point(self, coords):
        for i in range(self.n):
            self.base._check_point(coords[i])

    def _check_tangent(self, p, v):
        for i in range(self.n):
            self.base._check_tangent(p[i], v[i])

    def _random_tangent(self, p, rng):
        return self.base.random_tangent_batch(p, rng)

    def gram(self, p, tangents):
        base = self._require_point(p)
        coords = [self._require_tangent(p, t) for t in tangents]
        k = len(coords)
        G = np.empty((k, k))
        for i in range(k):
            for j in range(i, k):
                G[i, j] = G[j, i] = float(
                    np.sum(self.base.inner_batch(base, coords[i], coords[j]))
                )
        return G
