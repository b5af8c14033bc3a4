"""Manifold interface, numerical constants, and the flat realization.

Every geometry used by the bundle method implements the same operation
table: a Riemannian inner product per point, exponential/logarithmic maps,
the distance they induce, parallel transport, plus two cheap surrogates --
a first-order retraction ``R_x`` (agrees with ``exp_x`` to first order at
the origin) and a weak transporter ``T_{y<-x}`` (identity at coincident
base points, approximates parallel transport with error linear in the
base-point distance).

Tangent vectors carry their base point explicitly; mixing bases is a
checked error rather than silent nonsense, because the bundle method
recenters models between tangent spaces and a silent base mismatch is the
dominant bug class.  All operations are pure functions of their inputs and
safe to call concurrently.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np

from .errors import (
    BaseMismatch,
    DimensionMismatch,
    MembershipViolation,
    RetractionFailure,
    TangencyViolation,
)

__all__ = [
    "Point",
    "Tangent",
    "GeometryConstants",
    "Manifold",
    "Euclidean",
    "check_point",
    "check_tangent",
    "configure_primitives",
    "estimate_primitive_constants",
]


@dataclass(frozen=True, eq=False)
class Point:
    """Manifold element in an explicit ambient representation.

    ``manifold`` is the tag of the geometry the coordinates live on; it is
    checked whenever points from different sources meet in one operation.
    """

    manifold: str
    coords: np.ndarray


@dataclass(frozen=True, eq=False)
class Tangent:
    """Tangent vector with an explicit base point, same ambient layout."""

    base: Point
    coords: np.ndarray


@dataclass(frozen=True)
class GeometryConstants:
    """Scalar bounds governing the curvature/inexactness shift.

    k_min    lower bound on sectional curvature (<= 0)
    c_r      retraction error constant: d(exp_x(v), R_x(v)) <= c_r ||v||^2
    c_t      transporter error constant: ||T(v) - PT(v)|| <= c_t ||v|| d(x,y)
    pd_margin  positive-definiteness safeguard for the SPD retraction,
               relative to the spectral norm of the base point
    tol_mem  membership/tangency tolerance, relative to coordinate size
    """

    k_min: float = 0.0
    c_r: float = 0.0
    c_t: float = 0.0
    pd_margin: float = 1e-10
    tol_mem: float = 1e-9

    def __post_init__(self) -> None:
        if self.k_min > 0:
            raise ValueError("k_min must be <= 0 (Hadamard setting)")
        if self.c_r < 0 or self.c_t < 0:
            raise ValueError("error constants must be nonnegative")
        if self.pd_margin <= 0 or self.tol_mem <= 0:
            raise ValueError("margins must be positive")

    @property
    def curvature_coeff(self) -> float:
        """The factor 2 sqrt(-k_min) entering the model shift."""
        return 2.0 * math.sqrt(-self.k_min)


class Manifold:
    """Operation table shared by all geometries.

    Subclasses implement the ``_``-prefixed hooks on raw coordinate
    arrays; the public methods add envelope checks (tags, tangent bases)
    and re-project results onto the manifold/tangent space to shed the
    floating-point drift of composed primitives.

    The ``*_batch`` methods operate on coordinate arrays stacked along the
    leading axis.  Defaults loop over the hooks; geometries with cheap
    closed forms override them (the hyperboloid does, which is what makes
    product-manifold signals fast).
    """

    tag: str = "abstract"

    def __init__(self, constants: GeometryConstants):
        self._constants = constants

    # -- hooks ---------------------------------------------------------
    def dim(self) -> int:
        raise NotImplementedError

    def ambient_shape(self) -> tuple[int, ...]:
        raise NotImplementedError

    def _inner(self, p: np.ndarray, u: np.ndarray, v: np.ndarray) -> float:
        raise NotImplementedError

    def _exp(self, p: np.ndarray, v: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def _log(self, p: np.ndarray, q: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def _dist(self, p: np.ndarray, q: np.ndarray) -> float:
        raise NotImplementedError

    def _parallel_transport(self, p: np.ndarray, q: np.ndarray, v: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def _transporter(self, p: np.ndarray, q: np.ndarray, v: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def _retract(self, p: np.ndarray, v: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def _project_point(self, raw: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def _project_tangent(self, p: np.ndarray, raw: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def _check_point(self, coords: np.ndarray) -> None:
        raise NotImplementedError

    def _check_tangent(self, p: np.ndarray, v: np.ndarray) -> None:
        raise NotImplementedError

    def _random_tangent(self, p: np.ndarray, rng: np.random.Generator) -> np.ndarray:
        raise NotImplementedError

    # -- envelope helpers ----------------------------------------------
    def constants(self) -> GeometryConstants:
        return self._constants

    def _require_shape(self, coords: np.ndarray) -> np.ndarray:
        arr = np.asarray(coords, dtype=float)
        if arr.shape != self.ambient_shape():
            raise DimensionMismatch(
                f"{self.tag}: expected coords of shape {self.ambient_shape()}, got {arr.shape}"
            )
        return arr

    def _require_point(self, p: Point) -> np.ndarray:
        if p.manifold != self.tag:
            raise BaseMismatch(f"point tagged {p.manifold!r} used on manifold {self.tag!r}")
        return self._require_shape(p.coords)

    def _require_tangent(self, p: Point, v: Tangent) -> np.ndarray:
        if v.base.manifold != self.tag:
            raise BaseMismatch(f"tangent based on {v.base.manifold!r} used on {self.tag!r}")
        if v.base.coords is not p.coords and not np.array_equal(v.base.coords, p.coords):
            raise BaseMismatch("tangent base differs from the operation's base point")
        return self._require_shape(v.coords)

    # -- public operation table ----------------------------------------
    def point(self, coords: np.ndarray) -> Point:
        """Wrap raw coordinates after projecting them onto the manifold."""
        return Point(self.tag, self._project_point(self._require_shape(coords)))

    def tangent(self, p: Point, coords: np.ndarray) -> Tangent:
        base = self._require_point(p)
        return Tangent(p, self._project_tangent(base, self._require_shape(coords)))

    def zero_tangent(self, p: Point) -> Tangent:
        self._require_point(p)
        return Tangent(p, np.zeros(self.ambient_shape()))

    def inner(self, p: Point, u: Tangent, v: Tangent) -> float:
        base = self._require_point(p)
        return float(self._inner(base, self._require_tangent(p, u), self._require_tangent(p, v)))

    def gram(self, p: Point, tangents) -> np.ndarray:
        """Matrix of pairwise inner products of tangents at p."""
        base = self._require_point(p)
        coords = [self._require_tangent(p, t) for t in tangents]
        k = len(coords)
        G = np.empty((k, k))
        for i in range(k):
            for j in range(i, k):
                G[i, j] = G[j, i] = self._inner(base, coords[i], coords[j])
        return G

    def norm(self, p: Point, v: Tangent) -> float:
        val = self.inner(p, v, v)
        return math.sqrt(max(val, 0.0))

    def dist(self, p: Point, q: Point) -> float:
        return float(self._dist(self._require_point(p), self._require_point(q)))

    def exp(self, p: Point, v: Tangent) -> Point:
        base = self._require_point(p)
        out = self._exp(base, self._require_tangent(p, v))
        return Point(self.tag, self._project_point(out))

    def log(self, p: Point, q: Point) -> Tangent:
        base = self._require_point(p)
        out = self._log(base, self._require_point(q))
        return Tangent(p, self._project_tangent(base, out))

    def parallel_transport(self, p: Point, q: Point, v: Tangent) -> Tangent:
        base = self._require_point(p)
        target = self._require_point(q)
        out = self._parallel_transport(base, target, self._require_tangent(p, v))
        return Tangent(q, self._project_tangent(target, out))

    def transporter(self, p: Point, q: Point, v: Tangent) -> Tangent:
        base = self._require_point(p)
        target = self._require_point(q)
        out = self._transporter(base, target, self._require_tangent(p, v))
        return Tangent(q, self._project_tangent(target, out))

    def retract(self, p: Point, v: Tangent) -> Point:
        base = self._require_point(p)
        out = self._retract(base, self._require_tangent(p, v))
        return Point(self.tag, self._project_point(out))

    def project_point(self, raw: np.ndarray) -> Point:
        return self.point(raw)

    def project_tangent(self, p: Point, raw: np.ndarray) -> Tangent:
        return self.tangent(p, raw)

    def random_tangent(self, p: Point, rng: np.random.Generator, scale: float = 1.0) -> Tangent:
        """Gaussian tangent vector, isotropic in a metric-orthonormal basis."""
        base = self._require_point(p)
        out = scale * self._random_tangent(base, rng)
        return Tangent(p, self._project_tangent(base, out))

    # -- batched variants (stacked along axis 0) ------------------------
    def exp_batch(self, ps: np.ndarray, vs: np.ndarray) -> np.ndarray:
        return np.stack([self._project_point(self._exp(p, v)) for p, v in zip(ps, vs)])

    def log_batch(self, ps: np.ndarray, qs: np.ndarray) -> np.ndarray:
        return np.stack([self._project_tangent(p, self._log(p, q)) for p, q in zip(ps, qs)])

    def dist_batch(self, ps: np.ndarray, qs: np.ndarray) -> np.ndarray:
        return np.array([self._dist(p, q) for p, q in zip(ps, qs)])

    def log_with_dist_batch(self, ps: np.ndarray, qs: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        return self.log_batch(ps, qs), self.dist_batch(ps, qs)

    def log_with_dist_many(self, p: Point, targets: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        """Logs and distances from one base point to a stack of targets."""
        base = self._require_point(p)
        reps = np.broadcast_to(base, targets.shape)
        return self.log_with_dist_batch(reps, targets)

    def inner_batch(self, ps: np.ndarray, us: np.ndarray, vs: np.ndarray) -> np.ndarray:
        return np.array([self._inner(p, u, v) for p, u, v in zip(ps, us, vs)])

    def parallel_transport_batch(self, ps: np.ndarray, qs: np.ndarray, vs: np.ndarray) -> np.ndarray:
        return np.stack(
            [
                self._project_tangent(q, self._parallel_transport(p, q, v))
                for p, q, v in zip(ps, qs, vs)
            ]
        )

    def transporter_batch(self, ps: np.ndarray, qs: np.ndarray, vs: np.ndarray) -> np.ndarray:
        return np.stack(
            [self._project_tangent(q, self._transporter(p, q, v)) for p, q, v in zip(ps, qs, vs)]
        )

    def retract_batch(self, ps: np.ndarray, vs: np.ndarray) -> np.ndarray:
        return np.stack([self._project_point(self._retract(p, v)) for p, v in zip(ps, vs)])

    def project_point_batch(self, raws: np.ndarray) -> np.ndarray:
        return np.stack([self._project_point(r) for r in raws])

    def project_tangent_batch(self, ps: np.ndarray, raws: np.ndarray) -> np.ndarray:
        return np.stack([self._project_tangent(p, r) for p, r in zip(ps, raws)])

    def random_tangent_batch(self, ps: np.ndarray, rng: np.random.Generator) -> np.ndarray:
        return np.stack(
            [self._project_tangent(p, self._random_tangent(p, rng)) for p in ps]
        )


def check_point(M: Manifold, p: Point) -> None:
    """Raise unless ``p`` satisfies the membership invariants of ``M``.

    Raises DimensionMismatch on a shape/tag mismatch and
    MembershipViolation (with details) otherwise.
    """
    if p.manifold != M.tag:
        raise DimensionMismatch(f"point tagged {p.manifold!r} checked against {M.tag!r}")
    coords = np.asarray(p.coords, dtype=float)
    if coords.shape != M.ambient_shape():
        raise DimensionMismatch(
            f"{M.tag}: expected shape {M.ambient_shape()}, got {coords.shape}"
        )
    if not np.all(np.isfinite(coords)):
        raise MembershipViolation("coordinates are not finite")
    M._check_point(coords)


def check_tangent(M: Manifold, p: Point, v: Tangent) -> None:
    """Raise TangencyViolation unless ``v`` lies in the tangent space at ``p``."""
    check_point(M, p)
    coords = np.asarray(v.coords, dtype=float)
    if coords.shape != M.ambient_shape():
        raise DimensionMismatch(
            f"{M.tag}: expected tangent shape {M.ambient_shape()}, got {coords.shape}"
        )
    if v.base.manifold != M.tag or not np.array_equal(v.base.coords, p.coords):
        raise BaseMismatch("tangent is based at a different point")
    if not np.all(np.isfinite(coords)):
        raise TangencyViolation("tangent coordinates are not finite")
    M._check_tangent(np.asarray(p.coords, dtype=float), coords)


class Euclidean(Manifold):
    """Flat space; the degeneration target of every curvature formula.

    exp is vector addition, transports are the identity, and all error
    constants vanish, so the bundle method's shift is identically zero and
    backtracking never triggers here.
    """

    def __init__(self, d: int):
        if d < 1:
            raise ValueError("dimension must be >= 1")
        super().__init__(GeometryConstants(k_min=0.0, c_r=0.0, c_t=0.0))
        self._d = d
        self.tag = f"euclidean:{d}"

    def dim(self) -> int:
        return self._d

    def ambient_shape(self) -> tuple[int, ...]:
        return (self._d,)

    def _inner(self, p, u, v):
        return float(np.dot(u, v))

    def _exp(self, p, v):
        return p + v

    def _log(self, p, q):
        return q - p

    def _dist(self, p, q):
        return float(np.linalg.norm(q - p))

    def _parallel_transport(self, p, q, v):
        return v

    def _transporter(self, p, q, v):
        return v

    def _retract(self, p, v):
        return p + v

    def _project_point(self, raw):
        return np.asarray(raw, dtype=float)

    def _project_tangent(self, p, raw):
        return np.asarray(raw, dtype=float)

    def _check_point(self, coords):
        pass

    def _check_tangent(self, p, v):
        pass

    def _random_tangent(self, p, rng):
        return rng.standard_normal(self._d)


class _PrimitiveView(Manifold):
    """View of a manifold with retraction/transporter rebound.

    ``primitives="exact"`` replaces the retraction with the exponential
    map (and zeroes c_r); ``transport="parallel"`` replaces the weak
    transporter with parallel transport (and zeroes c_t).  Points keep the
    wrapped manifold's tag, so they move freely between views.
    """

    def __init__(self, inner: Manifold, primitives: str, transport: str):
        if primitives not in ("exact", "retraction"):
            raise ValueError(f"unknown primitives mode {primitives!r}")
        if transport not in ("parallel", "projection"):
            raise ValueError(f"unknown transport mode {transport!r}")
        base_constants = inner.constants()
        constants = replace(
            base_constants,
            c_r=0.0 if primitives == "exact" else base_constants.c_r,
            c_t=0.0 if transport == "parallel" else base_constants.c_t,
        )
        super().__init__(constants)
        self._m = inner
        self._exact = primitives == "exact"
        self._parallel = transport == "parallel"
        self.tag = inner.tag

    def __getattr__(self, name):
        # view semantics: anything not overridden comes from the wrapped manifold
        return getattr(self._m, name)

    def dim(self):
        return self._m.dim()

    def ambient_shape(self):
        return self._m.ambient_shape()

    def _inner(self, p, u, v):
        return self._m._inner(p, u, v)

    def _exp(self, p, v):
        return self._m._exp(p, v)

    def _log(self, p, q):
        return self._m._log(p, q)

    def _dist(self, p, q):
        return self._m._dist(p, q)

    def _parallel_transport(self, p, q, v):
        return self._m._parallel_transport(p, q, v)

    def _transporter(self, p, q, v):
        if self._parallel:
            return self._m._parallel_transport(p, q, v)
        return self._m._transporter(p, q, v)

    def _retract(self, p, v):
        if self._exact:
            return self._m._exp(p, v)
        return self._m._retract(p, v)

    def _project_point(self, raw):
        return self._m._project_point(raw)

    def _project_tangent(self, p, raw):
        return self._m._project_tangent(p, raw)

    def _check_point(self, coords):
        self._m._check_point(coords)

    def _check_tangent(self, p, v):
        self._m._check_tangent(p, v)

    def _random_tangent(self, p, rng):
        return self._m._random_tangent(p, rng)

    # keep the fast paths of the wrapped manifold
    def exp_batch(self, ps, vs):
        return self._m.exp_batch(ps, vs)

    def log_batch(self, ps, qs):
        return self._m.log_batch(ps, qs)

    def dist_batch(self, ps, qs):
        return self._m.dist_batch(ps, qs)

    def log_with_dist_batch(self, ps, qs):
        return self._m.log_with_dist_batch(ps, qs)

    def log_with_dist_many(self, p, targets):
        return self._m.log_with_dist_many(Point(self._m.tag, p.coords), targets)

    def inner_batch(self, ps, us, vs):
        return self._m.inner_batch(ps, us, vs)

    def gram(self, p, tangents):
        return self._m.gram(p, tangents)

    def parallel_transport_batch(self, ps, qs, vs):
        return self._m.parallel_transport_batch(ps, qs, vs)

    def transporter_batch(self, ps, qs, vs):
        if self._parallel:
            return self._m.parallel_transport_batch(ps, qs, vs)
        return self._m.transporter_batch(ps, qs, vs)

    def retract_batch(self, ps, vs):
        if self._exact:
            return self._m.exp_batch(ps, vs)
        return self._m.retract_batch(ps, vs)

    def project_point_batch(self, raws):
        return self._m.project_point_batch(raws)

    def project_tangent_batch(self, ps, raws):
        return self._m.project_tangent_batch(ps, raws)

    def random_tangent_batch(self, ps, rng):
        return self._m.random_tangent_batch(ps, rng)


def configure_primitives(M: Manifold, primitives: str = "retraction", transport: str = "projection") -> Manifold:
    """Bind the algorithm-facing primitive pair of a manifold.

    The bundle method only ever calls ``retract`` and ``transporter``;
    this selects whether those are the cheap surrogates or the exact maps,
    and adjusts the error constants accordingly.
    """
    if primitives == "retraction" and transport == "projection":
        return M
    return _PrimitiveView(M, primitives, transport)


def estimate_primitive_constants(
    M: Manifold,
    region: list[Point],
    radius: float,
    n_samples: int,
    seed: int,
) -> tuple[float, float]:
    """Empirical calibration of the retraction/transporter error constants.

    Samples tangent vectors of norm up to ``radius`` at the region points
    and returns the largest observed ratios

        d(exp_x(v), R_x(v)) / ||v||^2      (retraction error)
        ||T(v) - PT(v)||_y / (||v|| d(x,y))  (transporter error)

    Deterministic given the seed.  These are lower bounds on the true
    constants over the region; inflate them before trusting the shift.
    """
    if n_samples <= 0:
        raise ValueError("n_samples must be positive")
    if radius <= 0:
        raise ValueError("radius must be positive")
    if not region:
        raise ValueError("region must contain at least one point")
    for p in region:
        check_point(M, p)
    rng = np.random.default_rng(seed)
    c_r_max = 0.0
    c_t_max = 0.0
    for i in range(n_samples):
        x = region[i % len(region)]
        # retraction error along a random direction, shrinking on failures
        v = _scaled_tangent(M, x, rng, radius * float(rng.uniform(0.05, 1.0)))
        for _ in range(60):
            try:
                y_ret = M.retract(x, v)
            except RetractionFailure:
                v = Tangent(x, 0.5 * v.coords)
                continue
            break
        else:
            continue
        y_exp = M.exp(x, v)
        nv = M.norm(x, v)
        if nv > 1e-12:
            c_r_max = max(c_r_max, M.dist(y_exp, y_ret) / nv**2)
        # transporter error toward a second random point
        w = _scaled_tangent(M, x, rng, radius * float(rng.uniform(0.05, 1.0)))
        y = M.exp(x, w)
        d_xy = M.dist(x, y)
        u = _scaled_tangent(M, x, rng, 1.0)
        nu = M.norm(x, u)
        if d_xy > 1e-12 and nu > 1e-12:
            t_u = M.transporter(x, y, u)
            p_u = M.parallel_transport(x, y, u)
            err = M.norm(y, Tangent(y, t_u.coords - p_u.coords))
            c_t_max = max(c_t_max, err / (nu * d_xy))
    return c_r_max, c_t_max


def _scaled_tangent(M: Manifold, x: Point, rng: np.random.Generator, target: float) -> Tangent:
    v = M.random_tangent(x, rng)
    nv = M.norm(x, v)
    if nv <= 1e-300:
        return v
    return Tangent(x, (target / nv) * v.coords)
