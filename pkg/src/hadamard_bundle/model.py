"""Piecewise-affine lower model on a tangent space and its proximal step.

The model is a max of at most three affine cuts  v -> b + <g, v>_x  on the
tangent space at the current proximal center: an anchor cut (value and
subgradient at the center, always present), the newest transported cut,
and an aggregate cut that compresses the previous model.  The regularized
subproblem

    min_v  max_j { b_j + <g_j, v>_x }  +  (rho/2) ||v||_x^2

is solved exactly by dual active-set enumeration.  For a candidate active
set S the optimal weights theta solve an equality-constrained maximization
of the concave dual

    D(theta) = sum_j theta_j b_j - (1/2 rho) || sum_j theta_j g_j ||^2

over the simplex; a subset is accepted iff its stationary weights are
dual-feasible (inside [0,1] up to 1e-10) and no inactive cut exceeds the
active value (up to 1e-10), which together are the KKT conditions of this
strongly convex problem.  Ties are broken by smallest cardinality, then
lowest index, so runs are bit-reproducible.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import BaseMismatch, DegenerateModel
from .geometry import Manifold, Point, Tangent

__all__ = [
    "CUT_ANCHOR",
    "CUT_NEW",
    "CUT_AGGREGATE",
    "Cut",
    "ThreeCutModel",
    "SolveResult",
    "anchor_model",
    "solve_prox_subproblem",
    "two_cut_theta",
]

CUT_ANCHOR = "anchor"
CUT_NEW = "new"
CUT_AGGREGATE = "aggregate"

DUAL_FEAS_TOL = 1e-10
PRIMAL_SLACK = 1e-10


@dataclass
class Cut:
    """One affine minorant v -> intercept + <gradient, v> at the model center."""

    intercept: float
    gradient: Tangent
    kind: str


@dataclass
class ThreeCutModel:
    """Max of 1..3 cuts based at ``center``; the anchor cut is index 0."""

    center: Point
    cuts: list[Cut]

    def __post_init__(self) -> None:
        if not 1 <= len(self.cuts) <= 3:
            raise ValueError("model must hold between one and three cuts")
        if self.cuts[0].kind != CUT_ANCHOR:
            raise ValueError("anchor cut must be present at index 0")
        for c in self.cuts:
            if not np.array_equal(c.gradient.base.coords, self.center.coords):
                raise BaseMismatch(f"{c.kind} cut gradient is not based at the model center")

    @property
    def anchor(self) -> Cut:
        return self.cuts[0]

    def value(self, M: Manifold, v: Tangent) -> float:
        return max(c.intercept + M.inner(self.center, c.gradient, v) for c in self.cuts)


def anchor_model(M: Manifold, center: Point, f_center: float, g: Tangent) -> ThreeCutModel:
    """Fresh single-cut model after a descent step (or at initialization)."""
    return ThreeCutModel(center, [Cut(f_center, g, CUT_ANCHOR)])


@dataclass
class SolveResult:
    """Exact minimizer of the regularized model subproblem.

    direction = -(1/rho) sum_j weights_j grad_j over the active set;
    model_value is the model evaluated at the direction, and
    model_prox_value adds the quadratic penalty.
    """

    direction: Tangent
    weights: np.ndarray
    active_set: tuple[int, ...]
    model_value: float
    model_prox_value: float
    direction_norm: float


def _subsets(m: int):
    singles = [(i,) for i in range(m)]
    pairs = [(i, j) for i in range(m) for j in range(i + 1, m)]
    triples = [tuple(range(m))] if m == 3 else []
    return singles + pairs + triples


def solve_prox_subproblem(model: ThreeCutModel, rho: float, M: Manifold) -> SolveResult:
    if rho <= 0:
        raise ValueError("rho must be positive")
    cuts = model.cuts
    m = len(cuts)
    b = np.array([c.intercept for c in cuts])
    if not np.all(np.isfinite(b)):
        raise DegenerateModel("non-finite cut intercept")
    G = M.gram(model.center, [c.gradient for c in cuts])

    for S in _subsets(m):
        theta = _stationary_weights(S, b, G, rho)
        if theta is None:
            continue
        if theta.min() < -DUAL_FEAS_TOL or theta.max() > 1.0 + DUAL_FEAS_TOL:
            continue
        theta = np.clip(theta, 0.0, 1.0)
        theta = theta / theta.sum()
        # value of every cut at the candidate direction, via the Gram matrix
        vals = b - (G[:, list(S)] @ theta) / rho
        active_val = max(vals[j] for j in S)
        inactive = [j for j in range(m) if j not in S]
        if any(vals[j] > active_val + PRIMAL_SLACK for j in inactive):
            continue
        coords = np.zeros_like(cuts[0].gradient.coords)
        for t, j in zip(theta, S):
            coords = coords - (t / rho) * cuts[j].gradient.coords
        Gs = G[np.ix_(list(S), list(S))]
        dir_norm_sq = max(float(theta @ Gs @ theta), 0.0) / rho**2
        model_value = float(vals.max())
        return SolveResult(
            direction=Tangent(model.center, coords),
            weights=theta,
            active_set=S,
            model_value=model_value,
            model_prox_value=model_value + 0.5 * rho * dir_norm_sq,
            direction_norm=dir_norm_sq**0.5,
        )
    raise DegenerateModel("no active set satisfied the feasibility checks")


def _stationary_weights(S, b, G, rho):
    """Stationary dual weights on the face where exactly S is active."""
    if len(S) == 1:
        return np.array([1.0])
    if len(S) == 2:
        i, j = S
        den = G[i, i] - 2.0 * G[i, j] + G[j, j]
        if den <= 1e-300:
            return None  # parallel cut gradients; singletons cover this face
        t = (rho * (b[i] - b[j]) + G[j, j] - G[i, j]) / den
        return np.array([t, 1.0 - t])
    i, j, k = S
    # equalize reduced costs of cuts i and j against k, with theta_k eliminated
    A = np.empty((2, 2))
    rhs = np.empty(2)
    for row, a in enumerate((i, j)):
        A[row, 0] = (G[i, a] - G[i, k]) - (G[k, a] - G[k, k])
        A[row, 1] = (G[j, a] - G[j, k]) - (G[k, a] - G[k, k])
        rhs[row] = rho * (b[a] - b[k]) - (G[k, a] - G[k, k])
    try:
        t = np.linalg.solve(A, rhs)
    except np.linalg.LinAlgError:
        return None
    return np.array([t[0], t[1], 1.0 - t[0] - t[1]])


def two_cut_theta(gap: float, g_hat: Tangent, s: Tangent, rho: float, M: Manifold) -> tuple[float, Tangent]:
    """Closed form for the two-cut subproblem anchored at the candidate.

    For cuts c1 + <g_hat, v - d> and c2 + <s, v - d> with s = -rho d and
    gap = c1 - c2 >= 0, the minimizer of their max plus (rho/2)||v||^2 is

        theta = min{ 1, rho gap / ||g_hat - s||^2 },
        v     = -(1/rho) (theta g_hat + (1 - theta) s).

    When g_hat = s the cuts are parallel and any weight is optimal; theta
    is 1 by convention.
    """
    if rho <= 0:
        raise ValueError("rho must be positive")
    if gap < 0:
        raise ValueError("gap must be nonnegative")
    if not np.array_equal(g_hat.base.coords, s.base.coords):
        raise BaseMismatch("two-cut tangents must share a base point")
    diff = Tangent(g_hat.base, g_hat.coords - s.coords)
    den = M.inner(g_hat.base, diff, diff)
    theta = 1.0 if den <= 1e-300 else min(1.0, rho * gap / den)
    coords = -(theta * g_hat.coords + (1.0 - theta) * s.coords) / rho
    return theta, Tangent(g_hat.base, coords)
