"""Proximal bundle method with curvature-aware shifts and backtracking.

One iteration from center x with model f-hat and proximal parameter rho:

  1. solve the regularized model subproblem for a direction d,
  2. retract the candidate z = R_x(d) and query the oracle there,
  3. shift bookkeeping: the candidate lives within the radius
         alpha = 2||g_anchor||/rho + c_r (2||g_anchor||/rho)^2
     of the center, and the transported cut through z must be lowered by
         kappa = (2 sqrt(-k_min) + c_r + 2 c_t) ||g_z|| alpha^2
     to stay a local minorant despite curvature and inexact primitives,
  4. accept z as the new center if the actual decrease is at least a beta
     fraction of the model-predicted decrease; otherwise keep the center
     and refine the model with the newest (shifted) cut plus an aggregate
     cut that compresses everything older.

The proximal parameter either stays put, follows a growth-aware schedule,
or is doubled until the descent test or the controlled-shift condition
     (1/2) (f(x) - model prox value)  >=  kappa / (1 - beta)
holds; retraction failures (losing positive definiteness, leaving the
hyperboloid) trigger the same doubling.  In flat space every constant is
zero, the shift vanishes, and no doubling ever happens.

Two subgradient norms play different roles: the anchor subgradient bounds
the step radius (it certifies ||d|| <= 2||g_anchor||/rho through the
anchor cut), while the newest subgradient scales the shift.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass, field, replace
from typing import Callable, Optional

import numpy as np

from .errors import BudgetExhausted, RetractionFailure
from .geometry import GeometryConstants, Manifold, Point, Tangent
from .model import (
    CUT_AGGREGATE,
    CUT_NEW,
    Cut,
    SolveResult,
    ThreeCutModel,
    anchor_model,
    solve_prox_subproblem,
)

__all__ = [
    "STEP_DESCENT",
    "STEP_NULL",
    "STEP_BACKTRACK",
    "Counters",
    "ScheduleParams",
    "TraceRecord",
    "BundleState",
    "RunConfig",
    "RunResult",
    "StepInfo",
    "candidate_radius",
    "model_shift",
    "descent_test",
    "null_progress_test",
    "model_prox_gap",
    "transported_subgrad_bound",
    "constant_A",
    "rho_tilde",
    "growth_schedule_rho",
    "delta_swap",
    "prox_gap_lower_bound",
    "null_step_bound",
    "recurrence_check",
    "backtrack_rho",
    "rpbm_step",
    "run",
]

STEP_DESCENT = "descent"
STEP_NULL = "null"
STEP_BACKTRACK = "backtrack"


# ---------------------------------------------------------------------------
# scalar formulas
# ---------------------------------------------------------------------------

def candidate_radius(g_norm: float, rho: float, c_r: float) -> float:
    """Bound on the center-to-candidate distance, 2g/rho + c_r (2g/rho)^2."""
    if rho <= 0:
        raise ValueError("rho must be positive")
    r = 2.0 * g_norm / rho
    return r + c_r * r * r


def model_shift(g_new_norm: float, radius: float, constants: GeometryConstants) -> float:
    """Intercept shift (2 sqrt(-k_min) + c_r + 2 c_t) ||g_new|| radius^2."""
    return (constants.curvature_coeff + constants.c_r + 2.0 * constants.c_t) * g_new_norm * radius**2


def descent_test(f_x: float, f_z: float, model_pred: float, beta: float) -> bool:
    """True iff the candidate achieved a beta fraction of the predicted decrease."""
    return beta * (f_x - model_pred) <= f_x - f_z


def null_progress_test(delta_tilde: float, kappa: float, beta: float) -> bool:
    """True iff the shift is dominated by the model gap: dt/2 - kappa/(1-beta) >= 0."""
    return 0.5 * delta_tilde - kappa / (1.0 - beta) >= 0.0


def model_prox_gap(f_center: float, solve: SolveResult) -> float:
    """Gap between the center value and the regularized model optimum."""
    return f_center - solve.model_prox_value


def transported_subgrad_bound(rho0: float, lip: float, c_r: float, c_t: float) -> float:
    """Factor hbar with ||transported subgradient|| <= hbar * lip along a run."""
    if rho0 <= 0:
        raise ValueError("rho0 must be positive")
    r = 2.0 * lip / rho0
    return 1.0 + c_t * (r + c_r * r * r)


def constant_A(k_min: float, c_r: float, c_t: float, lip: float, beta: float) -> float:
    """Aggregate error constant driving the proximal-parameter thresholds."""
    if not 0.0 < beta < 1.0:
        raise ValueError("beta must lie in (0, 1)")
    return 16.0 * (2.0 * math.sqrt(-k_min) + 2.0 * c_t + c_r) * (1.0 + c_r) ** 2 * lip**3 / (1.0 - beta)


def rho_tilde(eps: float, dist_bound: float, a_const: float, lip: float) -> float:
    """Proximal parameter beyond which backtracking provably stops doubling."""
    if eps <= 0:
        raise ValueError("eps must be positive")
    return max(
        (math.sqrt(a_const) * dist_bound / eps) ** 2,
        (math.sqrt(a_const) * math.sqrt(lip) * dist_bound / eps) ** (2.0 / 3.0),
        (a_const / eps) ** 0.5,
        (a_const * lip / eps) ** 0.25,
    )


@dataclass
class ScheduleParams:
    """Proximal-parameter policy: backtracking, constant, or growth-aware.

    Growth mode implements the idealized schedule that exploits p-th order
    growth with modulus mu; it needs the optimal value, the Lipschitz
    bound, and the aggregate constant A, so it is a diagnostic/benchmark
    tool rather than a practical default.
    """

    mode: str = "backtracking"
    mu: Optional[float] = None
    p: Optional[float] = None
    f_star: Optional[float] = None
    lip: Optional[float] = None
    a_const: Optional[float] = None

    def __post_init__(self) -> None:
        if self.mode not in ("backtracking", "constant", "growth"):
            raise ValueError(f"unknown schedule mode {self.mode!r}")
        if self.mode == "growth":
            missing = [
                name
                for name in ("mu", "p", "f_star", "lip", "a_const")
                if getattr(self, name) is None
            ]
            if missing:
                raise ValueError(f"growth schedule requires {', '.join(missing)}")
            if self.mu <= 0 or self.p < 1 or self.lip <= 0:
                raise ValueError("growth schedule needs mu > 0, p >= 1, lip > 0")


def growth_schedule_rho(delta: float, params: ScheduleParams) -> float:
    """Idealized growth-aware proximal parameter at objective gap delta."""
    if params.mode != "growth":
        raise ValueError("growth_schedule_rho needs Growth-mode parameters")
    if delta <= 0:
        raise ValueError("delta must be positive")
    A, mu, p, lip = params.a_const, params.mu, params.p, params.lip
    return max(
        A * mu ** (-2.0 / p) * delta ** ((2.0 - 2.0 * p) / p),
        (A * lip * mu ** (-2.0 / p)) ** (1.0 / 3.0) * delta ** ((2.0 - 2.0 * p) / (3.0 * p)),
        (A / delta) ** 0.5,
        (A * lip / delta) ** 0.25,
        mu ** (2.0 / p) * delta ** ((p - 2.0) / p),
    )


def delta_swap(params: ScheduleParams) -> float:
    """Objective gap below which the growth schedule enters its final phase.

    Diagnostic only; positive inputs produce a positive threshold.  The
    formula changes character at p = 4/3, where two schedule terms share
    the dominant exponent.
    """
    A, mu, p, lip = params.a_const, params.mu, params.p, params.lip
    if A is None or mu is None or p is None or lip is None:
        raise ValueError("delta_swap requires mu, p, lip, a_const")
    if A <= 0 or mu <= 0 or lip <= 0 or p < 1:
        raise ValueError("delta_swap needs positive A, mu, lip and p >= 1")
    if abs(p - 4.0 / 3.0) < 1e-12:
        lam = max(A * mu ** (-1.5), A**0.5, mu**1.5)
        return min(
            (lam / (A ** (1.0 / 3.0) * lip ** (1.0 / 3.0) * mu ** (-0.5))) ** 3,
            (lam / A**0.25) ** 4,
        )
    if p < 4.0 / 3.0:
        return min(
            (A * lip / mu ** (8.0 / p)) ** (p / (4.0 - 3.0 * p)),
            (A / mu ** (8.0 / p)) ** (p / (8.0 - 5.0 * p)),
            (A / mu ** (4.0 / p)) ** (p / (3.0 * p - 4.0)),
        )
    return min(
        (A**2 / (lip * mu ** (4.0 / p))) ** (p / (4.0 * (p - 1.0))),
        (A**3 / mu ** (8.0 / p)) ** (p / (8.0 * p - 6.0)),
        (A / mu ** (4.0 / p)) ** (p / (3.0 * p - 4.0)),
    )


def prox_gap_lower_bound(delta: float, dist_opt: float, rho: float) -> float:
    """Lower bound on the exact proximal gap from gap and distance to optima."""
    if delta <= rho * dist_opt**2:
        return (delta / dist_opt) ** 2 / (2.0 * rho)
    return delta - 0.5 * rho * dist_opt**2


def null_step_bound(hbar_lip: float, beta: float, rho_anchor: float, prox_gap: float) -> float:
    """Bound on consecutive null steps at one center (diagnostic)."""
    return 32.0 * hbar_lip**2 / ((1.0 - beta) ** 2 * rho_anchor * prox_gap)


def recurrence_check(
    delta_tilde_t: float,
    delta_tilde_next: float,
    kappa_next: float,
    rho_anchor: float,
    beta: float,
    hbar_lip: float,
    slack: float = 1e-9,
) -> bool:
    """One-step contraction of the model prox gap across a null step.

    rho_anchor is the proximal parameter at the first step after the last
    descent; hbar_lip is the uniform bound on transported subgradient
    norms.
    """
    drop = ((1.0 - beta) ** 2 * rho_anchor / (8.0 * hbar_lip**2)) * (
        delta_tilde_t - kappa_next / (1.0 - beta)
    ) ** 2
    return delta_tilde_next <= delta_tilde_t - drop + slack


# ---------------------------------------------------------------------------
# state, trace, oracles
# ---------------------------------------------------------------------------

@dataclass
class Counters:
    oracle_calls: int = 0
    descent_steps: int = 0
    null_steps: int = 0
    backtrack_doublings: int = 0


@dataclass
class TraceRecord:
    """One row per oracle evaluation of a candidate."""

    iter: int
    oracle_calls: int
    wall_ns: int
    step_type: str
    f_x: float
    f_z: float
    model_pred: float
    delta_tilde: float
    kappa: float
    rho: float
    d_norm: float
    g_norm: float


@dataclass
class BundleState:
    """Single-owner state of one run; helpers never share mutable pieces."""

    center: Point
    f_center: float
    anchor_grad: Tangent
    model: ThreeCutModel
    rho: float
    rho0: float
    beta: float
    constants: GeometryConstants
    counters: Counters = field(default_factory=Counters)
    anchor_norm: float = field(default=float("nan"))  # cached ||anchor_grad||


@dataclass
class RunConfig:
    rho0: float = 1.0
    beta: float = 0.1
    schedule: ScheduleParams = field(default_factory=ScheduleParams)
    budget: int = 10_000
    tol_stop: Optional[float] = None  # None -> tol_rel * (1 + |f_x|)
    tol_rel: float = 1e-10
    eps_gap: Optional[float] = None
    f_star: Optional[float] = None
    max_doublings: int = 200

    def __post_init__(self) -> None:
        if self.rho0 <= 0:
            raise ValueError("rho0 must be positive")
        if not 0.0 < self.beta < 1.0:
            raise ValueError("beta must lie in (0, 1)")
        if self.budget < 0:
            raise ValueError("budget must be nonnegative")


@dataclass
class StepInfo:
    """Everything a per-step hook might want to inspect."""

    step_type: str
    z: Point
    f_z: float
    g_z: Tangent
    g_hat: Optional[Tangent]
    solve: SolveResult
    kappa: float
    rho: float
    record: TraceRecord
    state: BundleState


@dataclass
class RunResult:
    point: Point
    f_value: float
    trace: list[TraceRecord]
    stop_reason: str
    state: Optional[BundleState]


def _now_clock() -> Callable[[], int]:
    t0 = time.perf_counter_ns()
    return lambda: time.perf_counter_ns() - t0


def _anchor_norm(state, M: Manifold) -> float:
    if math.isnan(state.anchor_norm):
        state.anchor_norm = M.norm(state.center, state.anchor_grad)
    return state.anchor_norm


def _evaluate_candidate(state, rho, oracle, M):
    """Solve, retract, and query the oracle once; may raise RetractionFailure."""
    solve = solve_prox_subproblem(state.model, rho, M)
    z = M.retract(state.center, solve.direction)
    f_z, g_z = oracle.eval(z)
    state.counters.oracle_calls += 1
    g_norm = M.norm(z, g_z)
    kappa = model_shift(
        g_norm,
        candidate_radius(_anchor_norm(state, M), rho, state.constants.c_r),
        state.constants,
    )
    return solve, z, f_z, g_z, kappa, g_norm


def backtrack_rho(
    state: BundleState,
    oracle,
    M: Manifold,
    *,
    max_doublings: int = 200,
    records: Optional[list[TraceRecord]] = None,
    clock: Optional[Callable[[], int]] = None,
    iter_idx: int = 0,
):
    """Double rho until the descent test or controlled-shift condition holds.

    Retraction failures double as well (there is nothing to evaluate at a
    candidate that left the manifold).  Returns the accepted
    (rho, solve, z, f_z, g_z, kappa); each failed oracle evaluation leaves
    a backtrack row in ``records``.
    """
    rho, solve, z, f_z, g_z, kappa, _ = _backtrack_rho_full(
        state,
        oracle,
        M,
        max_doublings=max_doublings,
        records=records,
        clock=clock,
        iter_idx=iter_idx,
    )
    return rho, solve, z, f_z, g_z, kappa


def _backtrack_rho_full(
    state: BundleState,
    oracle,
    M: Manifold,
    *,
    max_doublings: int = 200,
    records: Optional[list[TraceRecord]] = None,
    clock: Optional[Callable[[], int]] = None,
    iter_idx: int = 0,
):
    clock = clock or (lambda: 0)
    rho = state.rho
    doublings = 0
    while True:
        try:
            solve, z, f_z, g_z, kappa, g_norm = _evaluate_candidate(state, rho, oracle, M)
        except RetractionFailure:
            pass
        else:
            dt = model_prox_gap(state.f_center, solve)
            if descent_test(state.f_center, f_z, solve.model_value, state.beta) or null_progress_test(
                dt, kappa, state.beta
            ):
                return rho, solve, z, f_z, g_z, kappa, g_norm
            if records is not None:
                records.append(
                    TraceRecord(
                        iter=iter_idx,
                        oracle_calls=state.counters.oracle_calls,
                        wall_ns=clock(),
                        step_type=STEP_BACKTRACK,
                        f_x=state.f_center,
                        f_z=f_z,
                        model_pred=solve.model_value,
                        delta_tilde=dt,
                        kappa=kappa,
                        rho=rho,
                        d_norm=solve.direction_norm,
                        g_norm=g_norm,
                    )
                )
        if doublings >= max_doublings:
            raise BudgetExhausted(f"backtracking exceeded {max_doublings} doublings")
        rho *= 2.0
        doublings += 1
        state.counters.backtrack_doublings += 1


def _select_rho_without_tests(state, rho, M, oracle, max_doublings):
    """Constant/growth path: only retraction failures escalate rho."""
    doublings = 0
    while True:
        try:
            return rho, _evaluate_candidate(state, rho, oracle, M)
        except RetractionFailure:
            if doublings >= max_doublings:
                raise BudgetExhausted(f"retraction kept failing after {max_doublings} doublings")
            rho *= 2.0
            doublings += 1
            state.counters.backtrack_doublings += 1


def scheduled_rho(state: BundleState, schedule: ScheduleParams) -> float:
    """Starting rho for the next iteration; never decreases along a run."""
    if schedule.mode == "growth":
        delta = state.f_center - schedule.f_star
        if delta <= 0:
            return state.rho
        return max(state.rho, growth_schedule_rho(delta, schedule))
    return state.rho


def rpbm_step(
    state: BundleState,
    oracle,
    M: Manifold,
    schedule: ScheduleParams,
    *,
    iter_idx: int = 0,
    max_doublings: int = 200,
    clock: Optional[Callable[[], int]] = None,
) -> tuple[BundleState, list[TraceRecord], StepInfo]:
    """One descent-or-null iteration; returns the new state and its trace rows."""
    clock = clock or (lambda: 0)
    records: list[TraceRecord] = []
    if schedule.mode == "backtracking":
        rho, solve, z, f_z, g_z, kappa, g_norm = _backtrack_rho_full(
            state,
            oracle,
            M,
            max_doublings=max_doublings,
            records=records,
            clock=clock,
            iter_idx=iter_idx,
        )
    else:
        rho, (solve, z, f_z, g_z, kappa, g_norm) = _select_rho_without_tests(
            state, scheduled_rho(state, schedule), M, oracle, max_doublings
        )

    dt = model_prox_gap(state.f_center, solve)
    d = solve.direction
    if descent_test(state.f_center, f_z, solve.model_value, state.beta):
        step_type = STEP_DESCENT
        g_hat = None
        new_state = replace(
            state,
            center=z,
            f_center=f_z,
            anchor_grad=g_z,
            anchor_norm=g_norm,
            model=anchor_model(M, z, f_z, g_z),
            rho=rho,
        )
        state.counters.descent_steps += 1
    else:
        step_type = STEP_NULL
        g_hat = M.transporter(z, state.center, g_z)
        b_new = f_z - M.inner(state.center, g_hat, d) - kappa
        s = Tangent(state.center, -rho * d.coords)
        b_agg = solve.model_value - M.inner(state.center, s, d)
        new_model = ThreeCutModel(
            state.center,
            [state.model.anchor, Cut(b_new, g_hat, CUT_NEW), Cut(b_agg, s, CUT_AGGREGATE)],
        )
        new_state = replace(state, model=new_model, rho=rho)
        state.counters.null_steps += 1

    record = TraceRecord(
        iter=iter_idx,
        oracle_calls=state.counters.oracle_calls,
        wall_ns=clock(),
        step_type=step_type,
        f_x=state.f_center,
        f_z=f_z,
        model_pred=solve.model_value,
        delta_tilde=dt,
        kappa=kappa,
        rho=rho,
        d_norm=solve.direction_norm,
        g_norm=g_norm,
    )
    records.append(record)
    info = StepInfo(step_type, z, f_z, g_z, g_hat, solve, kappa, rho, record, new_state)
    return new_state, records, info


def run(
    oracle,
    M: Manifold,
    x0: Point,
    cfg: RunConfig,
    step_hook: Optional[Callable[[StepInfo], None]] = None,
) -> RunResult:
    """Iterate rpbm_step until the model gap, gap-to-optimum, or budget stops it.

    Deterministic given the oracle, start point, and config; traces from
    identical runs differ only in wall-clock columns.
    """
    clock = _now_clock()
    trace: list[TraceRecord] = []
    if cfg.budget <= 0:
        return RunResult(x0, math.nan, trace, "budget", None)

    f0, g0 = oracle.eval(x0)
    state = BundleState(
        center=x0,
        f_center=f0,
        anchor_grad=g0,
        model=anchor_model(M, x0, f0, g0),
        rho=cfg.rho0,
        rho0=cfg.rho0,
        beta=cfg.beta,
        constants=M.constants(),
    )
    state.counters.oracle_calls = 1

    stop = None
    optimal_candidate: Optional[tuple[Point, float]] = None
    it = 0
    while True:
        if cfg.f_star is not None and state.f_center - cfg.f_star <= (cfg.eps_gap or 0.0):
            stop = "gap"
            break
        if state.counters.oracle_calls >= cfg.budget:
            stop = "budget"
            break
        probe = solve_prox_subproblem(state.model, scheduled_rho(state, cfg.schedule), M)
        tol = cfg.tol_stop if cfg.tol_stop is not None else cfg.tol_rel * (1.0 + abs(state.f_center))
        if model_prox_gap(state.f_center, probe) <= tol:
            stop = "converged"
            break
        state, records, info = rpbm_step(
            state,
            oracle,
            M,
            cfg.schedule,
            iter_idx=it,
            max_doublings=cfg.max_doublings,
            clock=clock,
        )
        trace.extend(records)
        if step_hook is not None:
            step_hook(info)
        if info.record.g_norm == 0.0:
            # a zero subgradient certifies optimality of the candidate
            stop = "zero_subgradient"
            optimal_candidate = (info.z, info.f_z)
            break
        it += 1

    if optimal_candidate is not None:
        point, f_value = optimal_candidate
    else:
        point, f_value = state.center, state.f_center
    return RunResult(point, f_value, trace, stop, state)
