"""Riemannian subgradient method, the classical baseline.

x' = exp_x(-eta_i g) with g from the oracle at x, or the retraction in
surrogate mode.  Stepsizes follow either a geometric decay C q^i or the
classical (i+1)^{-1/2} schedule.  Iterates are not monotone, so runs track
the best value seen so far alongside the iterate value.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass

from .errors import RetractionFailure, StepFailure
from .geometry import Manifold, Point, Tangent

__all__ = ["SgmConfig", "SgmRecord", "sgm_stepsize", "sgm_step", "sgm_run"]


@dataclass
class SgmConfig:
    stepsize_mode: str = "geometric"  # "geometric" | "inverse_sqrt"
    c: float = 2.0
    q: float = 0.95
    budget: int = 1000
    primitives: str = "exact"  # "exact" | "retraction"
    max_halvings: int = 60

    def __post_init__(self) -> None:
        if self.stepsize_mode not in ("geometric", "inverse_sqrt"):
            raise ValueError(f"unknown stepsize mode {self.stepsize_mode!r}")
        if self.stepsize_mode == "geometric" and not (self.c > 0 and 0 < self.q < 1):
            raise ValueError("geometric schedule needs C > 0 and q in (0, 1)")
        if self.primitives not in ("exact", "retraction"):
            raise ValueError(f"unknown primitives mode {self.primitives!r}")


@dataclass
class SgmRecord:
    iter: int
    oracle_calls: int
    wall_ns: int
    f_x: float
    f_best: float
    eta: float
    g_norm: float


def sgm_stepsize(cfg: SgmConfig, i: int) -> float:
    if cfg.stepsize_mode == "geometric":
        return cfg.c * cfg.q**i
    return 1.0 / math.sqrt(i + 1)


def _move(x: Point, g: Tangent, eta: float, M: Manifold, cfg: SgmConfig) -> Point:
    step = Tangent(x, -eta * g.coords)
    if cfg.primitives == "exact":
        return M.exp(x, step)
    for _ in range(cfg.max_halvings + 1):
        try:
            return M.retract(x, step)
        except RetractionFailure:
            step = Tangent(x, 0.5 * step.coords)
    raise StepFailure(f"retraction failed after {cfg.max_halvings} halvings")


def sgm_step(x: Point, i: int, oracle, M: Manifold, cfg: SgmConfig) -> Point:
    """One subgradient step from x at iteration i (one oracle call)."""
    _, g = oracle.eval(x)
    return _move(x, g, sgm_stepsize(cfg, i), M, cfg)


def sgm_run(oracle, M: Manifold, x0: Point, cfg: SgmConfig) -> tuple[Point, list[SgmRecord]]:
    """Run ``budget`` oracle calls; returns the best-so-far point and trace."""
    t0 = time.perf_counter_ns()
    trace: list[SgmRecord] = []
    x = x0
    best_point = x0
    best_f = math.inf
    for i in range(cfg.budget):
        f, g = oracle.eval(x)
        if f < best_f:
            best_f = f
            best_point = x
        eta = sgm_stepsize(cfg, i)
        trace.append(
            SgmRecord(
                iter=i,
                oracle_calls=i + 1,
                wall_ns=time.perf_counter_ns() - t0,
                f_x=f,
                f_best=best_f,
                eta=eta,
                g_norm=M.norm(x, g),
            )
        )
        x = _move(x, g, eta, M, cfg)
    return best_point, trace
