"""Trace CSV schema and the per-run invariant audit.

The bundle trace schema is pinned: one row per oracle evaluation,

    iter,oracle_calls,wall_ns,step_type,f_x,f_z,model_pred,delta_tilde,kappa,rho,d_norm,g_norm

floats printed with 17 significant digits (which round-trips IEEE
doubles), LF line endings.  Identical runs produce byte-identical files
except for the wall_ns column.

``audit_trace`` replays the inequality guarantees over a finished trace:
step radius from the anchor subgradient, the per-descent decrease, the
monotone model gap and its quadratic contraction across null steps, the
transported-subgradient bound, and internal consistency of the recorded
shift.  A healthy backtracking run passes everything; a corrupted or
miscalibrated trace does not.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Optional

from .bundle import (
    STEP_BACKTRACK,
    STEP_DESCENT,
    STEP_NULL,
    TraceRecord,
    candidate_radius,
    model_shift,
    null_progress_test,
    recurrence_check,
    transported_subgrad_bound,
)
from .errors import MalformedTrace
from .geometry import GeometryConstants
from .subgradient import SgmRecord

__all__ = [
    "TRACE_HEADER",
    "SGM_HEADER",
    "write_trace_csv",
    "read_trace_csv",
    "write_sgm_csv",
    "read_csv_columns",
    "AuditCheck",
    "AuditReport",
    "audit_trace",
]

TRACE_FIELDS = (
    "iter",
    "oracle_calls",
    "wall_ns",
    "step_type",
    "f_x",
    "f_z",
    "model_pred",
    "delta_tilde",
    "kappa",
    "rho",
    "d_norm",
    "g_norm",
)
TRACE_HEADER = ",".join(TRACE_FIELDS)

SGM_FIELDS = ("iter", "oracle_calls", "wall_ns", "f_x", "f_best", "eta", "g_norm")
SGM_HEADER = ",".join(SGM_FIELDS)

_INT_FIELDS = {"iter", "oracle_calls", "wall_ns"}


def _fmt(x: float) -> str:
    return format(float(x), ".17g")


def write_trace_csv(records: Iterable[TraceRecord], path) -> None:
    path = Path(path)
    lines = [TRACE_HEADER]
    for r in records:
        lines.append(
            ",".join(
                (
                    str(r.iter),
                    str(r.oracle_calls),
                    str(r.wall_ns),
                    r.step_type,
                    _fmt(r.f_x),
                    _fmt(r.f_z),
                    _fmt(r.model_pred),
                    _fmt(r.delta_tilde),
                    _fmt(r.kappa),
                    _fmt(r.rho),
                    _fmt(r.d_norm),
                    _fmt(r.g_norm),
                )
            )
        )
    path.write_text("\n".join(lines) + "\n", encoding="utf-8", newline="\n")


def read_trace_csv(path) -> list[TraceRecord]:
    text = Path(path).read_text(encoding="utf-8")
    lines = [ln for ln in text.split("\n") if ln]
    if not lines or lines[0] != TRACE_HEADER:
        raise MalformedTrace(f"unexpected header in {path}")
    out = []
    for ln in lines[1:]:
        parts = ln.split(",")
        if len(parts) != len(TRACE_FIELDS):
            raise MalformedTrace(f"row with {len(parts)} fields in {path}")
        try:
            out.append(
                TraceRecord(
                    iter=int(parts[0]),
                    oracle_calls=int(parts[1]),
                    wall_ns=int(parts[2]),
                    step_type=parts[3],
                    f_x=float(parts[4]),
                    f_z=float(parts[5]),
                    model_pred=float(parts[6]),
                    delta_tilde=float(parts[7]),
                    kappa=float(parts[8]),
                    rho=float(parts[9]),
                    d_norm=float(parts[10]),
                    g_norm=float(parts[11]),
                )
            )
        except ValueError as exc:
            raise MalformedTrace(f"unparsable row in {path}: {ln}") from exc
    return out


def write_sgm_csv(records: Iterable[SgmRecord], path) -> None:
    path = Path(path)
    lines = [SGM_HEADER]
    for r in records:
        lines.append(
            ",".join(
                (
                    str(r.iter),
                    str(r.oracle_calls),
                    str(r.wall_ns),
                    _fmt(r.f_x),
                    _fmt(r.f_best),
                    _fmt(r.eta),
                    _fmt(r.g_norm),
                )
            )
        )
    path.write_text("\n".join(lines) + "\n", encoding="utf-8", newline="\n")


def read_csv_columns(path) -> dict[str, list]:
    """Generic column reader for plotting (bundle or baseline traces)."""
    text = Path(path).read_text(encoding="utf-8")
    lines = [ln for ln in text.split("\n") if ln]
    if not lines:
        raise MalformedTrace(f"{path} is empty")
    names = lines[0].split(",")
    cols: dict[str, list] = {n: [] for n in names}
    for ln in lines[1:]:
        parts = ln.split(",")
        if len(parts) != len(names):
            raise MalformedTrace(f"ragged row in {path}")
        for n, p in zip(names, parts):
            if n == "step_type":
                cols[n].append(p)
            elif n in _INT_FIELDS:
                cols[n].append(int(p))
            else:
                cols[n].append(float(p))
    return cols


# ---------------------------------------------------------------------------
# audit
# ---------------------------------------------------------------------------

_SLACK = 1e-9
_MAX_DETAILS = 8


@dataclass
class AuditCheck:
    name: str
    passed: int = 0
    failed: int = 0
    skipped: int = 0
    details: list[str] = field(default_factory=list)

    def record(self, ok: bool, detail: str = "") -> None:
        if ok:
            self.passed += 1
        else:
            self.failed += 1
            if detail and len(self.details) < _MAX_DETAILS:
                self.details.append(detail)

    def skip(self) -> None:
        self.skipped += 1


@dataclass
class AuditReport:
    checks: dict[str, AuditCheck]
    n_rows: int
    warnings: list[str]

    @property
    def ok(self) -> bool:
        return all(c.failed == 0 for c in self.checks.values())

    def total_failures(self) -> int:
        return sum(c.failed for c in self.checks.values())

    def summary_lines(self) -> list[str]:
        lines = [f"rows audited: {self.n_rows}"]
        for name, c in self.checks.items():
            status = "ok" if c.failed == 0 else "FAIL"
            lines.append(f"  [{status}] {name}: {c.passed} passed, {c.failed} failed, {c.skipped} skipped")
            lines.extend(f"         {d}" for d in c.details)
        lines.extend(f"  warning: {w}" for w in self.warnings)
        return lines


def audit_trace(
    trace,
    constants: GeometryConstants,
    *,
    beta: float,
    rho0: Optional[float] = None,
    lip: Optional[float] = None,
    init_g_norm: Optional[float] = None,
    expect_null_progress: bool = True,
) -> AuditReport:
    """Check the run inequalities over a finished trace.

    ``trace`` is a list of TraceRecords or a CSV path.  ``init_g_norm`` is
    the norm of the starting subgradient; without it the rows before the
    first descent skip the anchor-based checks.  ``expect_null_progress``
    should be False for constant/growth schedules, which do not enforce
    the controlled-shift condition.
    """
    if not isinstance(trace, list):
        trace = read_trace_csv(trace)
    rows: list[TraceRecord] = trace

    checks = {
        name: AuditCheck(name)
        for name in (
            "step_radius",
            "rho_monotone",
            "lipschitz",
            "transported_bound",
            "shift_consistency",
            "gap_nonnegative",
            "descent_decrease",
            "null_progress",
            "gap_monotone",
            "gap_recurrence",
        )
    }
    warnings: list[str] = []
    if not rows:
        warnings.append("empty trace: all checks are vacuous")
        return AuditReport(checks, 0, warnings)

    hbar_lip = None
    if lip is not None and rho0 is not None:
        hbar_lip = transported_subgrad_bound(rho0, lip, constants.c_r, constants.c_t) * lip

    anchor_norm = init_g_norm
    rho_anchor = None  # rho at the first step row after the latest descent
    prev_null: Optional[TraceRecord] = None
    prev_rho = None

    for idx, r in enumerate(rows):
        scale = 1.0 + abs(r.f_x)

        if prev_rho is not None:
            checks["rho_monotone"].record(
                r.rho >= prev_rho - _SLACK, f"row {idx}: rho decreased {prev_rho} -> {r.rho}"
            )
        if rho0 is not None:
            checks["rho_monotone"].record(r.rho >= rho0 - _SLACK, f"row {idx}: rho below rho0")
        prev_rho = r.rho

        checks["gap_nonnegative"].record(
            r.delta_tilde >= -_SLACK * scale, f"row {idx}: delta_tilde = {r.delta_tilde}"
        )

        if lip is not None:
            checks["lipschitz"].record(
                r.g_norm <= lip + _SLACK, f"row {idx}: g_norm {r.g_norm} > lip {lip}"
            )

        if anchor_norm is None:
            checks["step_radius"].skip()
            checks["shift_consistency"].skip()
            checks["transported_bound"].skip()
        else:
            radius = candidate_radius(anchor_norm, r.rho, constants.c_r)
            checks["step_radius"].record(
                r.d_norm <= 2.0 * anchor_norm / r.rho + _SLACK,
                f"row {idx}: d_norm {r.d_norm} exceeds 2|g|/rho = {2.0 * anchor_norm / r.rho}",
            )
            kappa_expect = model_shift(r.g_norm, radius, constants)
            checks["shift_consistency"].record(
                math.isclose(r.kappa, kappa_expect, rel_tol=1e-9, abs_tol=1e-12),
                f"row {idx}: kappa {r.kappa} != recomputed {kappa_expect}",
            )
            if hbar_lip is None:
                checks["transported_bound"].skip()
            else:
                transported = r.g_norm * (1.0 + constants.c_t * radius)
                checks["transported_bound"].record(
                    transported <= hbar_lip + _SLACK,
                    f"row {idx}: transported-norm bound {transported} > {hbar_lip}",
                )

        if r.step_type == STEP_DESCENT:
            checks["descent_decrease"].record(
                r.f_z <= r.f_x - beta * r.delta_tilde + _SLACK * scale,
                f"row {idx}: descent decrease {r.f_x - r.f_z} < beta*gap {beta * r.delta_tilde}",
            )
            anchor_norm = r.g_norm
            rho_anchor = None
            prev_null = None
        elif r.step_type == STEP_NULL:
            if rho_anchor is None:
                rho_anchor = r.rho
            if expect_null_progress:
                checks["null_progress"].record(
                    0.5 * r.delta_tilde - r.kappa / (1.0 - beta) >= -_SLACK * scale,
                    f"row {idx}: shift {r.kappa} not dominated by gap {r.delta_tilde}",
                )
            if prev_null is not None:
                checks["gap_monotone"].record(
                    r.delta_tilde <= prev_null.delta_tilde + _SLACK * scale,
                    f"row {idx}: delta_tilde rose {prev_null.delta_tilde} -> {r.delta_tilde}",
                )
                if hbar_lip is None:
                    checks["gap_recurrence"].skip()
                else:
                    checks["gap_recurrence"].record(
                        recurrence_check(
                            prev_null.delta_tilde,
                            r.delta_tilde,
                            prev_null.kappa,
                            rho_anchor,
                            beta,
                            hbar_lip,
                            slack=_SLACK * scale,
                        ),
                        f"row {idx}: gap contraction violated "
                        f"({prev_null.delta_tilde} -> {r.delta_tilde}, kappa {prev_null.kappa})",
                    )
            prev_null = r
        elif r.step_type == STEP_BACKTRACK:
            if rho_anchor is None and expect_null_progress:
                # backtrack rows before the segment's first step row do not
                # pin rho_anchor; the accepted row does
                pass
        else:
            raise MalformedTrace(f"unknown step type {r.step_type!r} at row {idx}")

    return AuditReport(checks, len(rows), warnings)
