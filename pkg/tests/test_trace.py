from __future__ import annotations

import numpy as np
import pytest

from hadamard_bundle import (
    Euclidean,
    GeometryConstants,
    RunConfig,
    TraceRecord,
    run,
)
from hadamard_bundle.errors import EmptyTrace, MalformedTrace
from hadamard_bundle.plotting import render_svg
from hadamard_bundle.problems import one_norm_toy
from hadamard_bundle.trace import (
    TRACE_HEADER,
    AuditReport,
    audit_trace,
    read_trace_csv,
    write_trace_csv,
)


def euclidean_run(rng, budget=150, dim=6):
    M = Euclidean(dim)
    oracle = one_norm_toy(M.point(rng.normal(size=dim)))
    x0 = M.point(rng.normal(size=dim) * 2)
    res = run(oracle, M, x0, RunConfig(budget=budget))
    init_g = M.norm(x0, oracle.eval(x0)[1])
    return res, oracle, init_g


class TestCsvFormat:
    def test_header_is_pinned(self):
        assert (
            TRACE_HEADER
            == "iter,oracle_calls,wall_ns,step_type,f_x,f_z,model_pred,delta_tilde,kappa,rho,d_norm,g_norm"
        )

    def test_empty_trace_writes_header_only(self, tmp_path):
        p = tmp_path / "t.csv"
        write_trace_csv([], p)
        assert p.read_text() == TRACE_HEADER + "\n"

    def test_single_record_two_lines(self, tmp_path):
        p = tmp_path / "t.csv"
        rec = TraceRecord(0, 2, 123, "descent", 1.0, 0.5, 0.25, 0.75, 0.0, 1.0, 1.0, 0.7)
        write_trace_csv([rec], p)
        lines = p.read_text().splitlines()
        assert len(lines) == 2

    def test_lf_line_endings(self, tmp_path):
        p = tmp_path / "t.csv"
        write_trace_csv([], p)
        assert b"\r" not in p.read_bytes()

    def test_roundtrip_is_exact(self, tmp_path, rng):
        res, _, _ = euclidean_run(rng)
        p = tmp_path / "t.csv"
        write_trace_csv(res.trace, p)
        back = read_trace_csv(p)
        assert len(back) == len(res.trace)
        for a, b in zip(res.trace, back):
            assert a == b  # 17 significant digits round-trips doubles

    def test_malformed_header_rejected(self, tmp_path):
        p = tmp_path / "bad.csv"
        p.write_text("not,a,trace\n1,2,3\n")
        with pytest.raises(MalformedTrace):
            read_trace_csv(p)

    def test_ragged_row_rejected(self, tmp_path):
        p = tmp_path / "bad.csv"
        p.write_text(TRACE_HEADER + "\n1,2,3\n")
        with pytest.raises(MalformedTrace):
            read_trace_csv(p)


class TestAudit:
    def test_healthy_flat_trace_passes(self, rng):
        res, oracle, init_g = euclidean_run(rng)
        report = audit_trace(
            res.trace,
            GeometryConstants(),
            beta=0.1,
            rho0=1.0,
            lip=oracle.lip_bound,
            init_g_norm=init_g,
        )
        assert report.ok
        assert report.total_failures() == 0
        # flat runs exercise the one-record-per-call contract: records
        # count every call except the initializing one
        assert res.state.counters.oracle_calls == len(res.trace) + 1

    def test_corrupted_gap_fails(self, rng):
        res, oracle, init_g = euclidean_run(rng)
        rows = list(res.trace)
        pairs = [
            i + 1
            for i, (a, b) in enumerate(zip(rows, rows[1:]))
            if a.step_type == "null" and b.step_type == "null"
        ]
        assert pairs, "run produced no consecutive null steps"
        import dataclasses

        k = pairs[0]
        rows[k] = dataclasses.replace(rows[k], delta_tilde=rows[k - 1].delta_tilde * 10 + 1.0)
        report = audit_trace(
            rows,
            GeometryConstants(),
            beta=0.1,
            rho0=1.0,
            lip=oracle.lip_bound,
            init_g_norm=init_g,
        )
        assert not report.ok
        bad = {name for name, c in report.checks.items() if c.failed}
        assert "gap_monotone" in bad or "gap_recurrence" in bad

    def test_empty_trace_vacuous_with_warning(self):
        report = audit_trace([], GeometryConstants(), beta=0.1)
        assert report.ok
        assert report.warnings

    def test_accepts_csv_path(self, tmp_path, rng):
        res, oracle, init_g = euclidean_run(rng)
        p = tmp_path / "t.csv"
        write_trace_csv(res.trace, p)
        report = audit_trace(str(p), GeometryConstants(), beta=0.1, rho0=1.0, lip=oracle.lip_bound)
        assert report.ok

    def test_missing_anchor_rows_are_skipped_not_failed(self, rng):
        res, oracle, _ = euclidean_run(rng)
        report = audit_trace(res.trace, GeometryConstants(), beta=0.1, rho0=1.0, lip=oracle.lip_bound)
        assert report.ok
        assert report.checks["step_radius"].skipped >= 1


class TestRenderSvg:
    def _trace_file(self, tmp_path, rng, name):
        res, _, _ = euclidean_run(rng, budget=60)
        p = tmp_path / name
        write_trace_csv(res.trace, p)
        return p

    def test_one_polyline_per_trace(self, tmp_path, rng):
        p1 = self._trace_file(tmp_path, rng, "a.csv")
        out = tmp_path / "plot.svg"
        render_svg([("run-a", p1)], "gap", "oracle_calls", out, f_star=0.0)
        svg = out.read_text()
        assert svg.count("<polyline") == 1
        assert svg.startswith("<svg")
        assert "</svg>" in svg

    def test_two_traces_two_legend_entries(self, tmp_path, rng):
        p1 = self._trace_file(tmp_path, rng, "a.csv")
        p2 = self._trace_file(tmp_path, rng, "b.csv")
        out = tmp_path / "plot.svg"
        render_svg([("first", p1), ("second", p2)], "gap", "oracle_calls", out, f_star=0.0)
        svg = out.read_text()
        assert svg.count("<polyline") == 2
        assert ">first</text>" in svg
        assert ">second</text>" in svg

    def test_gap_clipping_floor(self, tmp_path, rng):
        # a run that reaches the exact optimum still plots on the log axis
        res, _, _ = euclidean_run(rng, budget=200)
        p = tmp_path / "a.csv"
        write_trace_csv(res.trace, p)
        out = tmp_path / "plot.svg"
        render_svg([("run", p)], "gap", "oracle_calls", out, f_star=min(r.f_z for r in res.trace))
        assert out.exists()

    def test_empty_trace_rejected(self, tmp_path):
        p = tmp_path / "empty.csv"
        write_trace_csv([], p)
        with pytest.raises(EmptyTrace):
            render_svg([("e", p)], "gap", "oracle_calls", tmp_path / "plot.svg")
