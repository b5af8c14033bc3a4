"""Benchmark command line.

Subcommands: ``median``, ``denoise``, ``toy``, ``constants-estimate``,
``audit``, ``plot``.  Experiment flags override values from an optional
``--config`` file (line-based ``key = value``, ``#`` comments), which in
turn override the experiment defaults.
"""

from __future__ import annotations

import argparse
import sys

import numpy as np

from .bench import build_config, parse_config_file, run_experiment
from .errors import ParseError, ValidationError
from .geometry import Euclidean, GeometryConstants, estimate_primitive_constants
from .hyperboloid import Hyperboloid
from .plotting import render_svg
from .spd import SymmetricPositiveDefinite
from .trace import audit_trace


def _add_experiment_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", default=None, help="key = value config file")
    p.add_argument("--dim", type=int, default=None)
    p.add_argument("--n-points", dest="n_points", type=int, default=None)
    p.add_argument("--beta", type=float, default=None)
    p.add_argument("--rho0", type=float, default=None)
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--budget", type=int, default=None)
    p.add_argument("--tol", type=float, default=None)
    p.add_argument("--primitives", choices=("exact", "retraction"), default=None)
    p.add_argument("--transport", choices=("parallel", "projection"), default=None)
    p.add_argument("--schedule", choices=("backtracking", "constant", "growth"), default=None)
    p.add_argument("--mu", type=float, default=None)
    p.add_argument("--p", type=float, default=None)
    p.add_argument("--fstar", dest="f_star", type=float, default=None)
    p.add_argument("--algorithm", choices=("rpb", "sgm"), default=None)
    p.add_argument("--out", default=None, help="trace CSV path")
    p.add_argument("--plot", default=None, help="optional SVG path")


def _experiment_main(experiment: str, args: argparse.Namespace) -> int:
    file_values = parse_config_file(args.config) if args.config else {}
    flag_values = {
        k: v
        for k, v in vars(args).items()
        if k not in ("command", "config", "func") and v is not None
    }
    cfg = build_config(experiment, file_values, flag_values)
    artifacts = run_experiment(cfg)
    for key in sorted(artifacts.summary):
        print(f"{key} = {artifacts.summary[key]}")
    print(f"trace_csv = {artifacts.trace_csv}")
    if artifacts.plot:
        print(f"plot = {artifacts.plot}")
    return 0


def _toy_main(args) -> int:
    return _experiment_main("toy", args)


def _constants_main(args) -> int:
    file_values = parse_config_file(args.config) if args.config else {}
    manifold = args.manifold or file_values.get("manifold", "spd")
    dim = args.dim or file_values.get("dim", 3)
    seed = args.seed if args.seed is not None else file_values.get("seed", 0)
    n_samples = args.n_samples or file_values.get("n_points", 200)
    radius = args.radius or 1.0
    rng = np.random.default_rng(seed)
    if manifold == "spd":
        M = SymmetricPositiveDefinite(dim)
        anchor = M.point(np.eye(dim))
    elif manifold == "hyperboloid":
        M = Hyperboloid(dim)
        anchor = M.vertex()
    elif manifold == "euclidean":
        M = Euclidean(dim)
        anchor = M.point(np.zeros(dim))
    else:
        print(f"unknown manifold {manifold!r}", file=sys.stderr)
        return 2
    region = [anchor] + [M.exp(anchor, M.random_tangent(anchor, rng)) for _ in range(7)]
    c_r, c_t = estimate_primitive_constants(M, region, radius, n_samples, seed)
    print(f"manifold = {M.tag}")
    print(f"c_r_estimate = {c_r:.6g}")
    print(f"c_t_estimate = {c_t:.6g}")
    return 0


def _audit_main(args) -> int:
    constants = GeometryConstants(k_min=args.kmin, c_r=args.cr, c_t=args.ct)
    report = audit_trace(
        args.trace,
        constants,
        beta=args.beta,
        rho0=args.rho0,
        lip=args.lip,
        init_g_norm=args.init_gnorm,
        expect_null_progress=not args.no_null_progress,
    )
    for line in report.summary_lines():
        print(line)
    print("audit =", "pass" if report.ok else "fail")
    return 0 if report.ok else 1


def _plot_main(args) -> int:
    traces = []
    for spec in args.traces:
        label, _, path = spec.partition("=")
        if not path:
            label, path = spec, spec
        traces.append((label, path))
    render_svg(traces, args.y, args.x, args.plot, f_star=args.fstar)
    print(f"plot = {args.plot}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="hadamard-bench",
        description="Benchmark harness for the Riemannian proximal bundle method",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    for name in ("median", "denoise"):
        p = sub.add_parser(name, help=f"{name} experiment")
        _add_experiment_flags(p)
        p.set_defaults(func=lambda a, n=name: _experiment_main(n, a))

    p = sub.add_parser("toy", help="synthetic toys (flat piecewise-linear, hyperbolic sharp)")
    _add_experiment_flags(p)
    p.add_argument("--kind", choices=("pl", "sharp"), default=None)
    p.set_defaults(func=_toy_main)

    p = sub.add_parser("constants-estimate", help="empirical retraction/transporter constants")
    p.add_argument("--config", default=None)
    p.add_argument("--manifold", choices=("spd", "hyperboloid", "euclidean"), default=None)
    p.add_argument("--dim", type=int, default=None)
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--n-samples", dest="n_samples", type=int, default=None)
    p.add_argument("--radius", type=float, default=None)
    p.set_defaults(func=_constants_main)

    p = sub.add_parser("audit", help="check run inequalities over a trace CSV")
    p.add_argument("trace")
    p.add_argument("--kmin", type=float, default=0.0)
    p.add_argument("--cr", type=float, default=0.0)
    p.add_argument("--ct", type=float, default=0.0)
    p.add_argument("--beta", type=float, required=True)
    p.add_argument("--rho0", type=float, default=None)
    p.add_argument("--lip", type=float, default=None)
    p.add_argument("--init-gnorm", dest="init_gnorm", type=float, default=None)
    p.add_argument("--no-null-progress", action="store_true", help="constant/growth traces")
    p.set_defaults(func=_audit_main)

    p = sub.add_parser("plot", help="render convergence SVG from trace CSVs")
    p.add_argument("traces", nargs="+", help="label=path or bare path")
    p.add_argument("--plot", required=True, help="output SVG path")
    p.add_argument("--y", choices=("gap", "f"), default="gap")
    p.add_argument("--x", choices=("oracle_calls", "wall_ns"), default="oracle_calls")
    p.add_argument("--fstar", type=float, default=0.0)
    p.set_defaults(func=_plot_main)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (ParseError, ValidationError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    raise SystemExit(main())
