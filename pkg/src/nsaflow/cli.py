"""Command-line entry point: ``nsaflow {optimize,spca,sweep,generate}``.

Exit status is 0 on success, 2 for bad arguments or configurations and 3 for
file problems. Every output file starts with ``#`` comment lines recording the
command and seed.
"""
from __future__ import annotations

import argparse
import sys

import numpy as np

from . import __version__
from .constraints import NonnegMode
from .errors import NSAFlowError
from .flow import FlowConfig, TraceRecord, run_nsa_flow
from .geometry import RetractionMode
from .io import MatrixFormatError, read_matrix, write_matrix, write_table
from .optimizers import OptimizerKind
from .spca import SpcaConfig, run_spca
from .sweep import INITS, SUMMARY_FIELDS, SweepSpec, run_sweep, summary_rows
from .synthetic import KINDS, gen_synthetic

EXIT_OK, EXIT_CONFIG, EXIT_IO = 0, 2, 3
METRIC_FIELDS = ("explained_variance_ratio", "sparsity", "orth_residual", "energy")


class UsageError(Exception):
    pass


def _header(command: str, args: argparse.Namespace, keys) -> list[str]:
    parts = " ".join(f"{k}={getattr(args, k)}" for k in keys)
    return [f"nsaflow {__version__} {command}", parts]


def _float_list(text: str) -> list[float]:
    return [float(t) for t in text.split(",") if t.strip()]


def _int_list(text: str) -> list[int]:
    return [int(t) for t in text.split(",") if t.strip()]


def cmd_optimize(args) -> int:
    Y0 = read_matrix(args.input)
    X0 = read_matrix(args.target) if args.target else None
    retraction = RetractionMode({"soft": "soft_polar"}.get(args.retraction, args.retraction),
                                preserve_norm=not args.no_preserve_norm)
    cfg = FlowConfig(
        w=args.w,
        penalty_mode=args.penalty,
        retraction=retraction,
        nonneg=NonnegMode(args.nonneg),
        optimizer=args.optimizer,
        max_iter=args.max_iter,
        tol_slope=args.tol,
        lr=args.lr,
        lr_strategy="fixed" if args.lr is not None else "probe",
        tangent_projection=not args.no_tangent_projection,
        seed=args.seed,
    )
    res = run_nsa_flow(Y0, X0, cfg)
    head = _header("optimize", args, ("seed", "w", "retraction", "nonneg", "optimizer", "max_iter", "tol"))
    head.append(f"stop_reason={res.stop_reason} iterations={res.iterations}")
    write_matrix(args.out, res.Y, comments=head)
    if args.trace:
        rows = [r.as_row() for r in res.traces]
        if args.no_timing:
            rows = [(r[0], 0.0) + r[2:] for r in rows]
        write_table(args.trace, rows, TraceRecord.FIELDS, comments=head)
    return EXIT_OK


def cmd_spca(args) -> int:
    X = read_matrix(args.data)
    cfg = SpcaConfig(
        k=args.k,
        lam=args.lam,
        proximal_type=args.prox,
        w=args.w,
        nonneg=args.nonneg,
        max_iter=args.max_iter,
        tol=args.tol,
    )
    res = run_spca(X, cfg)
    head = _header("spca", args, ("seed", "k", "lam", "prox", "w", "nonneg", "max_iter", "tol"))
    write_matrix(args.out, res.Y, comments=head)
    if args.metrics:
        row = (res.explained_variance_ratio, res.sparsity, res.orth_residual, res.energy)
        write_table(args.metrics, [row], METRIC_FIELDS, comments=head)
    return EXIT_OK


def cmd_sweep(args) -> int:
    if args.spec:
        spec = SweepSpec.load(args.spec)
    else:
        if args.w_grid is None:
            raise UsageError("give --spec or --w-grid")
        spec = SweepSpec(
            w_grid=_float_list(args.w_grid),
            seeds=_int_list(args.seeds),
            kind=args.kind,
            rows=args.rows,
            cols=args.cols,
            noise=args.noise,
            init=args.init,
            base=FlowConfig(max_iter=args.max_iter),
        )
    rows = run_sweep(spec, workers=args.workers)
    table = summary_rows(rows)
    if args.no_timing:
        table = [r[:-1] + (0.0,) for r in table]
    head = [f"nsaflow {__version__} sweep", " ".join(f"{k}={v}" for k, v in spec.to_dict().items())]
    write_table(args.out, table, SUMMARY_FIELDS, comments=head)
    return EXIT_OK


def cmd_generate(args) -> int:
    M = gen_synthetic(args.kind, args.rows, args.cols, args.noise, args.seed)
    write_matrix(args.out, M, comments=_header("generate", args, ("seed", "kind", "rows", "cols", "noise")))
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="nsaflow", description="Non-negative near-orthogonal matrix approximation.")
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = p.add_subparsers(dest="command", required=True)

    o = sub.add_parser("optimize", help="run the flow on one matrix")
    o.add_argument("--input", required=True, help="initial matrix Y0")
    o.add_argument("--target", help="target X0 (defaults to Y0)")
    o.add_argument("--w", type=float, default=0.5)
    o.add_argument("--retraction", choices=("none", "soft", "polar"), default="soft")
    o.add_argument("--no-preserve-norm", action="store_true")
    o.add_argument("--nonneg", choices=("off", "clamp", "relu", "softplus"), default="clamp")
    o.add_argument("--penalty", choices=("scale_invariant", "raw"), default="scale_invariant")
    o.add_argument("--optimizer", choices=[k.value for k in OptimizerKind], default="asgd")
    o.add_argument("--lr", type=float, default=None, help="fixed learning rate (default: probe)")
    o.add_argument("--no-tangent-projection", action="store_true")
    o.add_argument("--max-iter", type=int, default=1000)
    o.add_argument("--tol", type=float, default=1e-6, help="energy-slope tolerance")
    o.add_argument("--seed", type=int, default=0)
    o.add_argument("--out", required=True)
    o.add_argument("--trace")
    o.add_argument("--no-timing", action="store_true", help="write 0 in the time_s column")
    o.set_defaults(func=cmd_optimize)

    s = sub.add_parser("spca", help="sparse PCA loadings")
    s.add_argument("--data", required=True, help="data matrix X, n x p")
    s.add_argument("--k", type=int, default=2)
    s.add_argument("--lambda", dest="lam", type=float, default=0.0)
    s.add_argument("--prox", choices=("basic", "nsa_flow"), default="basic")
    s.add_argument("--w", type=float, default=0.5)
    s.add_argument("--nonneg", action="store_true")
    s.add_argument("--max-iter", type=int, default=100)
    s.add_argument("--tol", type=float, default=1e-6)
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--out", required=True)
    s.add_argument("--metrics")
    s.set_defaults(func=cmd_spca)

    w = sub.add_parser("sweep", help="run the flow over a w grid and seeds")
    w.add_argument("--spec", help="JSON sweep file")
    w.add_argument("--w-grid", help="comma-separated w values, ascending")
    w.add_argument("--seeds", default="0")
    w.add_argument("--kind", choices=KINDS, default="block_nonneg")
    w.add_argument("--rows", type=int, default=60)
    w.add_argument("--cols", type=int, default=8)
    w.add_argument("--noise", type=float, default=0.3)
    w.add_argument("--init", choices=INITS, default="random")
    w.add_argument("--max-iter", type=int, default=1000)
    w.add_argument("--workers", type=int, default=1)
    w.add_argument("--no-timing", action="store_true")
    w.add_argument("--out", required=True)
    w.set_defaults(func=cmd_sweep)

    g = sub.add_parser("generate", help="write a synthetic matrix")
    g.add_argument("--kind", choices=KINDS, required=True)
    g.add_argument("--rows", type=int, default=0)
    g.add_argument("--cols", type=int, default=0)
    g.add_argument("--noise", type=float, default=0.0)
    g.add_argument("--seed", type=int, default=0)
    g.add_argument("--out", required=True)
    g.set_defaults(func=cmd_generate)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (OSError, MatrixFormatError) as exc:
        print(f"nsaflow: I/O error: {exc}", file=sys.stderr)
        return EXIT_IO
    except (NSAFlowError, UsageError, ValueError) as exc:
        print(f"nsaflow: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
