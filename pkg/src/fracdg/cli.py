"""Command-line entry point: single runs and convergence sweeps."""

from __future__ import annotations

import argparse
import sys

from . import cases
from .backend import kernel_name


def _add_common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--example", type=int, choices=(1, 2), default=1)
    p.add_argument("--mesh", action="append", required=True, metavar="PREFIX",
                   help="mesh file prefix (expects PREFIX.node and PREFIX.ele); repeatable")
    p.add_argument("--degree", type=int, default=1, metavar="N")
    p.add_argument("--alpha", type=float, default=1.5)
    p.add_argument("--beta", type=float, default=None,
                   help="defaults to alpha")
    p.add_argument("--dplus", type=float, default=1.0)
    p.add_argument("--dminus", type=float, default=None,
                   help="defaults to 1 for example 2, unused for example 1")
    p.add_argument("--eplus", type=float, default=1.0)
    p.add_argument("--eminus", type=float, default=None)
    p.add_argument("--t-final", type=float, default=1.0)
    step = p.add_mutually_exclusive_group()
    step.add_argument("--dt", type=float, default=None)
    step.add_argument("--cfl", type=float, default=None)
    p.add_argument("--out", default=None, metavar="PATH", help="write results CSV here")
    p.add_argument("--json", default=None, metavar="PATH", help="write results JSON here")
    p.add_argument("--dump-matrix", default=None, metavar="PATH",
                   help="dump assembled fractional matrices in coordinate text form")
    p.add_argument("--gj-points", type=int, default=None,
                   help="Gauss-Jacobi points per segment integral (default N+3)")
    p.add_argument("--verbose", action="store_true")


def _config_from(args: argparse.Namespace) -> cases.CaseConfig:
    beta = args.alpha if args.beta is None else args.beta
    two_sided_default = 1.0 if args.example == 2 else 0.0
    return cases.CaseConfig(
        example=args.example,
        alpha=args.alpha,
        beta=beta,
        dplus=args.dplus,
        dminus=two_sided_default if args.dminus is None else args.dminus,
        eplus=args.eplus,
        eminus=two_sided_default if args.eminus is None else args.eminus,
        degree=args.degree,
        mesh_paths=list(args.mesh),
        t_final=args.t_final,
        dt=args.dt,
        cfl=args.cfl,
        out_path=args.out,
        json_path=args.json,
        dump_matrix=args.dump_matrix,
        verbose=args.verbose,
        n_gj=args.gj_points,
    )


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="fracdg",
        description="Nodal DG solver for 2D space-fractional diffusion "
                    "on triangular meshes")
    sub = parser.add_subparsers(dest="command", required=True)
    run = sub.add_parser("run", help="solve a single case on one mesh")
    _add_common(run)
    conv = sub.add_parser("convergence", help="mesh sweep with observed orders")
    _add_common(conv)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = _config_from(args)
        if args.verbose:
            print(f"assembly kernel: {kernel_name()}", file=sys.stderr)
        if args.command == "run":
            if len(cfg.mesh_paths) != 1:
                raise ValueError("run takes exactly one --mesh")
            results = [cases.run_single(cfg)]
            if cfg.out_path:
                with open(cfg.out_path, "w", newline="") as fh:
                    cases.write_csv(results, fh)
            if cfg.json_path:
                with open(cfg.json_path, "w") as fh:
                    cases.write_json(results, fh)
        else:
            results = cases.run_convergence(cfg)
        if cfg.out_path:
            print(f"wrote {cfg.out_path}", file=sys.stderr)
        sys.stdout.write(cases.results_to_csv_text(results))
    except Exception as exc:  # noqa: BLE001 - CLI boundary
        print(f"error: {exc}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
