"""Command line entry point: ``efpdet compute|sweep|verify|psi``."""
from __future__ import annotations

import argparse
import json
import logging
import sys

from .contour import ModelParams, build_arc, build_halfline
from .errors import EFPError, SingularMatrixError
from .fredholm import assemble_finite_rank, fredholm_logdet, logdet
from .harness import emit, load_config, parse_phi, psi_from_field, run_sweep, run_verify

EXIT_OK, EXIT_VERIFY, EXIT_INPUT, EXIT_TRUST = 0, 1, 2, 3


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_INPUT, f"{self.prog}: error: {message}\n")


def _model_flags(p):
    angle = p.add_mutually_exclusive_group()
    angle.add_argument("--psi", type=float, help="arc parameter psi in (-pi, 0)")
    angle.add_argument("--field", type=float, help="magnetic field h in (0, 2); psi is derived from it")
    p.add_argument("--nodes", type=int, default=128, help="arc nodes (checked against 2x nodes)")
    p.add_argument("--hl-nodes", type=int, default=64, help="half-line nodes for the finite-rank form")
    p.add_argument("--phi", default="", help='Taylor coefficients of phi, e.g. "0,0.1" or "0,0.1+0.2i"')
    p.add_argument("--gamma", type=float, default=1.0)
    p.add_argument("--config", help="JSON config; explicit flags are ignored when given")


def build_parser():
    parser = _Parser(prog="efpdet", description="Fredholm determinants for emptiness formation on an arc.")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("compute", help="log det for one n")
    _model_flags(p)
    p.add_argument("--n", type=int, default=None)

    p = sub.add_parser("sweep", help="log det over a range of n")
    _model_flags(p)
    p.add_argument("--n-min", type=int, default=None)
    p.add_argument("--n-max", type=int, default=None)
    p.add_argument("--format", choices=("csv", "json"), default="csv")
    p.add_argument("--out", default=None, help="output path, '-' for stdout")

    p = sub.add_parser("verify", help="run the invariant suites")
    p.add_argument("--level", choices=("quick", "full"), default="quick")

    p = sub.add_parser("psi", help="psi for a magnetic field h")
    p.add_argument("--field", type=float, required=True)
    return parser


def _settings(args) -> dict:
    if args.config:
        return load_config(args.config)
    if (args.psi is None) == (args.field is None):
        raise EFPError("give exactly one of --psi or --field")
    psi = args.psi if args.psi is not None else psi_from_field(args.field)
    return {
        "psi": psi,
        "m_nodes": args.nodes,
        "hl_nodes": args.hl_nodes,
        "phi_coeffs": parse_phi(args.phi),
        "gamma": args.gamma,
        "output": getattr(args, "out", None) or "-",
    }


def _cmd_compute(args) -> int:
    cfg = _settings(args)
    n = args.n if args.n is not None else cfg.get("n_min")
    if n is None:
        raise EFPError("compute needs --n")
    params = ModelParams(n, cfg["psi"], cfg["phi_coeffs"], cfg["gamma"])
    ld = fredholm_logdet(params, cfg["m_nodes"])
    aq = build_arc(params.psi, cfg["m_nodes"])
    fr = logdet(assemble_finite_rank(params, aq, build_halfline(cfg["hl_nodes"])))
    out = {
        "n": n,
        "psi": params.psi,
        "log_abs": ld.log_abs,
        "arg": ld.arg,
        "min_pivot": ld.min_pivot,
        "converged": ld.converged,
        "node_count": ld.node_count,
        "delta": ld.delta,
        "finite_rank_log_abs": fr.log_abs,
        "diagnostics": ld.diagnostics,
    }
    print(json.dumps(out, indent=2))
    return EXIT_OK if ld.trusted else EXIT_TRUST


def _cmd_sweep(args) -> int:
    cfg = _settings(args)
    n_min = args.n_min if args.n_min is not None else cfg.get("n_min")
    n_max = args.n_max if args.n_max is not None else cfg.get("n_max")
    if n_min is None or n_max is None:
        raise EFPError("sweep needs --n-min and --n-max")
    base = ModelParams(n_min, cfg["psi"], cfg["phi_coeffs"], cfg["gamma"])
    records = run_sweep(base, n_min, n_max, cfg["m_nodes"])
    dest = args.out or cfg["output"]
    emit(records, args.format, dest)
    return EXIT_TRUST if any(r.log_p is None for r in records) else EXIT_OK


def _cmd_verify(args) -> int:
    report = run_verify(args.level)
    print(report.render())
    return EXIT_OK if report.overall else EXIT_VERIFY


def _cmd_psi(args) -> int:
    print(format(psi_from_field(args.field), ".17g"))
    return EXIT_OK


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    handler = {"compute": _cmd_compute, "sweep": _cmd_sweep, "verify": _cmd_verify, "psi": _cmd_psi}
    try:
        return handler[args.command](args)
    except SingularMatrixError as exc:
        print(f"efpdet: numerical trust failure: {exc}", file=sys.stderr)
        return EXIT_TRUST
    except (EFPError, ValueError) as exc:
        print(f"efpdet: error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except OSError as exc:
        print(f"efpdet: error: {exc}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
