"""Command-line interface.

Subcommands::

    solve   run the configured solver over all seeds, write traces + report
    verify  solve and certify the traces against the framework inequalities
    rates   solve and attach rate constants and measured rates to the report
    gap     solve and run the duality-gap iteration-bound experiment
    gen     emit a synthetic dataset (libsvm text) or quadratic (JSON)

Exit codes: 0 success, 1 validation error, 2 runtime failure,
3 certification failure.
"""

from __future__ import annotations

import argparse
import json
import sys

import numpy as np

from .datasets import GENERATORS, ParseError, generate_synthetic, write_libsvm
from .experiment import ConfigError, load_config, run_experiment

EXIT_OK = 0
EXIT_VALIDATION = 1
EXIT_RUNTIME = 2
EXIT_CERTIFICATION = 3


class _ArgumentError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    # argparse exits with status 2 on bad flags; remap to the validation code.
    def error(self, message):
        raise _ArgumentError(message)


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="fdmkit", description=__doc__,
                     formatter_class=argparse.RawDescriptionHelpFormatter)
    sub = parser.add_subparsers(dest="command", required=True)

    def add_run_command(name, help_text):
        cmd = sub.add_parser(name, help=help_text)
        cmd.add_argument("--config", required=True, help="experiment config (JSON)")
        cmd.add_argument("--out", help="override the output directory")
        cmd.add_argument("--seed", type=int, action="append",
                         help="replace the config seed list (repeatable)")
        cmd.add_argument("--epsilon", type=float,
                         help="override the stopping/gap tolerance")
        cmd.add_argument("--max-iters", type=int, help="override iteration budget")
        cmd.add_argument("--workers", type=int, help="worker pool size")
        return cmd

    add_run_command("solve", "run the solver and write traces")
    add_run_command("verify", "run and certify the framework inequalities")
    add_run_command("rates", "run and report rate constants")
    add_run_command("gap", "run the duality-gap bound experiment")

    gen = sub.add_parser("gen", help="generate a synthetic dataset")
    gen.add_argument("--generator", required=True, choices=GENERATORS)
    gen.add_argument("--out", required=True)
    gen.add_argument("--n", type=int)
    gen.add_argument("--d", type=int)
    gen.add_argument("--delta", type=float)
    gen.add_argument("--seed", type=int, default=0)
    return parser


def _apply_overrides(cfg, args) -> None:
    if args.out:
        cfg.output_dir = args.out
    if args.seed:
        cfg.seeds = list(args.seed)
    if args.epsilon is not None:
        cfg.epsilon = args.epsilon
        cfg.gap["epsilons"] = [args.epsilon]
    if args.max_iters is not None:
        cfg.solver["max_iters"] = args.max_iters
    if args.workers is not None:
        cfg.workers = args.workers


def _run_command(args) -> int:
    cfg = load_config(args.config)
    _apply_overrides(cfg, args)
    if args.command == "verify":
        cfg.verify["rcfdm"] = True
    elif args.command == "rates":
        cfg.rates["enabled"] = True
        cfg.rates["measured"] = True
    elif args.command == "gap":
        cfg.gap["enabled"] = True
    result = run_experiment(cfg)
    agg = result.report["aggregate"]
    for entry in result.report["seeds"]:
        if entry["status"] == "ok":
            print(f"seed {entry['seed']}: {entry['iterations']} iters, "
                  f"f = {entry['final_f']:.12g} ({entry['stop_reason']})")
        else:
            print(f"seed {entry['seed']}: FAILED ({entry['error']})",
                  file=sys.stderr)
    if args.command == "verify":
        status = "passed" if agg["certificates_all_passed"] else "FAILED"
        print(f"certification {status}")
    if args.command == "gap" and agg["gap_reports"]:
        for rep in agg["gap_reports"]:
            print(f"epsilon {rep['epsilon']:g}: bound K = {rep['iteration_bound']}, "
                  f"mean gap at K = {rep['mean_gap_at_bound']:.3e}")
    print(f"report: {result.report_path}")
    return result.exit_code


def _gen_command(args) -> int:
    spec = {"generator": args.generator, "seed": args.seed}
    if args.n is not None:
        spec["n"] = args.n
    if args.d is not None:
        spec["d"] = args.d
    if args.delta is not None:
        spec["delta"] = args.delta
    if args.generator == "diagonal-quadratic":
        spec.pop("seed")
        spec.pop("d", None)
    out = generate_synthetic(spec)
    if hasattr(out, "features"):
        write_libsvm(out, args.out)
    else:
        payload = {"kind": "quadratic",
                   "diag": np.diag(out.hessian).tolist(),
                   "linear": out.linear.tolist()}
        with open(args.out, "w", encoding="utf-8") as fh:
            json.dump(payload, fh, indent=2)
            fh.write("\n")
    print(f"wrote {args.out}")
    return EXIT_OK


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except _ArgumentError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    try:
        if args.command == "gen":
            return _gen_command(args)
        return _run_command(args)
    except (ConfigError, ParseError, ValueError) as exc:
        print(f"validation error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    except OSError as exc:
        print(f"i/o error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME
    except Exception as exc:  # noqa: BLE001 - CLI boundary
        print(f"runtime error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
