"""Command-line entry point: ``cptgame {solve,check,simulate,sweep,chi}``."""

from __future__ import annotations

import argparse
import sys

from .config import ExperimentConfig, SweepSpec, parse_config
from .errors import ConfigError, CptGameError, ValidationError
from .presets import PRESETS
from .runner import (FORM_ALIASES, dumps_report, run_check, run_chi, run_simulate, run_solve,
                     run_sweep, sweep_csv, trajectory_csv)


def _emit(text: str, path: str | None) -> None:
    if path:
        with open(path, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _load(args) -> ExperimentConfig | None:
    if args.config is None:
        return None
    exp = parse_config(args.config)
    if args.mode is not None:
        exp.solver.mode = args.mode
    if args.seed is not None:
        exp.solver.seed = args.seed
    return exp


def _require(exp, cmd):
    if exp is None:
        raise ValidationError([f"{cmd} needs --config"])
    return exp


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="experiment configuration file")
    common.add_argument("--mode", choices=("corrected", "strict"))
    common.add_argument("--out", help="output path (default: standard output)")
    common.add_argument("--seed", type=int, help="seed for Monte Carlo and spot checks")

    ap = argparse.ArgumentParser(prog="cptgame",
                                 description="Prospect-theoretic pursuit-evasion LQ game solver")
    sub = ap.add_subparsers(dest="command", required=True)
    sub.add_parser("solve", parents=[common], help="full pipeline, JSON report")
    sub.add_parser("check", parents=[common], help="capture conditions only")
    sim = sub.add_parser("simulate", parents=[common], help="trajectory CSV")
    sim.add_argument("--dt", type=float)
    sim.add_argument("--horizon", type=float)
    sim.add_argument("--dynamics", choices=sorted(FORM_ALIASES))
    sim.add_argument("--traj", help="trajectory CSV path (default: --out or stdout)")
    sw = sub.add_parser("sweep", parents=[common], help="parameter sweep CSV")
    sw.add_argument("--preset", choices=list(PRESETS))
    sw.add_argument("--param")
    sw.add_argument("--values", help="comma-separated values")
    ch = sub.add_parser("chi", help="gain and loss integrals")
    ch.add_argument("--alpha", type=float, default=1.0)
    ch.add_argument("--beta", type=float, default=None)
    ch.add_argument("--gamma", type=float, default=1.0)
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        if args.command == "chi":
            beta = args.alpha if args.beta is None else args.beta
            r = run_chi(args.alpha, beta, args.gamma)
            print(f"chi_plus  = {r['chi_plus']:.12g}  (err {r['err_plus']:.2e})")
            print(f"chi_minus = {r['chi_minus']:.12g}  (err {r['err_minus']:.2e})")
            return 0
        exp = _load(args)
        if args.command == "solve":
            _emit(dumps_report(run_solve(_require(exp, "solve"))), args.out)
        elif args.command == "check":
            _emit(dumps_report(run_check(_require(exp, "check"))), args.out)
        elif args.command == "simulate":
            traj, summary = run_simulate(_require(exp, "simulate"), args.dt, args.horizon,
                                         args.dynamics)
            path = args.traj or args.out
            if traj is not None:
                if path:
                    _emit(trajectory_csv(traj), path)
                else:
                    sys.stdout.write(trajectory_csv(traj))
            line = " ".join(f"{k}={v}" for k, v in summary.items() if k != "diagnostics")
            print(line, file=sys.stdout if path else sys.stderr)
        elif args.command == "sweep":
            if args.preset:
                p = PRESETS[args.preset]
                param = args.param or p.param
                values = [float(v) for v in args.values.split(",")] if args.values else list(p.values)
            else:
                _require(exp, "sweep without --preset")
                if not args.param or not args.values:
                    raise ValidationError(["sweep needs --param and --values or a --preset"])
                param, values = args.param, [float(v) for v in args.values.split(",")]
            spec = SweepSpec(param, values, args.preset)
            _emit(sweep_csv(run_sweep(exp, spec)), args.out)
    except ConfigError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return 2
    except (CptGameError, ValueError, OSError) as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
