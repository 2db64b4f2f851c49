"""Command-line entry point.

Subcommands: check, estimate, separate, orbit, oseledets, example-torus,
leslie-demo.  Exit codes: 0 success, 1 configuration error, 2 model
assumption hard failure (a trajectory violated positivity), 3 numerical
failure.
"""

from __future__ import annotations

import argparse
import json
import sys

from .config import load_config, validate_config
from .errors import ConfigError, EstimationError, PositivityViolation
from .pipelines import COMMANDS, run_command

_FIBONACCI_LESLIE = {
    "model": {"kind": "leslie", "n": 2,
              "m": {"dist": "constant", "values": [1.0, 1.0]},
              "b": {"dist": "constant", "values": [1.0]}},
    "estimator": {"horizon": 200, "warmup": 60, "lag": 2},
}

_TORUS_DEFAULT = {"model": {"kind": "torus-example"}}


def _parser():
    p = argparse.ArgumentParser(prog="poscocycle",
                                description="Positive random cocycles: principal directions, "
                                            "Lyapunov exponents, exponential separation.")
    sub = p.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        sp = sub.add_parser(name)
        sp.add_argument("--config", help="path to the JSON run configuration")
        sp.add_argument("--seed", type=int, help="override the config seed")
        sp.add_argument("--horizon", type=float, help="override the estimation horizon")
        sp.add_argument("--out", help="override the output directory")
        if name == "example-torus":
            sp.add_argument("--rho", type=float, help="rotation number in (0, 1)")
            sp.add_argument("--sigma-lo", type=float, help="lower edge of the separation-rate window")
            sp.add_argument("--sigma-hi", type=float, help="upper edge of the separation-rate window")
    return p


def main(argv=None) -> int:
    args = _parser().parse_args(argv)
    try:
        cfg = _config_for(args)
        doc = run_command(args.command, cfg, out_dir=args.out)
    except (ConfigError, ValueError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 1
    except PositivityViolation as exc:
        print(f"model assumption failure: {exc}", file=sys.stderr)
        return 2
    except (EstimationError, FloatingPointError, ArithmeticError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return 3
    _print_summary(doc)
    return 0


def _config_for(args):
    if args.config:
        cfg = load_config(args.config)
    elif args.command == "leslie-demo":
        cfg = validate_config(json.loads(json.dumps(_FIBONACCI_LESLIE)))
    elif args.command == "example-torus":
        cfg = validate_config(json.loads(json.dumps(_TORUS_DEFAULT)))
    else:
        raise ConfigError("missing required option '--config'")
    if args.seed is not None:
        cfg["seed"] = args.seed
    if args.horizon is not None:
        cfg["estimator"]["horizon"] = args.horizon
        cfg["estimator_user_keys"] = sorted(set(cfg.get("estimator_user_keys", ())) | {"horizon"})
    if args.command == "example-torus":
        if getattr(args, "rho", None) is not None:
            cfg["model"]["rho"] = args.rho
        lo, hi = getattr(args, "sigma_lo", None), getattr(args, "sigma_hi", None)
        if lo is not None or hi is not None:
            cur = cfg["model"].get("sigma_window") or [1.9, 2.1]
            cfg["model"]["sigma_window"] = [lo if lo is not None else cur[0],
                                            hi if hi is not None else cur[1]]
    return cfg


def _print_summary(doc):
    res = doc["results"]
    cmd = doc["command"]
    if cmd in ("estimate", "leslie-demo"):
        lam = res["lambda1"]
        print(f"lambda1 = {lam['value']:.9g} (ci {lam['ci']:.3g}, horizon {lam['horizon']}, seed {lam['seed']})")
    elif cmd == "separate":
        print(f"lambda1 = {res['lambda1']['value']:.9g}  lambda2 = {res['lambda2']['value']:.9g}  "
              f"sigma = {res['sigma']['value']:.9g}")
    elif cmd == "oseledets":
        print("exponents:", ", ".join(f"{v:.9g}" for v in res["exponents"]))
    elif cmd == "orbit":
        print(f"pullback depth {res['depth']}; depth-doubling direction drift {res['convergence_distance']:.3e}")
    elif cmd == "example-torus":
        for item in res["items"]:
            print(f"[{'PASS' if item['passed'] else 'FAIL'}] {item['name']}: {item['detail']}")
    elif cmd == "check":
        for rep in res["assumption_reports"]:
            extra = ""
            if rep["verdict"] == "empirical":
                extra = f" (estimate {rep['estimate']:.6g} +/- {rep['ci']:.3g})"
            print(f"{rep['condition']}: {rep['verdict']}{extra}")


if __name__ == "__main__":
    sys.exit(main())
