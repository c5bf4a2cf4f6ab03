"""Command line entry point: ``onebit <subcommand> [flags]``."""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from . import harness
from .core import ParamError, Variance, tail_from_dict
from .harness import ConfigError
from .schedule import make_schedule


def _emit(text: str, out) -> None:
    if out:
        Path(out).parent.mkdir(parents=True, exist_ok=True)
        Path(out).write_text(text)
    else:
        sys.stdout.write(text)


def _load(args):
    if not args.config:
        raise ConfigError("--config is required for this subcommand")
    cfg = harness.load_config(args.config)
    if args.variant:
        raw = cfg.to_dict()
        raw["variant"] = args.variant
        if args.variant == "moment" and cfg.tail.name != "moment":
            raw.pop("tail")
        if args.variant == "multivariate" and "distributions" not in raw:
            raw["distributions"] = [raw.pop("distribution")]
        cfg = harness.parse_config(json.dumps(raw))
    if args.seed is not None:
        cfg = cfg.with_seed(args.seed)
    return cfg


def _raw(args) -> dict:
    return json.loads(Path(args.config).read_text()) if args.config else {}


def cmd_estimate(args) -> int:
    cfg = _load(args)
    rep, _, _ = harness.run_estimate(cfg)
    _emit(rep.to_json(indent=2) + "\n", args.out)
    return 0


def cmd_trials(args) -> int:
    cfg = _load(args)
    summary, _ = harness.run_trials(cfg, workers=args.workers, out=args.out)
    print(json.dumps(summary.to_dict(include_time=True), sort_keys=True, indent=2))
    return 0 if summary.passed else 1


def cmd_sweep(args) -> int:
    raw = _raw(args).get("sweep", {})
    tails = [tail_from_dict(t) for t in raw["tails"]] if "tails" in raw else None
    kw = {"ratios": raw.get("ratios", (4, 16, 64)), "delta": raw.get("delta", 0.1)}
    if tails:
        kw["tails"] = tails
    rows = harness.sweep_complexity(**kw)
    _emit(harness.rows_to_csv(rows, harness.SWEEP_COLUMNS), args.out)
    if not harness.imax_ordering_holds(rows):
        print("warning: a lighter-tailed schedule needs more regions than the variance one", file=sys.stderr)
        return 1
    return 0


def cmd_gap(args) -> int:
    raw = _raw(args).get("gap", {})
    lam = float(raw.get("lam_over_sigma", 128))
    eps = float(raw.get("eps", 0.25))
    delta = float(raw.get("delta", 0.1))
    budgets = raw.get("budgets", ["auto"])
    budgets = [harness.adaptive_budget(lam, 1.0, eps, delta) if b == "auto" else int(b) for b in budgets]
    seed = args.seed if args.seed is not None else int(raw.get("master_seed", 0))
    rows = harness.gap_experiment(lam, eps, delta, budgets, int(raw.get("trials", 300)), seed,
                                  raw.get("mode", "aggregate"), workers=args.workers)
    _emit(harness.rows_to_csv(rows, harness.GAP_COLUMNS), args.out)
    return 0


def cmd_schedule(args) -> int:
    raw = _raw(args)
    if "params" not in raw:
        raise ConfigError("schedule needs a config with 'params'")
    p = raw["params"]
    tail = tail_from_dict(raw.get("tail")) if raw.get("tail") else Variance()
    sched = make_schedule(float(raw.get("center", 0.0)), float(p["sigma"]), float(p["eps"]),
                          float(p["delta"]), tail)
    _emit(sched.to_csv(), args.out)
    return 0


def cmd_localize(args) -> int:
    cfg = _load(args)
    _emit(json.dumps(harness.run_localize(cfg), sort_keys=True, indent=2) + "\n", args.out)
    return 0


COMMANDS = {
    "estimate": (cmd_estimate, "one run, JSON report"),
    "trials": (cmd_trials, "Monte Carlo trials with a PAC check; exit code 1 on failure"),
    "sweep": (cmd_sweep, "sample-complexity table as CSV"),
    "gap": (cmd_gap, "adaptive vs non-adaptive failure rates as CSV"),
    "schedule": (cmd_schedule, "region budget table as CSV"),
    "localize": (cmd_localize, "run the localizer only"),
}


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="onebit", description="1-bit interval-query mean estimation")
    sub = ap.add_subparsers(dest="command", required=True)
    for name, (_, help_) in COMMANDS.items():
        sp = sub.add_parser(name, help=help_)
        sp.add_argument("--config", metavar="PATH")
        sp.add_argument("--seed", type=int, metavar="U64")
        sp.add_argument("--out", metavar="PATH")
        sp.add_argument("--workers", type=int, metavar="N",
                        help="worker processes (default: $ONEBIT_WORKERS or 1)")
        sp.add_argument("--variant", choices=harness.VARIANTS)
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return COMMANDS[args.command][0](args)
    except (ConfigError, ParamError) as e:
        print(f"error: {e}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
