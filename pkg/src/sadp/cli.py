"""Command-line front end.

Subcommands:
  train    --config <path> [--seed N] [--out <dir>]
  compare  --configs <paths...> --seeds <list> --out <dir>
  privacy  --q Q --sigma S --delta D --tau N

Exit codes: 0 success, 2 invalid config, 3 budget infeasible, 4 I/O error.
"""

from __future__ import annotations

import argparse
import dataclasses
import sys
from pathlib import Path

from . import accountant, harness, models

EXIT_OK = 0
EXIT_INVALID_CONFIG = 2
EXIT_BUDGET_INFEASIBLE = 3
EXIT_IO_ERROR = 4


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="sadp")
    sub = parser.add_subparsers(dest="command", required=True)

    p_train = sub.add_parser("train", help="run one training experiment")
    p_train.add_argument("--config", required=True)
    p_train.add_argument("--seed", type=int, default=None)
    p_train.add_argument("--out", default=".")
    p_train.add_argument("--eval-set", choices=["held_out", "test"], default=None)
    p_train.add_argument("--clamp-tau-floor", action="store_true", default=None)
    p_train.add_argument("--json", action="store_true", help="also write a JSON trace")

    p_cmp = sub.add_parser("compare", help="run several configs over seeds")
    p_cmp.add_argument("--configs", nargs="+", required=True)
    p_cmp.add_argument("--seeds", required=True, help="comma-separated seed list")
    p_cmp.add_argument("--out", default=".")
    p_cmp.add_argument("--target-accuracy", type=float, default=None)

    p_priv = sub.add_parser("privacy", help="epsilon for a given charged step count")
    p_priv.add_argument("--q", type=float, required=True)
    p_priv.add_argument("--sigma", type=float, required=True)
    p_priv.add_argument("--delta", type=float, required=True)
    p_priv.add_argument("--tau", type=int, required=True)
    p_priv.add_argument("--tight", action="store_true")
    return parser


def _apply_overrides(config, args):
    overrides = {}
    if args.seed is not None:
        overrides["seed"] = args.seed
    if args.eval_set is not None:
        overrides["eval_set"] = args.eval_set
    if args.clamp_tau_floor:
        overrides["clamp_tau_floor"] = True
    return dataclasses.replace(config, **overrides) if overrides else config


def _cmd_train(args) -> int:
    config = _apply_overrides(harness.load_config(args.config), args)
    w, spend, records = harness.train(config)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    harness.emit_trace(records, out / "trace.csv", json_mirror=args.json)
    models.save_checkpoint(out / "final.params", w)
    print(
        f"{config.method}: {len(records)} iterations, "
        f"final loss {records[-1].eval_loss:.6f}, "
        f"epsilon {spend.epsilon:.4f} (alpha={spend.best_alpha}, "
        f"delta={spend.delta})"
    )
    return EXIT_OK


def _cmd_compare(args) -> int:
    configs = [harness.load_config(p) for p in args.configs]
    seeds = [int(s) for s in args.seeds.split(",") if s.strip()]
    summaries = harness.compare(configs, seeds, args.target_accuracy)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    harness.emit_summary(summaries, out / "summary.csv", out / "summary.json")
    for s in summaries:
        print(
            f"[{s['config_index']}] {s['method']}: "
            f"acc {s['mean_final_accuracy']:.4f} +/- {s['std_final_accuracy']:.4f}, "
            f"eps {s['mean_final_epsilon']:.4f}"
        )
    return EXIT_OK


def _cmd_privacy(args) -> int:
    state = accountant.AccountantState(
        q=args.q, sigma=args.sigma, delta=args.delta, tau=args.tau
    )
    spend = accountant.spend(state, tight_conversion=args.tight)
    print(
        f"epsilon = {spend.epsilon:.6f} at alpha = {spend.best_alpha} "
        f"(q={args.q}, sigma={args.sigma}, delta={args.delta}, tau={args.tau})"
    )
    return EXIT_OK


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        if args.command == "train":
            return _cmd_train(args)
        if args.command == "compare":
            return _cmd_compare(args)
        return _cmd_privacy(args)
    except (harness.InvalidConfigError, accountant.InvalidParameterError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID_CONFIG
    except accountant.BudgetInfeasibleError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_BUDGET_INFEASIBLE
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_IO_ERROR


if __name__ == "__main__":
    sys.exit(main())
