"""Command line: ``quadvs run | compare | list-scenarios``.

Exit codes: 0 converged, 2 configuration error, 3 tracking lost,
4 not converged, 5 numerical fault.
"""

from __future__ import annotations

import argparse
import csv
import sys
from pathlib import Path

from .config import ConfigError, RunConfig, load_config
from .metrics import COMPARE_COLUMNS, compare_runs
from .runner import _fmt, run_scenario
from .scenarios import SCENARIOS, list_scenarios, scenario_config

EXIT_CONFIG = 2


def _resolve(args) -> RunConfig:
    if args.config and args.scenario:
        raise ConfigError("give either --config or --scenario, not both")
    if args.config:
        cfg = load_config(args.config)
    elif args.scenario:
        try:
            cfg = scenario_config(args.scenario)
        except KeyError as exc:
            raise ConfigError(str(exc)) from exc
    else:
        raise ConfigError("one of --config or --scenario is required")
    changes = {}
    if args.seed is not None:
        changes["seed"] = args.seed
    if args.output is not None:
        changes["output_dir"] = args.output
    if getattr(args, "observer_mode", None):
        changes["observer_mode"] = args.observer_mode
    if args.duration is not None:
        changes["duration"] = args.duration
    return cfg.replace(**changes) if changes else cfg


def _print_metrics(m) -> None:
    conv = "-" if m.convergence_time is None else f"{m.convergence_time:.2f}s"
    print(f"{m.scenario} [{m.observer_mode}, {m.tier}] status={m.status} converged_at={conv} "
          f"rms={m.tracking_rms:.4f}m max={m.tracking_max:.4f}m")


def cmd_run(args) -> int:
    cfg = _resolve(args)
    result = run_scenario(cfg)
    _print_metrics(result.metrics)
    print(f"outputs written to {result.output_dir}")
    return result.exit_code


def cmd_compare(args) -> int:
    ids = args.scenario or ([] if args.config else list(SCENARIOS))
    configs = []
    if args.config:
        configs.append(load_config(args.config))
    for sid in ids:
        try:
            configs.append(scenario_config(sid))
        except KeyError as exc:
            raise ConfigError(str(exc)) from exc
    out_dir = Path(args.output or "runs/compare")
    rows = []
    for cfg in configs:
        if args.seed is not None:
            cfg = cfg.replace(seed=args.seed)
        if args.duration is not None:
            cfg = cfg.replace(duration=args.duration)
        res = {}
        for mode in ("sto", "wosto"):
            run_cfg = cfg.replace(observer_mode=mode, output_dir=str(out_dir / cfg.scenario / mode))
            res[mode] = run_scenario(run_cfg).metrics
            _print_metrics(res[mode])
        rows.append(compare_runs(res["sto"], res["wosto"]))
    out_dir.mkdir(parents=True, exist_ok=True)
    with open(out_dir / "comparison.csv", "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\r\n")
        w.writerow(COMPARE_COLUMNS)
        for r in rows:
            w.writerow([_fmt(r[c]) for c in COMPARE_COLUMNS])
    print(f"comparison written to {out_dir / 'comparison.csv'}")
    return 0


def cmd_list(args) -> int:
    for sid, desc in list_scenarios():
        print(f"{sid:12s} {desc}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="quadvs", description="Quadruped manipulator visual-servoing scenarios")
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp, multi=False):
        sp.add_argument("--config", help="YAML run configuration")
        if multi:
            sp.add_argument("--scenario", action="append", help="catalog scenario id (repeatable)")
        else:
            sp.add_argument("--scenario", help="catalog scenario id")
        sp.add_argument("--seed", type=int)
        sp.add_argument("--output", help="output directory")
        sp.add_argument("--duration", type=float, help="override the run duration, seconds")

    r = sub.add_parser("run", help="run one scenario")
    common(r)
    r.add_argument("--observer-mode", choices=("sto", "wosto"))
    r.set_defaults(func=cmd_run)
    c = sub.add_parser("compare", help="run STO and woSTO modes side by side")
    common(c, multi=True)
    c.set_defaults(func=cmd_compare)
    ls = sub.add_parser("list-scenarios", help="print the scenario catalog")
    ls.set_defaults(func=cmd_list)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
