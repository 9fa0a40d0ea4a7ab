"""Command line front end: single runs and multi-protocol comparisons.

    oppnet run scenarios/pois2.conf --strategy prophet --seed 3
    oppnet compare --configs scenarios/pois2.conf scenarios/nopois.conf \\
        --strategies epidemic prophet integrated --seeds 1 2 3 --figures out/
"""

from __future__ import annotations

import argparse
import os
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional, Sequence

from .config import STRATEGY_NAMES, ConfigError, ScenarioConfig, parse_scenario
from .core import Simulation
from .plotting import render_figures
from .report import emit_report, write_timeseries
from .stats import StatsReport, average_reports

DISPLAY = {"epidemic": "Epidemic", "prophet": "PROPHET", "integrated": "Integrated"}


def run_one(cfg: ScenarioConfig, seed: int) -> tuple[StatsReport, list[dict]]:
    sim = Simulation(cfg, seed)
    report = sim.run()
    return report, sim.timeseries()


def _run_key(args):
    cfg, seed = args
    return run_one(cfg, seed)


class BatchError(RuntimeError):
    pass


@dataclass
class Comparison:
    """Results of a comparison batch keyed by (scenario, strategy, seed)."""

    scenarios: list[str]
    strategies: list[str]
    seeds: list[int]
    reports: dict[tuple[str, str, int], StatsReport] = field(default_factory=dict)
    series: dict[tuple[str, str, int], list[dict]] = field(default_factory=dict)

    @staticmethod
    def label(scenario: str, strategy: str) -> str:
        return f"{DISPLAY.get(strategy, strategy)} ({scenario})"

    def averaged(self) -> list[tuple[str, StatsReport]]:
        cols = []
        for sc in self.scenarios:
            for st in self.strategies:
                reps = [self.reports[(sc, st, s)] for s in self.seeds]
                cols.append((self.label(sc, st), average_reports(reps)))
        return cols

    def per_seed(self) -> list[tuple[str, StatsReport]]:
        return [(f"{self.label(sc, st)} seed={s}", self.reports[(sc, st, s)])
                for sc in self.scenarios for st in self.strategies for s in self.seeds]

    def mean_series(self) -> dict[str, list[dict]]:
        """Seed-averaged timeseries per column."""
        out = {}
        for sc in self.scenarios:
            for st in self.strategies:
                runs = [self.series[(sc, st, s)] for s in self.seeds]
                rows = []
                for samples in zip(*runs):
                    row = {"time": samples[0]["time"]}
                    for key in samples[0]:
                        if key != "time":
                            row[key] = sum(r[key] for r in samples) / len(samples)
                    rows.append(row)
                out[self.label(sc, st)] = rows
        return out


def compare(configs: Sequence[ScenarioConfig], strategies: Sequence[str],
            seeds: Sequence[int], jobs: int = 1) -> Comparison:
    """Run every (config, strategy, seed) combination."""
    if not configs:
        raise BatchError("no scenario configs given")
    if not strategies:
        raise BatchError("no strategies given")
    if not seeds:
        raise BatchError("no seeds given")
    for st in strategies:
        if st not in STRATEGY_NAMES:
            raise BatchError(f"unknown strategy {st!r}")
    names = [c.name for c in configs]
    if len(set(names)) != len(names):
        raise BatchError(f"scenario names must be distinct: {names}")

    keys, tasks = [], []
    for cfg in configs:
        for st in strategies:
            for seed in seeds:
                keys.append((cfg.name, st, seed))
                tasks.append((cfg.with_strategy(st), seed))

    result = Comparison(names, list(strategies), list(seeds))
    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            futures = [pool.submit(_run_key, t) for t in tasks]
            outcomes = []
            for key, fut in zip(keys, futures):
                try:
                    outcomes.append(fut.result())
                except Exception as exc:
                    raise BatchError(f"run {key} failed: {exc}") from exc
    else:
        outcomes = []
        for key, task in zip(keys, tasks):
            try:
                outcomes.append(_run_key(task))
            except Exception as exc:
                raise BatchError(f"run {key} failed: {exc}") from exc
    for key, (report, series) in zip(keys, outcomes):
        result.reports[key] = report
        result.series[key] = series
    return result


def _default_seed() -> Optional[int]:
    value = os.environ.get("OPPNET_SEED")
    return int(value) if value else None


def _emit(reports, fmt: str, out: Optional[str]) -> None:
    text = emit_report(reports, fmt, out)
    if out is None:
        sys.stdout.write(text)


def cmd_run(args) -> int:
    cfg = parse_scenario(args.config)
    if args.strategy:
        cfg = cfg.with_strategy(args.strategy)
    seed = args.seed
    if seed is None:
        seed = _default_seed()
    if seed is None:
        seed = cfg.seed
    report, series = run_one(cfg, seed)
    label = Comparison.label(cfg.name, cfg.strategy)
    _emit([(label, report)], args.format, args.out)
    if args.timeseries:
        write_timeseries(series, args.timeseries)
    if args.figures:
        render_figures([(label, report)], {label: series}, args.figures)
    return 0


def cmd_compare(args) -> int:
    configs = [parse_scenario(p) for p in args.configs]
    seeds = args.seeds
    if not seeds:
        env = _default_seed()
        seeds = [env] if env is not None else [configs[0].seed]
    result = compare(configs, args.strategies, seeds, jobs=args.jobs)
    reports = result.averaged()
    if args.per_seed:
        reports = result.per_seed() + reports
    _emit(reports, args.format, args.out)
    if args.timeseries:
        for label, rows in result.mean_series().items():
            slug = label.lower().replace(" ", "_").replace("(", "").replace(")", "")
            path = Path(args.timeseries)
            write_timeseries(rows, path.with_name(f"{path.stem}_{slug}{path.suffix or '.csv'}"))
    if args.figures:
        render_figures(result.averaged(), result.mean_series(), args.figures)
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="oppnet", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("run", help="run one scenario")
    p.add_argument("config")
    p.add_argument("--seed", type=int, default=None,
                   help="RNG seed (default: $OPPNET_SEED, then sim.seed)")
    p.add_argument("--strategy", choices=STRATEGY_NAMES)
    p.add_argument("--out", help="write the report here instead of stdout")
    p.add_argument("--format", choices=("table", "csv", "json"), default="table")
    p.add_argument("--timeseries", help="per-interval CSV of delivery ratio and delay")
    p.add_argument("--figures", help="directory for PNG figures")
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("compare", help="run strategies x scenarios x seeds")
    p.add_argument("--configs", nargs="+", required=True)
    p.add_argument("--strategies", nargs="+", choices=STRATEGY_NAMES, required=True)
    p.add_argument("--seeds", nargs="*", type=int, default=None)
    p.add_argument("--jobs", type=int, default=1, help="parallel worker processes")
    p.add_argument("--per-seed", action="store_true", help="also list every single run")
    p.add_argument("--out")
    p.add_argument("--format", choices=("table", "csv", "json"), default="table")
    p.add_argument("--timeseries", help="CSV path prefix for seed-averaged timeseries")
    p.add_argument("--figures", help="directory for PNG figures")
    p.set_defaults(func=cmd_compare)
    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (ConfigError, BatchError, OSError) as exc:
        print(f"oppnet: error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
