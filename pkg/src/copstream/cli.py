"""Command line entry points: run, grid, report, synth.

Output locations default to the COPSTREAM_OUT environment variable (falling
back to the working directory). Exit status is 0 only when every requested
cell completed.
"""

from __future__ import annotations

import argparse
import os
import sys
from pathlib import Path

import yaml

from .errors import ConfigError, CopstreamError
from .report import (
    TIES_EXCLUDE,
    TIES_REFERENCE,
    compare_table,
    read_table_csv,
    write_grid_outputs,
    write_loss_win_csv,
    write_run_outputs,
)
from .runner import METHODS, RunConfig, run_experiment, run_grid, run_id
from .streams import synthesize
from .synthetic import CORPUS_NAMES, make_benchmark_corpus
from . import streams

ENV_OUT = "COPSTREAM_OUT"

DEFAULT_GRID_METHODS = ["lr", "pac", "perceptron", "ridge", "sgdc", "ol_mdisf"]


def _out_root(explicit: str | None) -> Path:
    if explicit:
        return Path(explicit)
    return Path(os.environ.get(ENV_OUT, "."))


def _load_yaml(path: str) -> dict:
    with open(path) as fh:
        data = yaml.safe_load(fh)
    if not isinstance(data, dict):
        raise ConfigError(f"{path}: expected a mapping at top level")
    return data


def load_run_config(path: str) -> RunConfig:
    return RunConfig.from_dict(_load_yaml(path))


def _deep_merge(base: dict, extra: dict) -> dict:
    merged = dict(base)
    for key, value in extra.items():
        if isinstance(value, dict) and isinstance(merged.get(key), dict):
            merged[key] = _deep_merge(merged[key], value)
        else:
            merged[key] = value
    return merged


def expand_grid(grid: dict) -> list[RunConfig]:
    """Cross datasets x regimes x missing ratios x methods over a base config.

    ``method_overrides`` maps a method id to partial config overrides for
    just that method's cells (e.g. a tamer learning rate for ridge).
    """
    known = {
        "datasets",
        "regimes",
        "missing_ratios",
        "methods",
        "seed",
        "base",
        "method_overrides",
    }
    unknown = set(grid) - known
    if unknown:
        raise ConfigError(f"unknown grid keys: {sorted(unknown)}")
    datasets = grid.get("datasets")
    if not datasets:
        raise ConfigError("grid config needs a non-empty 'datasets' list")
    regimes = grid.get("regimes", ["capricious"])
    ratios = grid.get("missing_ratios", [0.0])
    methods = grid.get("methods", DEFAULT_GRID_METHODS)
    overrides = grid.get("method_overrides", {}) or {}
    bad = [m for m in list(methods) + list(overrides) if m not in METHODS]
    if bad:
        raise ConfigError(f"unknown methods in grid: {bad}")
    seed = grid.get("seed", 0)
    base = grid.get("base", {}) or {}
    configs = []
    for dataset in datasets:
        for regime in regimes:
            for ratio in ratios:
                for method in methods:
                    data = _deep_merge(base, overrides.get(method, {}))
                    data.update(
                        dataset=dataset,
                        regime=regime,
                        label_missing_ratio=ratio,
                        method=method,
                        seed=seed,
                    )
                    configs.append(RunConfig.from_dict(data))
    return configs


def _cmd_run(args: argparse.Namespace) -> int:
    config = load_run_config(args.config)
    config.validate()
    result = run_experiment(config)
    out_dir = (
        Path(args.out)
        if args.out
        else _out_root(config.out_dir) / run_id(config)
    )
    files = write_run_outputs(result, out_dir)
    print(
        f"{result.run_id}: n={result.n} final_cer={result.final_cer:.4f} "
        f"drift_events={len(result.drift_events)} -> {out_dir}"
    )
    for path in files:
        print(f"  {path}")
    return 0


def _cmd_grid(args: argparse.Namespace) -> int:
    grid = _load_yaml(args.config)
    configs = expand_grid(grid)
    cells = run_grid(configs, parallelism=args.parallelism)
    out_dir = Path(args.out) if args.out else _out_root(None) / "grid"
    write_grid_outputs(cells, out_dir, downsample=args.downsample)
    failures = 0
    for cell in cells:
        if cell.ok:
            print(f"ok   {cell.result.run_id} cer={cell.result.final_cer:.4f}")
        else:
            failures += 1
            print(f"FAIL {run_id(cell.config)}: {cell.error}")
    print(f"{len(cells) - failures}/{len(cells)} cells completed -> {out_dir}")
    return 0 if failures == 0 else 1


def _cmd_report(args: argparse.Namespace) -> int:
    source = Path(args.source)
    table_path = source / "summary.csv" if source.is_dir() else source
    if not table_path.exists():
        print(f"no summary table at {table_path}", file=sys.stderr)
        return 1
    table = read_table_csv(table_path)
    comparison = compare_table(table, reference=args.reference, ties=args.ties)
    for regime in sorted(comparison.per_regime):
        per = comparison.per_regime[regime]
        parts = [f"{m}={loss}/{win}" for m, (loss, win, _) in per.items()]
        t_loss, t_win, _ = comparison.totals[regime]
        print(f"{regime}: {' '.join(parts)} {args.reference}={t_loss}/{t_win}")
    for warning in comparison.warnings:
        print(f"warning: {warning}", file=sys.stderr)
    if args.out:
        write_loss_win_csv(comparison, args.out)
        print(f"wrote {args.out}")
    return 0


def _cmd_synth(args: argparse.Namespace) -> int:
    if args.corpus:
        names = tuple(args.names) if args.names else ("wpbc", "ionosphere", "wdbc", "wbc")
        bad = [n for n in names if n not in CORPUS_NAMES]
        if bad:
            print(f"no stand-in shapes for: {bad}", file=sys.stderr)
            return 1
        paths = make_benchmark_corpus(args.corpus, names=names, seed=args.seed)
        for path in paths:
            print(path)
        return 0
    if not args.config or not args.out:
        print("synth needs either --corpus DIR or --config and --out", file=sys.stderr)
        return 1
    config = load_run_config(args.config)
    config.validate()
    from .runner import prepare_dataset

    ds = prepare_dataset(config)
    stream = synthesize(ds, config.stream_config())
    streams.export_stream(stream, args.out)
    print(f"wrote {len(stream)} instances -> {args.out}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="copstream",
        description="Online learning benchmark harness for evolving feature streams.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="execute one run config")
    p_run.add_argument("-c", "--config", required=True, help="run config YAML")
    p_run.add_argument("-o", "--out", help="output directory")
    p_run.set_defaults(func=_cmd_run)

    p_grid = sub.add_parser("grid", help="execute a config matrix")
    p_grid.add_argument("-c", "--config", required=True, help="grid config YAML")
    p_grid.add_argument("-o", "--out", help="output directory")
    p_grid.add_argument("-j", "--parallelism", type=int, default=1)
    p_grid.add_argument("--downsample", type=int, default=1, help="plot thinning")
    p_grid.set_defaults(func=_cmd_grid)

    p_report = sub.add_parser("report", help="loss/win summary from results")
    p_report.add_argument("source", help="grid output dir or a summary CSV")
    p_report.add_argument("--reference", default="ol_mdisf")
    p_report.add_argument(
        "--ties", choices=[TIES_EXCLUDE, TIES_REFERENCE], default=TIES_EXCLUDE
    )
    p_report.add_argument("-o", "--out", help="write loss/win CSV here")
    p_report.set_defaults(func=_cmd_report)

    p_synth = sub.add_parser("synth", help="export streams or stand-in datasets")
    p_synth.add_argument("-c", "--config", help="run config YAML for stream export")
    p_synth.add_argument("-o", "--out", help="stream output path (JSONL)")
    p_synth.add_argument("--corpus", help="write stand-in benchmark CSVs here")
    p_synth.add_argument("--names", nargs="*", help="corpus dataset names")
    p_synth.add_argument("--seed", type=int, default=7)
    p_synth.set_defaults(func=_cmd_synth)
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except CopstreamError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
