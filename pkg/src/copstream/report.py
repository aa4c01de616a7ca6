"""Run artifacts: trace CSVs, summary tables, loss/win comparison, plots.

All files are written with repr-based float formatting, so repeated runs
with the same configuration are byte-identical.
"""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass, field
from pathlib import Path

from .runner import GridCell, RunResult, config_hash
from .svgplot import line_plot

TRACE_COLUMNS = (
    "t",
    "cer",
    "mistake",
    "alpha1",
    "entropy",
    "mismatch",
    "drift",
    "drift_trigger",
    "pseudo_label",
    "pseudo_conf",
    "pseudo_true",
)

METHOD_ORDER = (
    "lr",
    "pac",
    "perceptron",
    "ridge",
    "sgdc",
    "ol_mdisf",
    "ol_mdisf_f",
    "ol_mdisf_l",
)
REGIME_ORDER = ("capricious", "trapezoidal")

TIES_EXCLUDE = "exclude"
TIES_REFERENCE = "reference"


def _fmt(value) -> str:
    if value is None:
        return ""
    if isinstance(value, bool):
        return str(int(value))
    if isinstance(value, float):
        return repr(value)
    return str(value)


# -- per-run files -----------------------------------------------------------


def write_trace_csv(result: RunResult, path: str | Path) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(TRACE_COLUMNS)
        for row in result.trace:
            writer.writerow([_fmt(row[col]) for col in TRACE_COLUMNS])


def read_trace_csv(path: str | Path) -> list[dict]:
    rows = []
    with open(path, newline="") as fh:
        for raw in csv.DictReader(fh):
            row: dict = {}
            for key, val in raw.items():
                if val == "":
                    row[key] = None
                elif key in ("t", "mistake", "drift", "pseudo_label", "pseudo_true"):
                    row[key] = int(val)
                elif key == "drift_trigger":
                    row[key] = val
                else:
                    row[key] = float(val)
            rows.append(row)
    return rows


def write_weights_csv(result: RunResult, path: str | Path) -> None:
    if not result.weight_snapshots:
        return
    width = len(result.weight_snapshots[0]) - 3
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(
            ["t", "learner"] + [f"w{j}" for j in range(width)] + ["bias"]
        )
        for row in result.weight_snapshots:
            writer.writerow([_fmt(v) for v in row])


def write_run_outputs(result: RunResult, out_dir: str | Path) -> list[Path]:
    """Write one run's trace (and weight checkpoints) plus a manifest."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    files = []
    trace_path = out_dir / f"{result.run_id}_trace.csv"
    write_trace_csv(result, trace_path)
    files.append(trace_path)
    if result.weight_snapshots:
        weights_path = out_dir / f"{result.run_id}_weights.csv"
        write_weights_csv(result, weights_path)
        files.append(weights_path)
    digest = _result_hash(result)
    manifest = {digest: sorted(p.name for p in files)}
    manifest_path = out_dir / "manifest.json"
    manifest_path.write_text(json.dumps(manifest, sort_keys=True, indent=2) + "\n")
    files.append(manifest_path)
    return files


def _result_hash(result: RunResult) -> str:
    from .runner import RunConfig

    return config_hash(RunConfig.from_dict(result.config))


# -- summary table -----------------------------------------------------------

Table = dict  # (dataset, regime, missing, method) -> cer


def table_from_cells(cells: list[GridCell]) -> Table:
    table: Table = {}
    for cell in cells:
        if cell.result is None:
            continue
        cfg = cell.config
        key = (Path(cfg.dataset).stem, cfg.regime, cfg.label_missing_ratio, cfg.method)
        table[key] = cell.result.final_cer
    return table


def _table_axes(table: Table) -> tuple[list, list, list, list]:
    datasets = sorted({k[0] for k in table})
    regimes = [r for r in REGIME_ORDER if any(k[1] == r for k in table)]
    missings = sorted({k[2] for k in table})
    methods = [m for m in METHOD_ORDER if any(k[3] == m for k in table)]
    methods += sorted({k[3] for k in table} - set(METHOD_ORDER))
    return datasets, regimes, missings, methods


def write_summary_csv(table: Table, path: str | Path) -> None:
    """Table-shaped grid summary: dataset, missing, then methods per regime."""
    datasets, regimes, missings, methods = _table_axes(table)
    header = ["dataset", "missing"]
    for regime in regimes:
        header += [f"{regime}_{m}" for m in methods]
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(header)
        for dataset in datasets:
            for missing in missings:
                row = [dataset, _fmt(missing)]
                for regime in regimes:
                    for method in methods:
                        cer = table.get((dataset, regime, missing, method))
                        row.append(_fmt(cer))
                writer.writerow(row)


def read_table_csv(path: str | Path) -> Table:
    table: Table = {}
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        for raw in reader:
            dataset = raw["dataset"]
            missing = float(raw["missing"])
            for col, val in raw.items():
                if col in ("dataset", "missing") or val in (None, ""):
                    continue
                regime, _, method = col.partition("_")
                table[(dataset, regime, missing, method)] = float(val)
    return table


# -- loss/win comparison -----------------------------------------------------


@dataclass
class ComparisonResult:
    reference: str
    ties: str
    # regime -> competitor -> (loss, win, tie_count); loss counts cells where
    # the competitor beat the reference.
    per_regime: dict = field(default_factory=dict)
    totals: dict = field(default_factory=dict)
    warnings: list = field(default_factory=list)

    def formatted(self, regime: str, method: str) -> str:
        if method == self.reference:
            loss, win, _ = self.totals[regime]
        else:
            loss, win, _ = self.per_regime[regime][method]
        return f"{loss}/{win}"


def compare_table(
    table: Table,
    reference: str = "ol_mdisf",
    ties: str = TIES_EXCLUDE,
    competitors: list[str] | None = None,
) -> ComparisonResult:
    """Count per-competitor cells that beat (loss) or trail (win) the reference.

    ``ties=TIES_EXCLUDE`` drops exactly-equal cells from both counts;
    ``ties=TIES_REFERENCE`` credits them to the reference's win column, which
    is the convention the reference results table uses. The reference's own
    column aggregates all competitors.
    """
    if ties not in (TIES_EXCLUDE, TIES_REFERENCE):
        raise ValueError(f"unknown tie policy {ties!r}")
    regimes = sorted({k[1] for k in table})
    result = ComparisonResult(reference=reference, ties=ties)
    for regime in regimes:
        ref_cells = {
            (k[0], k[2]): v for k, v in table.items() if k[1] == regime and k[3] == reference
        }
        methods = competitors or [
            m
            for m in dict.fromkeys(k[3] for k in sorted(table))
            if m != reference and any(k[1] == regime and k[3] == m for k in table)
        ]
        per: dict[str, tuple[int, int, int]] = {}
        total_loss = total_win = total_tie = 0
        for method in methods:
            comp_cells = {
                (k[0], k[2]): v
                for k, v in table.items()
                if k[1] == regime and k[3] == method
            }
            loss = win = tie = 0
            for cell, ref_cer in sorted(ref_cells.items()):
                if cell not in comp_cells:
                    result.warnings.append(
                        f"missing cell {cell} for {method} ({regime})"
                    )
                    continue
                comp_cer = comp_cells[cell]
                if comp_cer < ref_cer:
                    loss += 1
                elif comp_cer > ref_cer:
                    win += 1
                else:
                    tie += 1
            for cell in sorted(comp_cells):
                if cell not in ref_cells:
                    result.warnings.append(
                        f"missing reference cell {cell} ({regime})"
                    )
            if ties == TIES_REFERENCE:
                win += tie
            per[method] = (loss, win, tie)
            total_loss += loss
            total_win += win
            total_tie += tie
        result.per_regime[regime] = per
        result.totals[regime] = (total_loss, total_win, total_tie)
    return result


def write_loss_win_csv(comparison: ComparisonResult, path: str | Path) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["regime", "method", "loss", "win", "ties", "formatted"])
        for regime in sorted(comparison.per_regime):
            for method, (loss, win, tie) in comparison.per_regime[regime].items():
                writer.writerow(
                    [regime, method, loss, win, tie, f"{loss}/{win}"]
                )
            t_loss, t_win, t_tie = comparison.totals[regime]
            writer.writerow(
                [
                    regime,
                    comparison.reference,
                    t_loss,
                    t_win,
                    t_tie,
                    f"{t_loss}/{t_win}",
                ]
            )


# -- grid outputs ------------------------------------------------------------


def _plot_cer_trends(
    cells: list[GridCell], out_dir: Path, downsample: int
) -> list[Path]:
    """One CER-trend plot per (dataset, regime) at the lowest missing ratio."""
    groups: dict[tuple[str, str], dict] = {}
    for cell in cells:
        if cell.result is None:
            continue
        cfg = cell.config
        key = (Path(cfg.dataset).stem, cfg.regime)
        groups.setdefault(key, {})
        ratio = cfg.label_missing_ratio
        groups[key].setdefault(ratio, {})[cfg.method] = cell.result
    files = []
    for (dataset, regime), by_ratio in sorted(groups.items()):
        ratio = min(by_ratio)
        methods = by_ratio[ratio]
        series = [
            (method, methods[method].cer_trajectory)
            for method in METHOD_ORDER
            if method in methods
        ]
        if not series:
            continue
        path = out_dir / f"cer_{dataset}_{regime}.svg"
        line_plot(
            path,
            series,
            title=f"{dataset} ({regime}, missing {ratio:g})",
            x_label="t",
            y_label="CER",
            downsample=downsample,
        )
        files.append(path)

        if "ol_mdisf" in methods:
            ab_series = [("alpha1", methods["ol_mdisf"].alpha_trajectory or [])]
            for method in ("ol_mdisf", "ol_mdisf_f", "ol_mdisf_l"):
                if method in methods:
                    ab_series.append((f"CER {method}", methods[method].cer_trajectory))
            ab_path = out_dir / f"ablation_{dataset}_{regime}.svg"
            line_plot(
                ab_path,
                ab_series,
                title=f"{dataset} ({regime}, missing {ratio:g}) weight dynamics",
                x_label="t",
                y_label="alpha1 / CER",
                downsample=downsample,
            )
            files.append(ab_path)
    return files


def write_grid_outputs(
    cells: list[GridCell],
    out_dir: str | Path,
    downsample: int = 1,
    reference: str = "ol_mdisf",
) -> dict:
    """Write traces, summary, loss/win table, plots, and the manifest."""
    out_dir = Path(out_dir)
    traces_dir = out_dir / "traces"
    plots_dir = out_dir / "plots"
    traces_dir.mkdir(parents=True, exist_ok=True)
    plots_dir.mkdir(parents=True, exist_ok=True)

    manifest: dict[str, list[str]] = {}
    for cell in cells:
        digest = config_hash(cell.config)
        if cell.result is None:
            manifest[digest] = []
            continue
        files = [traces_dir / f"{cell.result.run_id}.csv"]
        write_trace_csv(cell.result, files[0])
        if cell.result.weight_snapshots:
            wpath = traces_dir / f"{cell.result.run_id}_weights.csv"
            write_weights_csv(cell.result, wpath)
            files.append(wpath)
        manifest[digest] = sorted(str(p.relative_to(out_dir)) for p in files)

    shared: list[Path] = []
    table = table_from_cells(cells)
    if table:
        summary_path = out_dir / "summary.csv"
        write_summary_csv(table, summary_path)
        shared.append(summary_path)
        methods = {k[3] for k in table}
        if reference in methods and len(methods) > 1:
            comparison = compare_table(table, reference=reference)
            loss_win_path = out_dir / "loss_win.csv"
            write_loss_win_csv(comparison, loss_win_path)
            shared.append(loss_win_path)
    shared.extend(_plot_cer_trends(cells, plots_dir, downsample))

    manifest["_grid"] = sorted(str(p.relative_to(out_dir)) for p in shared)
    manifest_path = out_dir / "manifest.json"
    manifest_path.write_text(json.dumps(manifest, sort_keys=True, indent=2) + "\n")
    return manifest
