"""CSV emitters and readers for every table the pipeline produces.

Each file opens with a ``# safestock:<table> v<N>`` line so format drift shows up in
diffs; floats are written with ``repr`` so they reload bit-for-bit.
"""
from __future__ import annotations

import csv
import io
from pathlib import Path

from .demand_model import DemandPmf
from .ingest import item_sort_key
from .optimizer import ClassSummaryRow, Plan, Problem
from .simulator import MODEL_ORDER, GridCell, GridResults
from .stats_tests import NormalityRow, VarianceRow

FORMAT_VERSION = 1
UNDEFINED = "undefined"

NORMALITY_COLUMNS = ("item", "t-stat_SH", "t-stat_DA", "t-stat_AN", "c-val_AN",
                     "p-val_SH", "p-val_DA")
VARIANCE_COLUMNS = ("item", "levene_f-statistics", "p-value")
PMF_COLUMNS = ("item_id", "support", "probability")
GRID_COLUMNS = ("item_id", "model", "target_sl", "realized_cycle_sl", "realized_period_sl",
                "safety_stock_units", "safety_stock_value")
PLAN_COLUMNS = ("item_id", "model", "chosen_target_sl", "realized_cycle_sl",
                "safety_stock_value")
SUMMARY_COLUMNS = ("item_class", "model", "expected_cycle_sl", "expected_period_sl",
                   "safety_stock_value")
COMPARISON_COLUMNS = ("item_id", "item_class", "kde_safety_stock_value",
                      "normal_safety_stock_value")
CURVE_COLUMNS = ("item_id", "model", "target_sl", "realized_cycle_sl")


class FormatError(ValueError):
    pass


def _fmt(value) -> str:
    if value is None:
        return UNDEFINED
    if isinstance(value, float):
        return repr(value)
    return str(value)


def render_table(name: str, columns, rows) -> str:
    buf = io.StringIO()
    buf.write(f"# safestock:{name} v{FORMAT_VERSION}\n")
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(columns)
    for row in rows:
        w.writerow([_fmt(v) for v in row])
    return buf.getvalue()


def write_table(path, name: str, columns, rows) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(render_table(name, columns, rows))
    return path


def read_table(path, name: str, columns) -> list[dict[str, str]]:
    path = Path(path)
    lines = path.read_text().splitlines()
    expected = f"# safestock:{name} v{FORMAT_VERSION}"
    if not lines or lines[0] != expected:
        raise FormatError(f"{path.name}: expected first line {expected!r}")
    reader = csv.DictReader(lines[1:])
    if tuple(reader.fieldnames or ()) != tuple(columns):
        raise FormatError(f"{path.name}: unexpected columns {reader.fieldnames}")
    return list(reader)


def normality_rows(rows: list[NormalityRow]):
    for r in rows:
        sw, da, ad = r.shapiro, r.dagostino, r.anderson
        yield (r.item_id,
               sw and sw.statistic, da and da.statistic, ad and ad.statistic,
               ad and ad.critical_value_5pct, sw and sw.p_value, da and da.p_value)


def variance_rows(rows: list[VarianceRow]):
    for r in rows:
        res = r.result
        yield r.item_id, res and res.f_statistic, res and res.p_value


def pmf_rows(pmfs: dict[str, DemandPmf]):
    for item_id in sorted(pmfs, key=item_sort_key):
        pmf = pmfs[item_id]
        for x, p in zip(pmf.support.tolist(), pmf.probabilities.tolist()):
            yield item_id, x, p


def grid_rows(grid: GridResults):
    for c in grid:
        yield (c.item_id, c.model, c.target_sl, c.realized_cycle_sl, c.realized_period_sl,
               c.safety_stock_units, c.safety_stock_value)


def read_grid(path) -> GridResults:
    cells = []
    for row in read_table(path, "grid", GRID_COLUMNS):
        try:
            cells.append(GridCell(row["item_id"], row["model"], float(row["target_sl"]),
                                  float(row["realized_cycle_sl"]),
                                  float(row["realized_period_sl"]),
                                  float(row["safety_stock_units"]),
                                  float(row["safety_stock_value"])))
        except ValueError:
            raise FormatError(f"{Path(path).name}: non-numeric value in row {row}") from None
    return GridResults(cells)


def plan_rows(plans: dict[str, Plan], problems: dict[str, Problem], grid: GridResults):
    for kind in MODEL_ORDER:
        plan, problem = plans[kind.value], problems[kind.value]
        for it in problem.items:
            cell = grid.get(it.item_id, plan.level(problem, it.item_id), kind)
            yield (it.item_id, kind.value, cell.target_sl, cell.realized_cycle_sl,
                   cell.safety_stock_value)


def summary_rows(rows: list[ClassSummaryRow]):
    for r in rows:
        yield (r.item_class, r.model, r.expected_cycle_sl, r.expected_period_sl,
               r.safety_stock_value)


def comparison_rows(plans: dict[str, Plan], problems: dict[str, Problem], grid: GridResults):
    """Per-item chosen safety-stock value under each model, side by side."""
    kde, normal = problems["kde"], problems["normal"]
    for it in kde.items:
        values = [grid.get(it.item_id, plans[p.model].level(p, it.item_id), p.model)
                  .safety_stock_value for p in (kde, normal)]
        yield (it.item_id, it.item_class, *values)


def emit_service_curves(grid: GridResults) -> list[tuple]:
    """Long-format (item, model, target, realized cycle SL) rows, targets ascending."""
    order = {k.value: n for n, k in enumerate(MODEL_ORDER)}
    cells = sorted(grid, key=lambda c: (item_sort_key(c.item_id), order[c.model], c.target_sl))
    return [(c.item_id, c.model, c.target_sl, c.realized_cycle_sl) for c in cells]


def format_summary(rows: list[ClassSummaryRow]) -> str:
    """Plain-text class summary for the terminal."""
    label = {"kde": "KDE-based Model", "normal": "Normal Model"}
    lines = [f"{'Class':<6}{'Model':<17}{'Cycle SL':>10}{'Period SL':>11}{'SS Value':>16}"]
    for r in rows:
        lines.append(f"{r.item_class:<6}{label[r.model]:<17}{r.expected_cycle_sl:>10.2%}"
                     f"{r.expected_period_sl:>11.2%}{r.safety_stock_value:>16,.2f}")
    return "\n".join(lines)
