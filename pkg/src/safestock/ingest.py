"""Loading and validating the demand history, forecast and item master tables."""
from __future__ import annotations

import csv
import logging
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path

from .config import RunConfig

log = logging.getLogger(__name__)

SERIES_COLUMNS = ("item_id", "week", "quantity")
ITEM_COLUMNS = ("item_id", "class", "lead_time_weeks", "review_period_weeks", "unit_cost")
CLASSES = ("A", "B", "C")


class DataError(ValueError):
    """A malformed input file; the message names the file and row."""


class ValidationError(ValueError):
    def __init__(self, violations: list[str]):
        self.violations = list(violations)
        super().__init__("; ".join(self.violations))


class SeriesKind(str, Enum):
    HISTORY = "history"
    FORECAST = "forecast"


@dataclass(frozen=True)
class ItemRecord:
    item_id: str
    item_class: str
    lead_time_weeks: int
    review_period_weeks: int
    unit_cost: float
    weight: float | None = None

    def __post_init__(self):
        if self.item_class not in CLASSES:
            raise ValueError(f"unknown item class {self.item_class!r}")
        if self.lead_time_weeks < 1 or self.review_period_weeks < 1:
            raise ValueError("lead time and review period must be >= 1")
        if self.unit_cost < 0:
            raise ValueError("unit cost must be nonnegative")
        if self.weight is not None and self.weight < 0:
            raise ValueError("weight must be nonnegative")


@dataclass(frozen=True)
class DemandSeries:
    item_id: str
    kind: SeriesKind
    values: tuple[int, ...]

    def __post_init__(self):
        if any(v < 0 for v in self.values):
            raise ValueError("demand values must be nonnegative")

    def __len__(self):
        return len(self.values)


@dataclass(frozen=True)
class DatasetEntry:
    record: ItemRecord
    history: DemandSeries
    forecast: DemandSeries


@dataclass(frozen=True)
class ValidatedDataset:
    items: dict[str, DatasetEntry]
    config: RunConfig
    warnings: tuple[str, ...] = field(default=(), compare=False)

    def __len__(self):
        return len(self.items)

    def item_ids(self) -> list[str]:
        return sorted(self.items, key=item_sort_key)

    def filter(self, item_ids) -> "ValidatedDataset":
        wanted = set(item_ids)
        missing = wanted - set(self.items)
        if missing:
            raise ValidationError([f"unknown item in filter: {i}" for i in sorted(missing)])
        return ValidatedDataset({k: v for k, v in self.items.items() if k in wanted},
                                self.config, self.warnings)


def item_sort_key(item_id: str):
    """Natural order, so item_2 sorts before item_10."""
    head = item_id.rstrip("0123456789")
    tail = item_id[len(head):]
    return (head, int(tail) if tail else -1, item_id)


def _open_table(path, required: tuple[str, ...], optional: tuple[str, ...] = ()):
    path = Path(path)
    if not path.is_file():
        raise FileNotFoundError(f"input file not found: {path}")
    handle = path.open(newline="")
    reader = csv.reader(handle)
    header = next(reader, None)
    if header is None:
        handle.close()
        raise DataError(f"{path.name}: empty file, expected header {','.join(required)}")
    header = [h.strip() for h in header]
    allowed = [required + opt for opt in ((),) + tuple((o,) for o in optional)]
    if tuple(header) not in allowed:
        handle.close()
        raise DataError(f"{path.name}: header {','.join(header)!r} does not match "
                        f"{','.join(required)}")
    return handle, reader, header


def _parse_int(text: str, what: str, where: str) -> int:
    text = text.strip()
    try:
        return int(text)
    except ValueError:
        raise DataError(f"{where}: {what} {text!r} is not an integer") from None


def _load_series(path, kind: SeriesKind) -> list[DemandSeries]:
    handle, reader, _ = _open_table(path, SERIES_COLUMNS)
    name = Path(path).name
    values: dict[str, list[int]] = {}
    seen: set[tuple[str, int]] = set()
    with handle:
        for row_no, row in enumerate(reader, start=2):
            if not row or all(not c.strip() for c in row):
                continue
            where = f"{name} row {row_no}"
            if len(row) != 3:
                raise DataError(f"{where}: expected 3 fields, got {len(row)}")
            item_id = row[0].strip()
            if not item_id:
                raise DataError(f"{where}: empty item_id")
            week = _parse_int(row[1], "week", where)
            qty = _parse_int(row[2], "quantity", where)
            if qty < 0:
                raise DataError(f"{where}: negative quantity {qty}")
            if (item_id, week) in seen:
                raise DataError(f"{where}: duplicate week {week} for {item_id}")
            seen.add((item_id, week))
            values.setdefault(item_id, []).append(qty)
    return [DemandSeries(i, kind, tuple(v)) for i, v in values.items()]


def load_demand_history(path) -> list[DemandSeries]:
    return _load_series(path, SeriesKind.HISTORY)


def load_forecast(path) -> list[DemandSeries]:
    return _load_series(path, SeriesKind.FORECAST)


def load_item_master(path) -> list[ItemRecord]:
    handle, reader, header = _open_table(path, ITEM_COLUMNS, ("weight",))
    name = Path(path).name
    has_weight = "weight" in header
    records: list[ItemRecord] = []
    seen: set[str] = set()
    with handle:
        for row_no, row in enumerate(reader, start=2):
            if not row or all(not c.strip() for c in row):
                continue
            where = f"{name} row {row_no}"
            if len(row) != len(header):
                raise DataError(f"{where}: expected {len(header)} fields, got {len(row)}")
            item_id = row[0].strip()
            if item_id in seen:
                raise DataError(f"{where}: duplicate item_id {item_id}")
            seen.add(item_id)
            cls = row[1].strip().upper()
            if cls not in CLASSES:
                raise DataError(f"{where}: unknown class {row[1].strip()!r}")
            lead = _parse_int(row[2], "lead_time_weeks", where)
            review = _parse_int(row[3], "review_period_weeks", where)
            if lead < 1 or review < 1:
                raise DataError(f"{where}: lead time and review period must be positive")
            try:
                cost = float(row[4])
                weight = float(row[5]) if has_weight and row[5].strip() else None
            except ValueError:
                raise DataError(f"{where}: unit_cost/weight must be numeric") from None
            if cost < 0 or (weight is not None and weight < 0):
                raise DataError(f"{where}: unit_cost and weight must be nonnegative")
            records.append(ItemRecord(item_id, cls, lead, review, cost, weight))
    return records


def validate_dataset(records, histories, forecasts, config: RunConfig) -> ValidatedDataset:
    """Join the three tables by item_id; raise ValidationError listing every problem."""
    violations: list[str] = []
    warnings: list[str] = []

    def index(seq, what):
        out = {}
        for obj in seq:
            if obj.item_id in out:
                violations.append(f"duplicate {what} for {obj.item_id}")
            out[obj.item_id] = obj
        return out

    by_record = index(records, "item record")
    by_history = index(histories, "history")
    by_forecast = index(forecasts, "forecast")
    all_ids = set(by_record) | set(by_history) | set(by_forecast)

    for item_id in sorted(all_ids, key=item_sort_key):
        if item_id not in by_record:
            violations.append(f"{item_id}: not in item master")
        if item_id not in by_history:
            violations.append(f"{item_id}: missing history")
        if item_id not in by_forecast:
            violations.append(f"{item_id}: missing forecast")
        for table, expected in ((by_history, config.history_len),
                                (by_forecast, config.forecast_len)):
            series = table.get(item_id)
            if series is None:
                continue
            n = len(series)
            label = series.kind.value
            if n == expected:
                continue
            if config.strict_lengths or n < 2:
                violations.append(f"{item_id}: {label} length {n}, expected {expected}")
            else:
                warnings.append(f"{item_id}: {label} length {n}, configured {expected}")

    if violations:
        raise ValidationError(violations)
    for w in warnings:
        log.warning(w)
    items = {i: DatasetEntry(by_record[i], by_history[i], by_forecast[i])
             for i in sorted(all_ids, key=item_sort_key)}
    return ValidatedDataset(items, config, tuple(warnings))


def load_dataset(config: RunConfig) -> ValidatedDataset:
    paths = {k: getattr(config, k) for k in ("demand_history", "forecast", "item_master")}
    missing = [k for k, p in paths.items() if p is None]
    if missing:
        raise ValidationError([f"config does not name input {k}" for k in missing])
    return validate_dataset(load_item_master(paths["item_master"]),
                            load_demand_history(paths["demand_history"]),
                            load_forecast(paths["forecast"]), config)


def write_dataset(dataset: ValidatedDataset, directory) -> dict[str, Path]:
    """Write the dataset back out as the three input tables."""
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    paths = {"demand_history": directory / "demand_history.csv",
             "forecast": directory / "forecast.csv",
             "item_master": directory / "item_master.csv"}
    entries = [dataset.items[i] for i in dataset.item_ids()]
    for key, attr in (("demand_history", "history"), ("forecast", "forecast")):
        with paths[key].open("w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(SERIES_COLUMNS)
            for e in entries:
                for week, q in enumerate(getattr(e, attr).values, start=1):
                    w.writerow([e.record.item_id, week, q])
    with_weight = any(e.record.weight is not None for e in entries)
    with paths["item_master"].open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(ITEM_COLUMNS + (("weight",) if with_weight else ()))
        for e in entries:
            r = e.record
            row = [r.item_id, r.item_class, r.lead_time_weeks, r.review_period_weeks,
                   repr(r.unit_cost)]
            if with_weight:
                row.append("" if r.weight is None else repr(r.weight))
            w.writerow(row)
    return paths
