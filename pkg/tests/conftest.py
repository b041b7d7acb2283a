import numpy as np
import pytest

from safestock.config import RunConfig, bundled_config
from safestock.ingest import load_dataset, validate_dataset, write_dataset


ACCEPTANCE_LINES: dict[int, str] = {}


@pytest.fixture
def verdict(capsys):
    """Record and print one PASS/FAIL line for an acceptance criterion."""

    def record(number: int, ok: bool, detail: str) -> bool:
        line = f"criterion {number}: {'PASS' if ok else 'FAIL'}  {detail}"
        ACCEPTANCE_LINES[number] = line
        with capsys.disabled():
            print(f"\n{line}")
        return ok

    return record


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for n in sorted(ACCEPTANCE_LINES):
            terminalreporter.write_line(ACCEPTANCE_LINES[n])


@pytest.fixture(scope="session")
def bundled():
    return load_dataset(bundled_config())


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture
def data_dir(tmp_path, bundled):
    """Writable copy of the bundled inputs plus a config that points at them."""
    write_dataset(bundled, tmp_path)
    cfg = (tmp_path / "config.toml")
    cfg.write_text(
        'service_level_grid = [0.5, 0.6, 0.7, 0.8, 0.9, 0.95, 0.99]\n'
        'base_seed = 20240501\n'
        '[wsl_target]\nA = 0.95\nB = 0.90\n'
        '[inputs]\ndemand_history = "demand_history.csv"\n'
        'forecast = "forecast.csv"\nitem_master = "item_master.csv"\n'
    )
    return tmp_path


def make_dataset(series: dict, classes=None, config=None, lead=3, review=1, cost=10.0):
    """Dataset from {item_id: (history, forecast)} with relaxed length checks."""
    from safestock.ingest import DemandSeries, ItemRecord, SeriesKind

    config = config or RunConfig(strict_lengths=False)
    classes = classes or {}
    records, hist, fc = [], [], []
    for item_id, (h, f) in series.items():
        records.append(ItemRecord(item_id, classes.get(item_id, "A"), lead, review, cost))
        hist.append(DemandSeries(item_id, SeriesKind.HISTORY, tuple(int(v) for v in h)))
        fc.append(DemandSeries(item_id, SeriesKind.FORECAST, tuple(int(v) for v in f)))
    return validate_dataset(records, hist, fc, config)


def random_problem(seed: int, max_items: int = 8, max_levels: int = 4, classes=("A", "B")):
    """Seeded MCKP instance; services grow with cost for most items, with some noise."""
    from safestock.optimizer import ItemOptions, Problem

    rng = np.random.default_rng(seed)
    items = []
    for cls in classes:
        for j in range(int(rng.integers(1, max_items + 1))):
            k = int(rng.integers(1, max_levels + 1))
            costs = np.round(np.sort(rng.uniform(0, 1000, k)), int(rng.integers(0, 3)))
            services = np.clip(np.sort(rng.uniform(0.4, 1.0, k)) + rng.normal(0, 0.03, k), 0, 1)
            items.append(ItemOptions(f"{cls}{j}", cls, 0.0, tuple(range(k)),
                                     tuple(float(c) for c in costs),
                                     tuple(float(s) for s in services)))
    counts = {c: sum(it.item_class == c for it in items) for c in classes}
    items = [ItemOptions(it.item_id, it.item_class, 1.0 / counts[it.item_class], it.levels,
                         it.costs, it.services) for it in items]
    targets = {}
    for c in classes:
        members = [it for it in items if it.item_class == c]
        lo = sum(it.weight * min(it.services) for it in members)
        hi = sum(it.weight * max(it.services) for it in members)
        targets[c] = float(lo + (hi - lo) * rng.uniform(0.1, 1.0))
    return Problem(tuple(items), targets, "kde")
