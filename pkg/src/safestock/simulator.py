"""Periodic-review order-up-to simulation with lost sales, and the service-level grid."""
from __future__ import annotations

import hashlib
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from enum import Enum

import numpy as np

from . import demand_model as dm
from .config import RunConfig
from .ingest import DatasetEntry, ValidatedDataset
from .policy import PolicyParams, StockLevels, base_stock, safety_stock


class ModelKind(str, Enum):
    KDE = "kde"
    NORMAL = "normal"


MODEL_ORDER = (ModelKind.KDE, ModelKind.NORMAL)


class CellError(RuntimeError):
    def __init__(self, item_id, alpha, model, cause):
        self.cell = (item_id, alpha, model)
        super().__init__(f"cell ({item_id}, {alpha}, {model}) failed: {cause}")


@dataclass(frozen=True)
class SimConfig:
    periods: int
    review_period: int
    lead_time: int

    def __post_init__(self):
        if self.review_period < 1 or self.lead_time < 1:
            raise ValueError("review period and lead time must be >= 1")
        if self.periods < self.review_period:
            raise ValueError("simulation must cover at least one full review cycle")


@dataclass(frozen=True)
class SimTrace:
    on_hand: np.ndarray
    stockout: np.ndarray
    orders: np.ndarray
    arrivals: np.ndarray
    pipeline_min: int


@dataclass(frozen=True)
class SimMetrics:
    sl_cycle: float
    sl_period: float
    safety_stock_units: float
    safety_stock_value: float
    stockout_period_count: int
    cycle_count: int


@dataclass(frozen=True)
class GridCell:
    item_id: str
    model: str
    target_sl: float
    realized_cycle_sl: float
    realized_period_sl: float
    safety_stock_units: float
    safety_stock_value: float


def simulate_trace(demand, base_level: int, config: SimConfig) -> SimTrace:
    """Step the inventory system through every period and record its state.

    Period 0 starts with S - D_0 on hand and D_0 already ordered in the farthest
    pipeline slot. Each later period receives the slot-0 arrival, serves demand
    (shortfalls are lost), advances the pipeline, and at review epochs orders up to S.
    An order placed in period t arrives in period t + L.
    """
    d = [int(v) for v in demand]
    if len(d) != config.periods:
        raise ValueError(f"demand length {len(d)} != configured periods {config.periods}")
    if min(d) < 0:
        raise ValueError("demand must be nonnegative")
    T, L, R, S = config.periods, config.lead_time, config.review_period, int(base_level)

    on_hand = np.zeros(T, dtype=np.int64)
    orders = np.zeros(T, dtype=np.int64)
    arrivals = np.zeros(T, dtype=np.int64)
    pipe = [0] * L
    pipe[L - 1] = d[0]
    h = max(0, S - d[0])
    on_hand[0] = h
    pipe_min = min(pipe)
    for t in range(1, T):
        arriving = pipe[0]
        h = max(0, h - d[t] + arriving)
        pipe = pipe[1:] + [0]
        if t % R == 0:
            q = max(0, S - (h + sum(pipe)))
            pipe[L - 1] = q
            orders[t] = q
        arrivals[t] = arriving
        on_hand[t] = h
        pipe_min = min(pipe_min, min(pipe))
    return SimTrace(on_hand, on_hand == 0, orders, arrivals, pipe_min)


def service_levels(stockout: np.ndarray, review_period: int) -> tuple[float, float, int]:
    """(cycle SL, period SL, number of cycles); a trailing partial cycle is ignored."""
    T = stockout.size
    cycles = T // review_period
    windows = stockout[: cycles * review_period].reshape(cycles, review_period)
    sl_cycle = 1.0 - windows.any(axis=1).sum() / cycles
    sl_period = 1.0 - stockout.sum() / T
    return float(sl_cycle), float(sl_period), cycles


def simulate(demand, levels: StockLevels, config: SimConfig, unit_cost: float) -> SimMetrics:
    trace = simulate_trace(demand, levels.base_stock, config)
    sl_cycle, sl_period, cycles = service_levels(trace.stockout, config.review_period)
    return SimMetrics(sl_cycle, sl_period, levels.safety_stock,
                      levels.safety_stock * unit_cost, int(trace.stockout.sum()), cycles)


@dataclass(frozen=True)
class ItemModels:
    combined: dm.CombinedSeries
    kde: dm.KdeModel
    pmf: dm.DemandPmf
    normal: dm.NormalParams

    def for_kind(self, kind: ModelKind):
        return self.pmf if ModelKind(kind) is ModelKind.KDE else self.normal


def fit_item(entry: DatasetEntry, config: RunConfig) -> ItemModels:
    combined = dm.combine(entry.history, entry.forecast)
    kde = dm.fit_kde(combined)
    return ItemModels(combined, kde, dm.discretize(kde, combined),
                      dm.fit_normal(entry.history, combined, config.normal_sigma_source))


def stream_seed(*parts) -> int:
    """Stable 64-bit seed from an arbitrary key; independent of PYTHONHASHSEED."""
    key = "|".join(str(p) for p in parts).encode()
    return int.from_bytes(hashlib.blake2b(key, digest_size=8).digest(), "little")


def basis_points(alpha: float) -> int:
    return int(round(alpha * 10000))


def cell_rngs(config: RunConfig, item_id: str, alpha: float, kind: ModelKind):
    """(demand generator, horizon-sampling generator) for one grid cell.

    In common_stream mode every cell of an item sees the same demand path, and the
    horizon samples are shared across service levels of a model, so cells differ
    only through alpha.
    """
    bp, tag = basis_points(alpha), ModelKind(kind).value
    if config.demand_stream_mode == "common_stream":
        demand_key = (config.base_seed, item_id, "common")
        horizon_key = (config.base_seed, item_id, tag, "horizon")
    else:
        demand_key = (config.base_seed, item_id, bp, tag, "demand")
        horizon_key = (config.base_seed, item_id, bp, tag, "horizon")
    return (np.random.default_rng(stream_seed(*demand_key)),
            np.random.default_rng(stream_seed(*horizon_key)))


def run_cell(item_id: str, alpha: float, model_kind, dataset: ValidatedDataset,
             config: RunConfig | None = None, models: ItemModels | None = None,
             demand=None):
    """Simulate one (item, alpha, model) cell; returns (metrics, realized alpha, cost).

    ``demand`` overrides the configured stream with a caller-supplied path, e.g. one
    drawn from a known true distribution and shared by both models.
    """
    config = config or dataset.config
    kind = ModelKind(model_kind)
    entry = dataset.items[item_id]
    rec = entry.record
    models = models or fit_item(entry, config)
    model = models.for_kind(kind)
    demand_rng, horizon_rng = cell_rngs(config, item_id, alpha, kind)

    if demand is None:
        source = models.pmf if config.demand_stream_mode == "common_stream" else model
        demand = dm.sample_demand(source, demand_rng, config.sim_periods)
    params = PolicyParams(alpha, rec.lead_time_weeks, rec.review_period_weeks)
    ss = safety_stock(model, params, horizon_rng, config.horizon_samples)
    # Each model's own mean, so the PMF order-up-to level equals the horizon quantile.
    levels = base_stock(ss, model.mean, rec.lead_time_weeks, rec.review_period_weeks)
    sim_cfg = SimConfig(config.sim_periods, rec.review_period_weeks, rec.lead_time_weeks)
    metrics = simulate(demand, levels, sim_cfg, rec.unit_cost)
    return metrics, metrics.sl_cycle, metrics.safety_stock_value


class GridResults:
    """Grid cells in canonical (item, target, model) order with keyed lookup."""

    def __init__(self, cells):
        self.cells = list(cells)
        self._index = {(c.item_id, basis_points(c.target_sl), c.model): c for c in self.cells}
        if len(self._index) != len(self.cells):
            raise ValueError("duplicate grid cells")

    def __len__(self):
        return len(self.cells)

    def __iter__(self):
        return iter(self.cells)

    def __eq__(self, other):
        return isinstance(other, GridResults) and self.cells == other.cells

    def get(self, item_id: str, alpha: float, model) -> GridCell:
        return self._index[(item_id, basis_points(alpha), ModelKind(model).value)]

    def item_ids(self) -> list[str]:
        return list(dict.fromkeys(c.item_id for c in self.cells))

    def levels(self) -> list[float]:
        return sorted({c.target_sl for c in self.cells})


def run_grid(dataset: ValidatedDataset, grid=None, config: RunConfig | None = None,
             threads: int = 1) -> GridResults:
    config = config or dataset.config
    grid = sorted(config.service_level_grid if grid is None else grid)
    item_ids = dataset.item_ids()
    fitted = {i: fit_item(dataset.items[i], config) for i in item_ids}
    tasks = [(i, a, k) for i in item_ids for a in grid for k in MODEL_ORDER]

    def work(task):
        item_id, alpha, kind = task
        try:
            metrics, _, _ = run_cell(item_id, alpha, kind, dataset, config, fitted[item_id])
        except Exception as exc:
            raise CellError(item_id, alpha, kind.value, exc) from exc
        return GridCell(item_id, kind.value, alpha, metrics.sl_cycle, metrics.sl_period,
                        metrics.safety_stock_units, metrics.safety_stock_value)

    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            cells = list(pool.map(work, tasks))
    else:
        cells = [work(t) for t in tasks]
    return GridResults(cells)
