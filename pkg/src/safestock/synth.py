"""Seeded synthetic demand data shaped like a purchased-component portfolio.

Weekly history is integerized lognormal (right-skewed, occasionally zero-heavy);
the forecast is a planner-style series that tracks the typical weekly level with
far less spread than the history.
"""
from __future__ import annotations

import numpy as np

from .ingest import DemandSeries, ItemRecord, SeriesKind

BUNDLED_SEED = 7031


def skewed_history(rng: np.random.Generator, median: float, shape: float, weeks: int) -> np.ndarray:
    return np.floor(rng.lognormal(np.log(median), shape, weeks)).astype(np.int64)


def smooth_forecast(rng: np.random.Generator, history: np.ndarray, weeks: int,
                    cv: float = 0.12) -> np.ndarray:
    level = float(np.median(history))
    draws = rng.normal(level, cv * level, weeks)
    return np.maximum(np.rint(draws), 0).astype(np.int64)


def generate(seed: int = BUNDLED_SEED, n_items: int = 20, history_len: int = 52,
             forecast_len: int = 13, classes=("A",) * 10 + ("B",) * 10):
    """(item records, histories, forecasts) for n_items items."""
    rng = np.random.default_rng(seed)
    records, histories, forecasts = [], [], []
    for i in range(n_items):
        item_id = f"item_{i + 1}"
        median = float(rng.uniform(15, 300))
        shape = float(rng.uniform(0.5, 1.1))
        hist = skewed_history(rng, median, shape, history_len)
        fc = smooth_forecast(rng, hist, forecast_len)
        records.append(ItemRecord(
            item_id, classes[i % len(classes)],
            lead_time_weeks=int(rng.integers(1, 7)),
            review_period_weeks=int(rng.choice([1, 1, 2])),
            unit_cost=float(round(rng.uniform(40, 1500), 2)),
        ))
        histories.append(DemandSeries(item_id, SeriesKind.HISTORY, tuple(hist.tolist())))
        forecasts.append(DemandSeries(item_id, SeriesKind.FORECAST, tuple(fc.tolist())))
    return records, histories, forecasts
