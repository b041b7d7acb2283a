"""Safety stock and base-stock (order-up-to) levels for the KDE and normal models."""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import special

from .demand_model import DemandPmf, NormalParams, empirical_quantile, horizon_sums


def z_quantile(alpha: float) -> float:
    """Inverse standard normal CDF."""
    if not 0.0 < alpha < 1.0:
        raise ValueError(f"service level {alpha} must lie strictly between 0 and 1")
    return float(special.ndtri(alpha))


@dataclass(frozen=True)
class PolicyParams:
    alpha: float
    lead_time: int
    review_period: int

    def __post_init__(self):
        if not 0.0 <= self.alpha <= 1.0:
            raise ValueError("alpha must lie in [0, 1]")
        if self.lead_time < 1 or self.review_period < 1:
            raise ValueError("lead time and review period must be >= 1")

    @property
    def horizon(self) -> int:
        return self.lead_time + self.review_period

    @property
    def z(self) -> float:
        return float(special.ndtri(self.alpha))


@dataclass(frozen=True)
class StockLevels:
    safety_stock: float
    cycle_stock: float
    in_transit: float
    base_stock_exact: float
    base_stock: int


def safety_stock(model, params: PolicyParams, rng: np.random.Generator | None = None,
                 n_samples: int = 10000) -> float:
    """Buffer above expected demand over the lead time plus review period, floored at zero.

    Normal model: z * sigma * sqrt(L + R). PMF model: the simulated alpha-quantile of
    horizon demand minus its exact expectation, horizon * PMF mean.
    """
    h = params.horizon
    if isinstance(model, NormalParams):
        if model.degenerate or params.alpha == 0.0:
            return 0.0
        if params.alpha == 1.0:
            raise ValueError("normal safety stock is unbounded at alpha = 1")
        return max(0.0, params.z * model.std * math.sqrt(h))
    if isinstance(model, DemandPmf):
        if model.support.size == 1:
            return 0.0
        if rng is None:
            raise ValueError("PMF safety stock needs a random generator")
        sums = horizon_sums(model, h, n_samples, rng)
        return max(0.0, empirical_quantile(sums, params.alpha) - h * model.mean)
    raise TypeError(f"unsupported demand model {type(model).__name__}")


def base_stock(ss: float, mean_demand: float, lead_time: int, review_period: int) -> StockLevels:
    """Order-up-to level S = safety + 2 * cycle stock + in-transit, ceiled to whole units."""
    if mean_demand < 0 or ss < 0:
        raise ValueError("mean demand and safety stock must be nonnegative")
    cycle = 0.5 * mean_demand * review_period
    transit = mean_demand * lead_time
    exact = ss + 2 * cycle + transit
    # Guard against float noise such as 233.00000000000003 ceiling to 234.
    return StockLevels(ss, cycle, transit, exact, math.ceil(round(exact, 9)))
