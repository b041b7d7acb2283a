"""Demand models: combined history+forecast series, Gaussian KDE, integer PMF, normal fit."""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import special

_SQRT_2PI = math.sqrt(2.0 * math.pi)
# Tolerance on quantile levels, so 0.95 * 10000 is not pushed to the next order statistic.
_Q_EPS = 1e-9


@dataclass(frozen=True)
class CombinedSeries:
    values: tuple[int, ...]
    n_history: int
    n_forecast: int

    @property
    def n(self) -> int:
        return len(self.values)

    @property
    def mean(self) -> float:
        return math.fsum(self.values) / self.n

    @property
    def variance(self) -> float:
        if self.n < 2:
            return math.nan
        mu = self.mean
        return math.fsum((v - mu) ** 2 for v in self.values) / (self.n - 1)

    @property
    def std(self) -> float:
        return math.sqrt(self.variance)


@dataclass(frozen=True)
class KdeModel:
    data: np.ndarray
    bandwidth: float

    @property
    def degenerate(self) -> bool:
        return self.bandwidth == 0.0

    def density(self, x) -> np.ndarray:
        """Kernel density estimate at the given points."""
        if self.degenerate:
            raise ValueError("density undefined for a zero-bandwidth model")
        x = np.atleast_1d(np.asarray(x, dtype=float))
        u = (x[:, None] - self.data[None, :]) / self.bandwidth
        k = np.exp(-0.5 * u * u) / _SQRT_2PI
        return k.sum(axis=1) / (self.data.size * self.bandwidth)

    def mass_below(self, x: float) -> float:
        """Probability the continuous estimate assigns to (-inf, x)."""
        return float(np.mean(special.ndtr((x - self.data) / self.bandwidth)))


@dataclass(frozen=True)
class DemandPmf:
    support: np.ndarray
    probabilities: np.ndarray

    def __post_init__(self):
        s, p = self.support, self.probabilities
        if s.ndim != 1 or s.shape != p.shape or s.size == 0:
            raise ValueError("support and probabilities must be equal-length 1-d arrays")
        if np.any(np.diff(s) <= 0) or s[0] < 0:
            raise ValueError("support must be strictly increasing nonnegative integers")
        if np.any(p < 0) or abs(p.sum() - 1.0) > 1e-9:
            raise ValueError("probabilities must be nonnegative and sum to 1")
        s.setflags(write=False)
        p.setflags(write=False)

    @classmethod
    def point_mass(cls, value: int) -> "DemandPmf":
        return cls(np.array([int(value)]), np.array([1.0]))

    @property
    def mean(self) -> float:
        return float(np.dot(self.support, self.probabilities))

    @property
    def variance(self) -> float:
        return float(np.dot((self.support - self.mean) ** 2, self.probabilities))

    def cdf(self) -> np.ndarray:
        c = np.cumsum(self.probabilities)
        c[-1] = 1.0
        return c


@dataclass(frozen=True)
class NormalParams:
    mean: float
    std: float
    sigma_source: str

    def __post_init__(self):
        if not self.std >= 0:
            raise ValueError("standard deviation must be nonnegative")

    @property
    def degenerate(self) -> bool:
        return self.std == 0.0


def combine(history, forecast) -> CombinedSeries:
    """Concatenate history then forecast."""
    h = tuple(int(v) for v in getattr(history, "values", history))
    f = tuple(int(v) for v in getattr(forecast, "values", forecast))
    if not h or not f:
        raise ValueError("history and forecast must both be nonempty")
    return CombinedSeries(h + f, len(h), len(f))


def scott_bandwidth(n: int, std: float) -> float:
    return std * n ** (-0.2)


def fit_kde(series: CombinedSeries) -> KdeModel:
    if series.n < 2:
        raise ValueError("KDE needs at least 2 observations")
    data = np.asarray(series.values, dtype=float)
    data.setflags(write=False)
    return KdeModel(data, scott_bandwidth(series.n, series.std))


def support_points(values) -> np.ndarray:
    """Every integer between the smallest and largest observation."""
    return np.arange(int(min(values)), int(max(values)) + 1)


def discretize(kde: KdeModel, series: CombinedSeries) -> DemandPmf:
    """Evaluate the KDE on integer support and normalise to a PMF.

    When the support starts at zero, the kernel mass that would land on negative
    integers (the estimate's mass below -0.5) is added to the zero point.
    """
    if kde.degenerate:
        return DemandPmf.point_mass(series.values[0])
    support = support_points(series.values)
    weights = kde.density(support)
    if support[0] == 0:
        weights[0] += kde.mass_below(-0.5)
    return DemandPmf(support, weights / weights.sum())


def fit_normal(history, combined: CombinedSeries, sigma_source: str = "historical") -> NormalParams:
    """Normal model: mean of the combined series; sigma from history or the combined series."""
    if sigma_source == "historical":
        values = np.asarray(getattr(history, "values", history), dtype=float)
    elif sigma_source == "combined":
        values = np.asarray(combined.values, dtype=float)
    else:
        raise ValueError(f"unknown sigma source {sigma_source!r}")
    if values.size < 2:
        raise ValueError("sigma source needs at least 2 observations")
    return NormalParams(combined.mean, float(values.std(ddof=1)), sigma_source)


def _check_level(q: float) -> None:
    if not 0.0 <= q <= 1.0:
        raise ValueError(f"quantile level {q} outside [0, 1]")


def pmf_quantile(pmf: DemandPmf, q: float) -> int:
    """Smallest support point whose CDF reaches q."""
    _check_level(q)
    idx = int(np.searchsorted(pmf.cdf(), q - _Q_EPS, side="left"))
    return int(pmf.support[min(idx, pmf.support.size - 1)])


def sample_demand(model, rng: np.random.Generator, count: int) -> np.ndarray:
    """Draw nonnegative integer demands from a PMF or a (clamped, rounded) normal."""
    if count < 1:
        raise ValueError("count must be >= 1")
    if isinstance(model, DemandPmf):
        u = rng.random(count)
        idx = np.searchsorted(model.cdf(), u, side="right")
        return model.support[np.minimum(idx, model.support.size - 1)].astype(np.int64)
    if isinstance(model, NormalParams):
        if model.degenerate:
            return np.full(count, max(0, math.floor(model.mean + 0.5)), dtype=np.int64)
        draws = rng.normal(model.mean, model.std, count)
        return np.floor(np.maximum(draws, 0.0) + 0.5).astype(np.int64)
    raise TypeError(f"unsupported demand model {type(model).__name__}")


def horizon_sums(model, horizon: int, n_samples: int, rng: np.random.Generator) -> np.ndarray:
    """Sorted totals of `horizon` iid demand draws, n_samples of them."""
    if horizon < 1:
        raise ValueError("horizon must be >= 1")
    if n_samples < 1000:
        raise ValueError("n_samples must be >= 1000")
    draws = sample_demand(model, rng, horizon * n_samples).reshape(n_samples, horizon)
    return np.sort(draws.sum(axis=1))


def empirical_quantile(sorted_values: np.ndarray, q: float) -> int:
    """Smallest value whose empirical CDF reaches q."""
    _check_level(q)
    n = sorted_values.size
    k = max(math.ceil(q * n - _Q_EPS * n), 1)
    return int(sorted_values[min(k, n) - 1])


def horizon_sum_quantile(model, horizon: int, q: float, n_samples: int,
                         rng: np.random.Generator) -> int:
    _check_level(q)
    return empirical_quantile(horizon_sums(model, horizon, n_samples, rng), q)
