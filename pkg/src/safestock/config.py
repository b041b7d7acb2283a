"""Run configuration: a flat TOML file with optional ``[wsl_target]`` and ``[inputs]`` tables.

Example::

    service_level_grid = [0.5, 0.6, 0.7, 0.8, 0.9, 0.95, 0.99]
    sim_periods = 1000
    base_seed = 20240501
    horizon_samples = 10000
    history_len = 52
    forecast_len = 13
    strict_lengths = true
    normal_sigma_source = "historical"   # or "combined"
    demand_stream_mode = "own_model"     # or "common_stream"

    [wsl_target]
    A = 0.95
    B = 0.90

    [inputs]
    demand_history = "demand_history.csv"
    forecast = "forecast.csv"
    item_master = "item_master.csv"

Relative input paths resolve against the config file's directory.
"""
from __future__ import annotations

import dataclasses
from dataclasses import dataclass, field
from pathlib import Path

try:
    import tomllib
except ModuleNotFoundError:  # Python < 3.11
    import tomli as tomllib

DEFAULT_GRID = (0.5, 0.6, 0.7, 0.8, 0.9, 0.95, 0.99)
SIGMA_SOURCES = ("historical", "combined")
STREAM_MODES = ("own_model", "common_stream")


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class RunConfig:
    service_level_grid: tuple[float, ...] = DEFAULT_GRID
    sim_periods: int = 1000
    base_seed: int = 20240501
    horizon_samples: int = 10000
    wsl_target: dict[str, float] = field(default_factory=lambda: {"A": 0.95, "B": 0.90})
    history_len: int = 52
    forecast_len: int = 13
    strict_lengths: bool = True
    normal_sigma_source: str = "historical"
    demand_stream_mode: str = "own_model"
    demand_history: Path | None = None
    forecast: Path | None = None
    item_master: Path | None = None

    def __post_init__(self):
        grid = tuple(float(a) for a in self.service_level_grid)
        object.__setattr__(self, "service_level_grid", grid)
        object.__setattr__(self, "wsl_target",
                           {str(k).upper(): float(v) for k, v in self.wsl_target.items()})
        if any(not 0.0 <= a < 1.0 for a in grid):
            raise ConfigError("service levels must lie in [0, 1)")
        if len(set(grid)) != len(grid):
            raise ConfigError("service_level_grid has duplicates")
        if self.sim_periods < 1:
            raise ConfigError("sim_periods must be positive")
        if self.horizon_samples < 1000:
            raise ConfigError("horizon_samples must be at least 1000")
        if not 0 <= self.base_seed < 2 ** 64:
            raise ConfigError("base_seed must fit in an unsigned 64-bit integer")
        if self.normal_sigma_source not in SIGMA_SOURCES:
            raise ConfigError(f"normal_sigma_source must be one of {SIGMA_SOURCES}")
        if self.demand_stream_mode not in STREAM_MODES:
            raise ConfigError(f"demand_stream_mode must be one of {STREAM_MODES}")
        if min(self.history_len, self.forecast_len) < 2:
            raise ConfigError("configured series lengths must be >= 2")
        for cls in self.wsl_target:
            if cls not in ("A", "B", "C"):
                raise ConfigError(f"unknown class in wsl_target: {cls}")

    def replace(self, **changes) -> "RunConfig":
        return dataclasses.replace(self, **changes)

    def snapshot(self) -> dict:
        """JSON-friendly view with input paths reduced to file names."""
        out = {}
        for f in dataclasses.fields(self):
            value = getattr(self, f.name)
            if isinstance(value, Path):
                value = value.name
            elif isinstance(value, tuple):
                value = list(value)
            elif isinstance(value, dict):
                value = dict(sorted(value.items()))
            out[f.name] = value
        return out


def load_config(path: str | Path) -> RunConfig:
    path = Path(path)
    try:
        raw = tomllib.loads(path.read_text())
    except FileNotFoundError:
        raise ConfigError(f"config file not found: {path}") from None
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError(f"{path}: {exc}") from None

    inputs = raw.pop("inputs", {})
    known = {f.name for f in dataclasses.fields(RunConfig)}
    unknown = set(raw) - known
    if unknown:
        raise ConfigError(f"unknown config keys: {sorted(unknown)}")
    for key in ("demand_history", "forecast", "item_master"):
        if key in inputs:
            p = Path(inputs[key])
            raw[key] = p if p.is_absolute() else path.parent / p
    return RunConfig(**raw)


def bundled_config() -> RunConfig:
    """Defaults pointing at the synthetic 20-item dataset shipped with the package."""
    data = Path(__file__).parent / "data"
    return load_config(data / "config.toml")
