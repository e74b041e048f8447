"""Built-in test instances and the JSON instance format.

The practical instance uses placeholder data where the source building data
is unpublished; see README ("Synthetic defaults").
"""

from __future__ import annotations

import math

import numpy as np

from .distributions import DiscreteDistribution, ForecastSeries
from .formulations import ProblemInstance
from .model import BuildingModel, ComfortBand, HorizonConfig, TariffSchedule

# Regression coefficients with the intercept lowered from 37.9 to 30.55 so that the
# 76 F daytime band is reachable (with 37.9 the on-mode steady state is ~85.6 F).
PRACTICAL_BUILDING = dict(b1=-2.07, b2=0.15, b3=0.45, b0=30.55, a1=70.7, a2=0.24, a0=-17.8, t_in_initial=80.0)
INTUITIVE_BUILDING = dict(b1=-3.0, b2=0.3, b3=0.7, b0=0.0, a1=100.0, a2=0.3, a0=0.0, t_in_initial=76.0)

PRACTICAL_TARIFF = [
    {"start": 0, "end": 12, "price": 0.07},
    {"start": 12, "end": 21, "price": 0.15},
    {"start": 21, "end": 24, "price": 0.07},
]
PRACTICAL_COMFORT = [
    {"start": 0, "end": 8, "upper": 80.0},
    {"start": 8, "end": 20, "upper": 76.0},
    {"start": 20, "end": 24, "upper": 80.0},
]


class InstanceError(ValueError):
    """Bad instance data; ``path`` locates the offending JSON field."""

    def __init__(self, path: str, message: str):
        self.path = path
        super().__init__(f"{path}: {message}")


def synthetic_profile(hours: np.ndarray) -> np.ndarray:
    """Placeholder daily ambient mean: 75 + 7 sin(2 pi (h - 9) / 24) degF."""
    return 75.0 + 7.0 * np.sin(2.0 * np.pi * (np.asarray(hours, dtype=float) - 9.0) / 24.0)


def practical_config() -> dict:
    return {
        "horizon": {"steps": 144, "step_hours": 0.1, "min_run_steps": 4, "initial_state": 0},
        "building": dict(PRACTICAL_BUILDING),
        "tariff": [dict(b) for b in PRACTICAL_TARIFF],
        "comfort": [dict(b) for b in PRACTICAL_COMFORT],
        "forecast": {"profile": "synthetic", "sigma": 0.5,
                     "grid_low": 65.0, "grid_high": 85.0, "grid_segments": 100},
    }


def intuitive_config() -> dict:
    return {
        "horizon": {"steps": 1, "step_hours": 1.0, "min_run_steps": 1, "initial_state": 0},
        "building": dict(INTUITIVE_BUILDING),
        "tariff": [{"start": 0, "end": 24, "price": 0.1}],
        "comfort": [{"start": 0, "end": 24, "upper": 76.0}],
        "forecast": {"mean": [75.0], "sigma": 0.0, "grid_low": 65.0, "grid_high": 85.0, "grid_segments": 100},
        "centers": [{"support": [75.0], "probs": [1.0]}],
    }


BUILTIN = {"practical": practical_config, "intuitive": intuitive_config}


def practical_instance(**forecast_overrides) -> ProblemInstance:
    cfg = practical_config()
    cfg["forecast"].update(forecast_overrides)
    return instance_from_dict(cfg)


def intuitive_instance() -> ProblemInstance:
    return instance_from_dict(intuitive_config())


def expand_bands(bands, key: str, steps: int, path: str) -> np.ndarray:
    """Map hour bands ``[start, end)`` covering the day onto step start times."""
    if not isinstance(bands, list) or not bands:
        raise InstanceError(path, "expected a non-empty list of bands")
    parsed = []
    for k, band in enumerate(bands):
        where = f"{path}[{k}]"
        if not isinstance(band, dict):
            raise InstanceError(where, "band must be an object")
        try:
            start, end, value = float(band["start"]), float(band["end"]), float(band[key])
        except KeyError as exc:
            raise InstanceError(where, f"missing field {exc.args[0]!r}") from None
        except (TypeError, ValueError):
            raise InstanceError(where, "band fields must be numbers") from None
        if not 0 <= start < end <= 24:
            raise InstanceError(where, "need 0 <= start < end <= 24")
        parsed.append((start, end, value))
    parsed.sort()
    cursor = 0.0
    for start, end, _ in parsed:
        if start != cursor:
            raise InstanceError(path, f"bands must tile 0-24 h without gaps or overlap (break at {cursor:g} h)")
        cursor = end
    if cursor != 24:
        raise InstanceError(path, "bands must end at 24 h")
    hours = np.arange(steps) * (24.0 / steps)
    out = np.empty(steps)
    for start, end, value in parsed:
        out[(hours >= start) & (hours < end)] = value
    return out


def _number(obj: dict, key: str, path: str, default=None) -> float:
    if key not in obj:
        if default is None:
            raise InstanceError(f"{path}.{key}", "missing")
        return default
    value = obj[key]
    if isinstance(value, bool) or not isinstance(value, (int, float)) or not math.isfinite(value):
        raise InstanceError(f"{path}.{key}", "expected a finite number")
    return float(value)


def instance_from_dict(cfg: dict) -> ProblemInstance:
    if not isinstance(cfg, dict):
        raise InstanceError("instance", "expected an object")
    for key in ("horizon", "building", "tariff", "comfort", "forecast"):
        if key not in cfg:
            raise InstanceError(key, "missing section")
    hz = cfg["horizon"]
    steps = int(_number(hz, "steps", "horizon"))
    try:
        horizon = HorizonConfig(
            steps,
            _number(hz, "step_hours", "horizon", 0.1),
            int(_number(hz, "min_run_steps", "horizon", 4)),
            int(_number(hz, "initial_state", "horizon", 0)),
        )
    except ValueError as exc:
        raise InstanceError("horizon", str(exc)) from None

    bd = cfg["building"]
    coefs = {k: _number(bd, k, "building") for k in ("b1", "b2", "b3", "b0", "a1", "a2", "a0", "t_in_initial")}
    try:
        building = BuildingModel(**coefs)
    except ValueError as exc:
        raise InstanceError("building", str(exc)) from None

    tariff = TariffSchedule(expand_bands(cfg["tariff"], "price", steps, "tariff"))
    if np.any(tariff.price_per_step < 0):
        raise InstanceError("tariff", "prices must be nonnegative")
    comfort = ComfortBand(expand_bands(cfg["comfort"], "upper", steps, "comfort"))

    fc = cfg["forecast"]
    if "mean" in fc:
        mean = np.asarray(fc["mean"], dtype=float)
        if mean.shape != (steps,):
            raise InstanceError("forecast.mean", f"expected {steps} values")
    elif fc.get("profile") == "synthetic":
        mean = synthetic_profile(horizon.clock_hours)
    else:
        raise InstanceError("forecast", "give either 'mean' or 'profile': 'synthetic'")
    try:
        forecast = ForecastSeries(
            mean,
            np.full(steps, _number(fc, "sigma", "forecast", 0.5)),
            _number(fc, "grid_low", "forecast", 65.0),
            _number(fc, "grid_high", "forecast", 85.0),
            int(_number(fc, "grid_segments", "forecast", 100)),
        )
    except ValueError as exc:
        raise InstanceError("forecast", str(exc)) from None

    centers = None
    if cfg.get("centers") is not None:
        raw = cfg["centers"]
        if not isinstance(raw, list) or len(raw) not in (1, steps):
            raise InstanceError("centers", f"expected 1 or {steps} distributions")
        try:
            dists = [DiscreteDistribution.from_points(d["support"], d["probs"]) for d in raw]
        except (KeyError, TypeError, ValueError) as exc:
            raise InstanceError("centers", f"bad distribution ({exc})") from None
        centers = tuple(dists * steps if len(dists) == 1 else dists)
    try:
        return ProblemInstance(horizon, building, tariff, comfort, forecast, centers)
    except ValueError as exc:
        raise InstanceError("instance", str(exc)) from None
