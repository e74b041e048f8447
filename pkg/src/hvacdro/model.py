"""Building physics, tariff/comfort data and schedule checks.

Temperatures are in degF, power in kW, prices in $/kWh and step lengths in
hours. All containers are frozen dataclasses holding float numpy arrays.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np


def _vector(values, length: int, what: str) -> np.ndarray:
    arr = np.asarray(values, dtype=float).reshape(-1)
    if arr.shape[0] != length:
        raise ValueError(f"{what}: expected {length} values, got {arr.shape[0]}")
    if not np.all(np.isfinite(arr)):
        raise ValueError(f"{what}: values must be finite")
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True)
class HorizonConfig:
    step_count: int
    step_hours: float = 0.1
    min_run_steps: int = 4
    initial_state: int = 0  # value of x before the first step

    def __post_init__(self):
        if int(self.step_count) != self.step_count or self.step_count < 1:
            raise ValueError("step_count must be a positive integer")
        if not self.step_hours > 0:
            raise ValueError("step_hours must be positive")
        if not 1 <= self.min_run_steps <= self.step_count:
            raise ValueError("min_run_steps must lie in [1, step_count]")
        if self.initial_state not in (0, 1):
            raise ValueError("initial_state must be 0 or 1")

    @property
    def clock_hours(self) -> np.ndarray:
        """Hour of day at the start of every step (the horizon spans 24 h)."""
        return np.arange(self.step_count) * (24.0 / self.step_count)


@dataclass(frozen=True)
class BuildingModel:
    """ARX indoor-temperature model plus linear power regression.

    ``T_in[t] = b1*x[t] + b2*T_oa[t] + b3*T_in[t-1] + b0`` and
    ``P[t] = a1*x[t] + a2*T_oa[t] + a0``.
    """

    b1: float
    b2: float
    b3: float
    b0: float
    a1: float
    a2: float
    a0: float
    t_in_initial: float

    def __post_init__(self):
        for name in ("b1", "b2", "b3", "b0", "a1", "a2", "a0", "t_in_initial"):
            if not np.isfinite(getattr(self, name)):
                raise ValueError(f"{name} must be finite")
        if not abs(self.b3) < 1:
            raise ValueError("|b3| must be < 1 for a stable recursion")
        if self.a1 < 0 or self.b1 > 0:
            raise ValueError("cooling convention requires a1 >= 0 and b1 <= 0")


@dataclass(frozen=True)
class TariffSchedule:
    price_per_step: np.ndarray

    def __post_init__(self):
        arr = np.asarray(self.price_per_step, dtype=float).reshape(-1)
        if not np.all(np.isfinite(arr)) or np.any(arr < 0):
            raise ValueError("prices must be finite and nonnegative")
        arr.setflags(write=False)
        object.__setattr__(self, "price_per_step", arr)

    def __len__(self):
        return self.price_per_step.shape[0]


@dataclass(frozen=True)
class ComfortBand:
    upper_per_step: np.ndarray

    def __post_init__(self):
        arr = np.asarray(self.upper_per_step, dtype=float).reshape(-1)
        if not np.all(np.isfinite(arr)):
            raise ValueError("comfort bounds must be finite")
        arr.setflags(write=False)
        object.__setattr__(self, "upper_per_step", arr)

    def __len__(self):
        return self.upper_per_step.shape[0]


@dataclass(frozen=True)
class Schedule:
    on_off: np.ndarray
    initial_state: int = 0
    objective: float | None = field(default=None, compare=False)

    def __post_init__(self):
        arr = np.asarray(self.on_off).reshape(-1)
        if arr.size and not np.all((arr == 0) | (arr == 1)):
            raise ValueError("schedule entries must be 0 or 1")
        arr = arr.astype(np.int8)
        arr.setflags(write=False)
        object.__setattr__(self, "on_off", arr)
        if self.initial_state not in (0, 1):
            raise ValueError("initial_state must be 0 or 1")

    def __len__(self):
        return self.on_off.shape[0]


@dataclass(frozen=True)
class AffineTemperatureMap:
    """``T_in = on_coef @ x + ambient_coef @ T_oa + offset`` (lower-triangular)."""

    on_coef: np.ndarray
    ambient_coef: np.ndarray
    offset: np.ndarray

    def evaluate(self, on_off, ambient) -> np.ndarray:
        x = np.asarray(on_off, dtype=float)
        amb = np.asarray(ambient, dtype=float)
        return self.on_coef @ x + self.ambient_coef @ amb + self.offset


def simulate_indoor(model: BuildingModel, schedule, ambient) -> np.ndarray:
    x = _as_on_off(schedule)
    amb = _vector(ambient, x.shape[0], "ambient trajectory")
    out = np.empty(x.shape[0])
    prev = model.t_in_initial
    for t in range(x.shape[0]):
        prev = model.b1 * x[t] + model.b2 * amb[t] + model.b3 * prev + model.b0
        out[t] = prev
    return out


def simulate_indoor_batch(model: BuildingModel, schedule, ambient: np.ndarray) -> np.ndarray:
    """Vectorised ``simulate_indoor`` over the rows of an (H, T) ambient matrix."""
    x = _as_on_off(schedule)
    amb = np.asarray(ambient, dtype=float)
    if amb.ndim != 2 or amb.shape[1] != x.shape[0]:
        raise ValueError(f"ambient matrix must have {x.shape[0]} columns")
    out = np.empty_like(amb)
    prev = np.full(amb.shape[0], float(model.t_in_initial))
    for t in range(x.shape[0]):
        prev = model.b1 * x[t] + model.b2 * amb[:, t] + model.b3 * prev + model.b0
        out[:, t] = prev
    return out


def power_series(model: BuildingModel, schedule, ambient) -> np.ndarray:
    x = _as_on_off(schedule)
    amb = _vector(ambient, x.shape[0], "ambient trajectory")
    return model.a1 * x + model.a2 * amb + model.a0


def total_cost(tariff: TariffSchedule, horizon: HorizonConfig, power) -> float:
    p = _vector(power, len(tariff), "power series")
    return float(np.sum(tariff.price_per_step * horizon.step_hours * p))


def unroll_affine(model: BuildingModel, horizon: HorizonConfig) -> AffineTemperatureMap:
    """Eliminate the ARX recursion into an explicit affine map of (x, T_oa).

    Row t holds ``b1*b3**(t-k)`` / ``b2*b3**(t-k)`` for k <= t, and the offset
    collects the intercept and the decayed initial temperature.
    """
    if not abs(model.b3) < 1:
        raise ValueError("|b3| must be < 1 for a stable recursion")
    n = horizon.step_count
    lag = np.arange(n)[:, None] - np.arange(n)[None, :]
    decay = np.where(lag >= 0, model.b3 ** np.clip(lag, 0, None), 0.0)
    offset = np.empty(n)
    prev = model.t_in_initial
    for t in range(n):
        prev = model.b3 * prev + model.b0
        offset[t] = prev
    return AffineTemperatureMap(model.b1 * decay, model.b2 * decay, offset)


def check_min_updown(schedule, horizon: HorizonConfig, initial_state: int | None = None) -> bool:
    """True when every switch is followed by ``min_run_steps`` steps in the new mode.

    The run continuing the pre-horizon state is exempt, as is a final run cut
    short by the end of the horizon.
    """
    x = _as_on_off(schedule)
    if x.shape[0] != horizon.step_count:
        return False
    if initial_state is None:
        initial_state = getattr(schedule, "initial_state", horizon.initial_state)
    run_len = horizon.min_run_steps
    prev = initial_state
    for t, value in enumerate(x):
        if value != prev:
            stop = min(t + run_len, x.shape[0])
            if np.any(x[t:stop] != value):
                return False
        prev = value
    return True


def _as_on_off(schedule) -> np.ndarray:
    if isinstance(schedule, Schedule):
        return schedule.on_off.astype(float)
    arr = np.asarray(schedule, dtype=float).reshape(-1)
    return arr
