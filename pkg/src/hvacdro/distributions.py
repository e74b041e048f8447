"""Discrete ambient-temperature distributions and optimal transport between them."""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass

import numpy as np

from . import milp

REGULAR = "regular"
EXTREME = "extreme"
_STREAM_TAGS = {REGULAR: 0, EXTREME: 1}


@dataclass(frozen=True)
class DiscreteDistribution:
    support: np.ndarray
    probs: np.ndarray

    def __post_init__(self):
        support = np.asarray(self.support, dtype=float).reshape(-1)
        probs = np.asarray(self.probs, dtype=float).reshape(-1)
        if support.shape != probs.shape or support.size == 0:
            raise ValueError("support and probs must be non-empty and of equal length")
        if not np.all(np.isfinite(support)) or not np.all(np.isfinite(probs)):
            raise ValueError("distribution values must be finite")
        if np.any(np.diff(support) <= 0):
            raise ValueError("support must be strictly increasing")
        if np.any(probs < 0):
            raise ValueError("probabilities must be nonnegative")
        if abs(math.fsum(probs) - 1.0) > 1e-12:
            raise ValueError("probabilities must sum to 1")
        support.setflags(write=False)
        probs.setflags(write=False)
        object.__setattr__(self, "support", support)
        object.__setattr__(self, "probs", probs)

    @classmethod
    def point(cls, value: float) -> "DiscreteDistribution":
        return cls(np.array([value]), np.array([1.0]))

    @classmethod
    def from_points(cls, values, probs) -> "DiscreteDistribution":
        """Build from unsorted, possibly repeated support points (merging duplicates)."""
        values = np.asarray(values, dtype=float).reshape(-1)
        probs = np.asarray(probs, dtype=float).reshape(-1)
        uniq, inverse = np.unique(values, return_inverse=True)
        merged = np.zeros(uniq.size)
        np.add.at(merged, inverse, probs)
        return cls(uniq, merged)

    def mean(self) -> float:
        return math.fsum(self.support * self.probs)

    def merged(self, tol: float = 0.0) -> "DiscreteDistribution":
        """Drop zero-probability points (the canonical form used for equality)."""
        keep = self.probs > tol
        probs = self.probs[keep]
        return DiscreteDistribution(self.support[keep], probs / math.fsum(probs))

    def to_csv(self) -> str:
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(["support", "prob"])
        for s, p in zip(self.support, self.probs):
            writer.writerow([repr(float(s)), repr(float(p))])
        return buf.getvalue()

    @classmethod
    def from_csv(cls, text: str) -> "DiscreteDistribution":
        rows = list(csv.reader(io.StringIO(text)))
        if not rows or [h.strip() for h in rows[0]] != ["support", "prob"]:
            raise ValueError("distribution CSV must start with header 'support,prob'")
        body = [r for r in rows[1:] if r]
        return cls.from_points([float(r[0]) for r in body], [float(r[1]) for r in body])


@dataclass(frozen=True)
class TransportPlan:
    matrix: np.ndarray
    source: DiscreteDistribution
    target: DiscreteDistribution


@dataclass(frozen=True)
class ForecastSeries:
    mean: np.ndarray
    std: np.ndarray
    grid_low: float = 65.0
    grid_high: float = 85.0
    grid_segments: int = 100

    def __post_init__(self):
        mean = np.asarray(self.mean, dtype=float).reshape(-1)
        std = np.broadcast_to(np.asarray(self.std, dtype=float), mean.shape).copy()
        if np.any(std < 0):
            raise ValueError("forecast standard deviation must be nonnegative")
        if not self.grid_low < self.grid_high:
            raise ValueError("grid_low must be below grid_high")
        if int(self.grid_segments) != self.grid_segments or self.grid_segments < 2:
            raise ValueError("grid_segments must be an integer >= 2")
        if np.any(mean - 3 * std < self.grid_low) or np.any(mean + 3 * std > self.grid_high):
            raise ValueError("forecast mean must sit at least 3 std inside the grid")
        mean.setflags(write=False)
        std.setflags(write=False)
        object.__setattr__(self, "mean", mean)
        object.__setattr__(self, "std", std)

    def __len__(self):
        return self.mean.shape[0]

    @property
    def cell_width(self) -> float:
        return (self.grid_high - self.grid_low) / self.grid_segments

    @property
    def midpoints(self) -> np.ndarray:
        return self.grid_low + self.cell_width * (np.arange(self.grid_segments) + 0.5)


@dataclass(frozen=True)
class ScenarioSet:
    values: np.ndarray
    label: str
    seed: int

    def __post_init__(self):
        vals = np.asarray(self.values, dtype=float)
        if vals.ndim != 2 or vals.shape[0] < 1:
            raise ValueError("scenario matrix must be 2-D with at least one row")
        vals.setflags(write=False)
        object.__setattr__(self, "values", vals)

    def __len__(self):
        return self.values.shape[0]

    def to_csv(self) -> str:
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow([f"t{k + 1}" for k in range(self.values.shape[1])])
        for row in self.values:
            writer.writerow([f"{v:.10g}" for v in row])
        return buf.getvalue()

    @classmethod
    def from_csv(cls, text: str, label: str = "file", seed: int = 0) -> "ScenarioSet":
        rows = [r for r in csv.reader(io.StringIO(text)) if r]
        header = rows[0]
        if header != [f"t{k + 1}" for k in range(len(header))]:
            raise ValueError("scenario CSV header must be t1..tT")
        return cls(np.array([[float(v) for v in r] for r in rows[1:]]), label, seed)


# ---------------------------------------------------------------------------
# transport


def wasserstein_distance(q: DiscreteDistribution, p: DiscreteDistribution, method: str = "exact"):
    """Type-1 Wasserstein distance with ground cost ``|xi_i - xi_j|``.

    ``method="exact"`` runs the monotone (north-west corner) coupling, which is
    optimal for convex costs on the line; ``method="lp"`` solves the transport
    LP with the in-repo simplex. Returns ``(distance, plan)``.
    """
    if method == "exact":
        plan = _monotone_plan(q.probs, p.probs)
    elif method == "lp":
        plan = _lp_plan(q, p)
    else:
        raise ValueError(f"unknown method {method!r}")
    cost = np.abs(q.support[:, None] - p.support[None, :])
    return math.fsum((cost * plan).ravel()), TransportPlan(plan, q, p)


def _monotone_plan(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    plan = np.zeros((a.size, b.size))
    ra, rb = a.astype(float).copy(), b.astype(float).copy()
    i = j = 0
    while i < a.size and j < b.size:
        mass = min(ra[i], rb[j])
        plan[i, j] += mass
        ra[i] -= mass
        rb[j] -= mass
        if ra[i] <= rb[j]:
            i += 1
        else:
            j += 1
    return plan


def _lp_plan(q: DiscreteDistribution, p: DiscreteDistribution) -> np.ndarray:
    ni, nj = q.support.size, p.support.size
    spec = milp.ModelSpec("transport")
    for i in range(ni):
        for j in range(nj):
            spec.add_variable(f"pi_{i}_{j}")
    cost = np.abs(q.support[:, None] - p.support[None, :])
    spec.set_objective({k: v for k, v in enumerate(cost.ravel())})
    grid = np.arange(ni * nj).reshape(ni, nj)
    for i in range(ni):
        spec.add_constraint((grid[i], np.ones(nj)), "=", q.probs[i])
    for j in range(nj):
        spec.add_constraint((grid[:, j], np.ones(ni)), "=", p.probs[j])
    sol = milp.solve_lp(spec)
    if not sol.optimal:
        raise milp.SolverError(f"transport LP ended {sol.status}")
    return np.clip(sol.x.reshape(ni, nj), 0.0, None)


def cdf_distance(q: DiscreteDistribution, p: DiscreteDistribution) -> float:
    """Closed form on the line: integral of |F_q - F_p| over the merged grid."""
    pts = np.union1d(q.support, p.support)
    fq = np.array([q.probs[q.support <= x].sum() for x in pts[:-1]])
    fp = np.array([p.probs[p.support <= x].sum() for x in pts[:-1]])
    return math.fsum(np.abs(fq - fp) * np.diff(pts))


def worst_two_point(center: float, radius: float, xi1: float, xi2: float) -> DiscreteDistribution:
    """Highest-mean distribution on ``{xi1, xi2}`` within ``radius`` of a point mass.

    Moving probability to ``xi2`` raises the mean, so the answer puts as much
    mass on ``xi2`` as the transport budget allows.
    """
    if not xi1 < xi2:
        raise ValueError("need xi1 < xi2")
    if xi2 < center:
        raise ValueError("xi2 must not lie below the center")
    if radius < 0:
        raise ValueError("radius must be nonnegative")
    if min(abs(xi1 - center), abs(xi2 - center)) > radius:
        raise ValueError("no distribution on {xi1, xi2} lies inside the ball")
    if xi1 >= center:
        p2 = min((center + radius - xi1) / (xi2 - xi1), 1.0)
    elif xi1 + xi2 > 2 * center:
        p2 = min((radius - (center - xi1)) / (xi1 + xi2 - 2 * center), 1.0)
    else:
        p2 = 1.0
    p2 = max(p2, 0.0)
    return DiscreteDistribution(np.array([xi1, xi2]), np.array([1.0 - p2, p2]))


# ---------------------------------------------------------------------------
# forecasts and sampling


def discretize_forecast(series: ForecastSeries, t: int) -> DiscreteDistribution:
    """Gaussian mass per grid cell, tails folded into the two boundary cells."""
    mu, sigma = float(series.mean[t]), float(series.std[t])
    if sigma < 0:
        raise ValueError("standard deviation must be nonnegative")
    g = series.grid_segments
    mids = series.midpoints
    if sigma == 0:
        cell = int(np.clip(math.floor((mu - series.grid_low) / series.cell_width), 0, g - 1))
        probs = np.zeros(g)
        probs[cell] = 1.0
        return DiscreteDistribution(mids, probs)
    inner = series.grid_low + series.cell_width * np.arange(1, g)
    z = (inner - mu) / (sigma * math.sqrt(2.0))
    cdf = 0.5 * np.array([math.erf(v) for v in z])  # Phi - 1/2; odd in z so mirrored cells match exactly
    edges = np.concatenate([[-0.5], cdf, [0.5]])
    probs = np.diff(edges)
    probs = np.clip(probs, 0.0, None)
    probs /= math.fsum(probs)
    return DiscreteDistribution(mids, probs)


def forecast_distributions(series: ForecastSeries) -> list[DiscreteDistribution]:
    return [discretize_forecast(series, t) for t in range(len(series))]


def _rng(seed: int, label: str, index: int) -> np.random.Generator:
    seq = np.random.SeedSequence(entropy=int(seed), spawn_key=(_STREAM_TAGS[label], int(index)))
    return np.random.Generator(np.random.Philox(seq))


def sample_regular(series: ForecastSeries, count: int, seed: int) -> ScenarioSet:
    """Independent Gaussian draws around the forecast, clamped to the grid."""
    if count < 1:
        raise ValueError("count must be >= 1")
    rows = np.empty((count, len(series)))
    for h in range(count):
        z = _rng(seed, REGULAR, h).standard_normal(len(series))
        rows[h] = series.mean + series.std * z
    return ScenarioSet(np.clip(rows, series.grid_low, series.grid_high), REGULAR, seed)


def sample_extreme(series: ForecastSeries, count: int, seed: int) -> ScenarioSet:
    """Draws from misspecified families: biased Gaussian, uniform, or scaled beta.

    Each scenario picks its family uniformly and then draws the family
    parameters once for the whole day.
    """
    if count < 1:
        raise ValueError("count must be >= 1")
    n = len(series)
    mu = series.mean
    rows = np.empty((count, n))
    for h in range(count):
        rng = _rng(seed, EXTREME, h)
        family = int(rng.integers(3))
        if family == 0:
            offset = rng.uniform(-2.0, 2.0)
            std = rng.uniform(0.5, 2.0)
            rows[h] = mu + offset + std * rng.standard_normal(n)
        elif family == 1:
            half = rng.uniform(1.0, 4.0)
            rows[h] = rng.uniform(mu - half, mu + half)
        else:
            alpha, beta = rng.uniform(0.5, 5.0, size=2)
            rows[h] = mu - 3.0 + 6.0 * rng.beta(alpha, beta, size=n)
    return ScenarioSet(np.clip(rows, series.grid_low, series.grid_high), EXTREME, seed)
