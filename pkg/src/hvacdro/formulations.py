"""MILP builders for the deterministic, scenario, robust and Wasserstein-DRO schedules.

Every builder eliminates the indoor-temperature recursion with
:func:`hvacdro.model.unroll_affine`, so the on/off binaries (plus the dual
variables of the monolithic DRO model and the epigraph variables of the
robust model) are the only decision variables. Comfort rows all read
``sum_k b1*b3**(t-k) * x_k <= rhs_t``; the methods differ in ``rhs_t``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Sequence

import numpy as np

from . import milp
from .distributions import (
    DiscreteDistribution,
    ForecastSeries,
    ScenarioSet,
    forecast_distributions,
    sample_regular,
)
from .model import (
    BuildingModel,
    ComfortBand,
    HorizonConfig,
    Schedule,
    TariffSchedule,
    check_min_updown,
    unroll_affine,
)

METHODS = ("do", "sp_strict", "sp_average", "ro", "dro")
REDUCED = "reduced"
MONOLITHIC = "monolithic"


class InfeasibleScheduleError(RuntimeError):
    """The chosen formulation admits no schedule; ``family`` names the culprit."""

    def __init__(self, method: str, family: str, detail: str = ""):
        self.method = method
        self.family = family
        super().__init__(f"{method}: infeasible ({family}){': ' + detail if detail else ''}")


@dataclass(frozen=True)
class ProblemInstance:
    horizon: HorizonConfig
    model: BuildingModel
    tariff: TariffSchedule
    comfort: ComfortBand
    forecast: ForecastSeries
    # explicit per-step center distributions; default is the discretised forecast
    centers: tuple[DiscreteDistribution, ...] | None = None

    def __post_init__(self):
        n = self.horizon.step_count
        for what, size in (("tariff", len(self.tariff)), ("comfort", len(self.comfort)),
                           ("forecast", len(self.forecast))):
            if size != n:
                raise ValueError(f"{what} has {size} steps, horizon has {n}")
        if self.centers is not None:
            if len(self.centers) != n:
                raise ValueError("need one center distribution per step")
            object.__setattr__(self, "centers", tuple(self.centers))

    def center_distributions(self) -> tuple[DiscreteDistribution, ...]:
        if self.centers is None:
            object.__setattr__(self, "centers", tuple(forecast_distributions(self.forecast)))
        return self.centers


@dataclass(frozen=True)
class UncertaintyInterval:
    lower: np.ndarray
    upper: np.ndarray

    def __post_init__(self):
        lo = np.asarray(self.lower, dtype=float).reshape(-1)
        hi = np.asarray(self.upper, dtype=float).reshape(-1)
        if lo.shape != hi.shape or np.any(lo > hi):
            raise ValueError("interval needs lower <= upper elementwise")
        object.__setattr__(self, "lower", lo)
        object.__setattr__(self, "upper", hi)

    @classmethod
    def sigma_box(cls, forecast: ForecastSeries, k: float) -> "UncertaintyInterval":
        if k < 0:
            raise ValueError("sigma multiple must be nonnegative")
        return cls(forecast.mean - k * forecast.std, forecast.mean + k * forecast.std)


@dataclass(frozen=True)
class DroConfig:
    radius: float
    mode: str = REDUCED
    max_support: int = 20  # monolithic size gate on support points per step
    max_steps: int = 48  # monolithic size gate on the horizon
    support: tuple[float, ...] | None = None  # candidate support for the worst case

    def __post_init__(self):
        if not self.radius >= 0:
            raise ValueError("radius must be >= 0")
        if self.mode not in (REDUCED, MONOLITHIC):
            raise ValueError(f"unknown DRO mode {self.mode!r}")
        if self.max_support < 2:
            raise ValueError("max_support must be >= 2")


@dataclass
class DualSolution:
    lam: float
    s: np.ndarray
    center_support: np.ndarray
    candidate_support: np.ndarray


# ---------------------------------------------------------------------------
# shared pieces


def _add_schedule(spec: milp.ModelSpec, horizon: HorizonConfig) -> np.ndarray:
    n = horizon.step_count
    xs = np.array([spec.add_variable(f"x[{t}]", 0.0, 1.0, binary=True) for t in range(n)])
    _add_min_updown(spec, xs, horizon)
    return xs


def _add_min_updown(spec, xs, horizon: HorizonConfig) -> None:
    """For every t and k < L: x[t+k] >= x[t] - x[t-1] and 1 - x[t+k] >= x[t-1] - x[t]."""
    n, run = horizon.step_count, horizon.min_run_steps
    x0 = horizon.initial_state
    for t in range(n):
        for k in range(1, run):
            if t + k >= n:
                break
            if t == 0:
                spec.add_constraint({xs[k]: 1.0, xs[0]: -1.0}, ">=", -x0, name=f"up[{t},{k}]")
                spec.add_constraint({xs[k]: -1.0, xs[0]: 1.0}, ">=", x0 - 1.0, name=f"down[{t},{k}]")
            else:
                spec.add_constraint({xs[t + k]: 1.0, xs[t]: -1.0, xs[t - 1]: 1.0}, ">=", 0.0,
                                    name=f"up[{t},{k}]")
                spec.add_constraint({xs[t + k]: -1.0, xs[t]: 1.0, xs[t - 1]: -1.0}, ">=", -1.0,
                                    name=f"down[{t},{k}]")


def _add_comfort(spec, xs, on_coef: np.ndarray, rhs: np.ndarray, tag: str = "comfort") -> None:
    for t in range(rhs.shape[0]):
        cols = xs[: t + 1]
        spec.add_constraint((cols, on_coef[t, : t + 1]), "<=", float(rhs[t]), name=f"{tag}[{t}]")


def _set_cost(spec, xs, inst: ProblemInstance, ambient: np.ndarray) -> None:
    """Objective sum_t c_t*dt*(a1*x_t + a2*T_oa_t + a0); the ambient part is a constant."""
    m = inst.model
    weight = inst.tariff.price_per_step * inst.horizon.step_hours
    offset = math.fsum(weight * (m.a2 * ambient + m.a0))
    spec.set_objective({int(x): float(w * m.a1) for x, w in zip(xs, weight)}, offset)


def _worst_ambient_part(ambient_coef: np.ndarray, low: np.ndarray, high: np.ndarray) -> np.ndarray:
    """max over a box of ambient_coef @ T_oa, row by row."""
    return np.maximum(ambient_coef * high[None, :], ambient_coef * low[None, :]).sum(axis=1)


# ---------------------------------------------------------------------------
# builders


def build_do(inst: ProblemInstance) -> milp.ModelSpec:
    spec = milp.ModelSpec("do")
    xs = _add_schedule(spec, inst.horizon)
    aff = unroll_affine(inst.model, inst.horizon)
    mu = inst.forecast.mean
    rhs = inst.comfort.upper_per_step - (aff.ambient_coef @ mu + aff.offset)
    _add_comfort(spec, xs, aff.on_coef, rhs)
    _set_cost(spec, xs, inst, mu)
    return spec


def build_sp(inst: ProblemInstance, scenarios, mode: str, aggregate: bool = True) -> milp.ModelSpec:
    """Scenario program over a ScenarioSet or over per-step discrete distributions.

    ``strict`` keeps every scenario inside the comfort band, ``average`` only
    the scenario-mean temperature. With ``aggregate`` the strict rows sharing a
    step are replaced by the single tightest one (they share coefficients).
    """
    if mode not in ("strict", "average"):
        raise ValueError("mode must be 'strict' or 'average'")
    n = inst.horizon.step_count
    aff = unroll_affine(inst.model, inst.horizon)
    ub = inst.comfort.upper_per_step
    spec = milp.ModelSpec(f"sp_{mode}")
    xs = _add_schedule(spec, inst.horizon)

    if isinstance(scenarios, ScenarioSet):
        values = scenarios.values
        if values.shape[1] != n:
            raise ValueError("scenario length does not match the horizon")
        mean_amb = np.array([math.fsum(col) for col in values.T]) / values.shape[0]
        if mode == "average":
            _add_comfort(spec, xs, aff.on_coef, ub - (aff.ambient_coef @ mean_amb + aff.offset))
        else:
            per_scenario = values @ aff.ambient_coef.T + aff.offset  # (H, T)
            if aggregate:
                _add_comfort(spec, xs, aff.on_coef, ub - per_scenario.max(axis=0))
            else:
                for h in range(values.shape[0]):
                    _add_comfort(spec, xs, aff.on_coef, ub - per_scenario[h], tag=f"comfort_s{h}")
    else:
        dists = list(scenarios)
        if len(dists) != n:
            raise ValueError("need one distribution per step")
        mean_amb = np.array([d.mean() for d in dists])
        if mode == "average":
            _add_comfort(spec, xs, aff.on_coef, ub - (aff.ambient_coef @ mean_amb + aff.offset))
        else:
            lo = np.array([d.support[d.probs > 0].min() for d in dists])
            hi = np.array([d.support[d.probs > 0].max() for d in dists])
            worst = _worst_ambient_part(aff.ambient_coef, lo, hi) + aff.offset
            _add_comfort(spec, xs, aff.on_coef, ub - worst)
    _set_cost(spec, xs, inst, mean_amb)
    return spec


def build_ro(inst: ProblemInstance, box: UncertaintyInterval) -> milp.ModelSpec:
    """Robust counterpart: epigraph cost variables plus comfort at the worst corner."""
    n = inst.horizon.step_count
    if box.lower.shape[0] != n:
        raise ValueError("interval length does not match the horizon")
    m = inst.model
    spec = milp.ModelSpec("ro")
    xs = _add_schedule(spec, inst.horizon)
    zs = np.array([spec.add_variable(f"z[{t}]", -math.inf, math.inf) for t in range(n)])
    weight = inst.tariff.price_per_step * inst.horizon.step_hours
    for t in range(n):
        w = weight[t]
        for tag, amb in (("hi", box.upper[t]), ("lo", box.lower[t])):
            base = w * (m.a2 * amb + m.a0)
            # x_t = 1 boundary, carried by the a1*x_t term
            spec.add_constraint({zs[t]: 1.0, xs[t]: -w * m.a1}, ">=", base, name=f"rc_on_{tag}[{t}]")
            # x_t = 0 boundary
            spec.add_constraint({zs[t]: 1.0}, ">=", base, name=f"rc_off_{tag}[{t}]")
    aff = unroll_affine(inst.model, inst.horizon)
    worst = _worst_ambient_part(aff.ambient_coef, box.lower, box.upper) + aff.offset
    _add_comfort(spec, xs, aff.on_coef, inst.comfort.upper_per_step - worst)
    spec.set_objective({int(z): 1.0 for z in zs})
    return spec


def inner_worst_expectation(q: DiscreteDistribution, epsilon: float, b2: float, support=None, prune: bool = True):
    """Worst-case ``E_P[b2 * T_oa]`` over the Wasserstein ball, via its dual LP.

    Solves ``min eps*lam + sum_i q_i s_i`` subject to
    ``|xi_i - xi_j| * lam + s_i >= b2 * xi_j`` for every center point i and
    candidate point j, with ``lam >= 0`` and ``s`` free. Center points with zero
    probability only add redundant rows and are solved for afterwards.

    For fixed ``lam`` the right-hand side ``b2*xi_j - |xi_i - xi_j|*lam`` is
    affine in ``xi_j`` on each side of ``xi_i``, so only the end points of each
    side can bind: the smallest and largest candidates and the neighbours of
    ``xi_i``. ``prune`` keeps just those (at most four) rows per center point,
    which leaves the feasible set unchanged.
    Returns ``(value, DualSolution)``.
    """
    if epsilon < 0:
        raise ValueError("epsilon must be >= 0")
    cand = q.support if support is None else np.unique(np.asarray(support, dtype=float))
    active = np.flatnonzero(q.probs > 0)
    xi_i = q.support[active]
    dist = np.abs(xi_i[:, None] - cand[None, :])
    ni, nj = xi_i.size, cand.size

    spec = milp.ModelSpec("worst_expectation_dual")
    lam = spec.add_variable("lam", 0.0, math.inf)
    s = np.array([spec.add_variable(f"s[{i}]", -math.inf, math.inf) for i in range(ni)])
    obj = {lam: float(epsilon)}
    obj.update({int(s[i]): float(q.probs[active[i]]) for i in range(ni)})
    spec.set_objective(obj)
    for i in range(ni):
        for j in (_binding_candidates(cand, xi_i[i]) if prune else range(nj)):
            coefs = {int(s[i]): 1.0}
            if dist[i, j]:
                coefs[lam] = float(dist[i, j])
            spec.add_constraint(coefs, ">=", float(b2 * cand[j]))
    sol = milp.solve_lp(spec)
    if sol.status == milp.UNBOUNDED:
        raise ValueError("the Wasserstein ball contains no distribution on the candidate support")
    if not sol.optimal:
        raise milp.SolverError(f"dual LP ended {sol.status}")
    lam_value = float(sol.x[lam])
    full_dist = np.abs(q.support[:, None] - cand[None, :])
    s_full = np.max(b2 * cand[None, :] - lam_value * full_dist, axis=1)
    s_full[active] = np.maximum(sol.x[s], s_full[active])
    return sol.objective, DualSolution(lam_value, s_full, q.support, cand)


def _binding_candidates(cand: np.ndarray, point: float) -> list[int]:
    """Indices of sorted ``cand`` that can bind in the dual rows of ``point``."""
    below = int(np.searchsorted(cand, point, side="right")) - 1
    above = int(np.searchsorted(cand, point, side="left"))
    picks = {0, cand.size - 1}
    if below >= 0:
        picks.add(below)
    if above < cand.size:
        picks.add(above)
    return sorted(picks)


def _dro_pieces(inst: ProblemInstance, dro: DroConfig):
    centers = inst.center_distributions()
    aff = unroll_affine(inst.model, inst.horizon)
    state_amb = np.array([d.mean() for d in centers])
    # b3*T_in[t-1] + b0 with the state propagated at the center means
    carry = aff.ambient_coef @ state_amb + aff.offset - inst.model.b2 * state_amb
    support = None if dro.support is None else np.asarray(dro.support, dtype=float)
    return centers, aff, carry, support


def dro_offsets(inst: ProblemInstance, dro: DroConfig) -> np.ndarray:
    """Per-step worst-case ambient contribution ``W_t`` used by reduced mode."""
    centers, _, _, support = _dro_pieces(inst, dro)
    b2 = inst.model.b2
    return np.array([inner_worst_expectation(q, dro.radius, b2, support)[0] for q in centers])


def build_dro(inst: ProblemInstance, dro: DroConfig) -> milp.ModelSpec:
    centers, aff, carry, support = _dro_pieces(inst, dro)
    n = inst.horizon.step_count
    ub = inst.comfort.upper_per_step
    spec = milp.ModelSpec(f"dro_{dro.mode}")
    xs = _add_schedule(spec, inst.horizon)

    if dro.mode == REDUCED:
        offsets = dro_offsets(inst, dro)
        _add_comfort(spec, xs, aff.on_coef, ub - (carry + offsets))
        spec.metadata = {"dro_offsets": offsets.tolist()}
    else:
        sizes = [(q.support.size if support is None else max(q.support.size, support.size)) for q in centers]
        if max(sizes) > dro.max_support or n > dro.max_steps:
            raise ValueError(
                f"monolithic DRO is limited to {dro.max_support} support points and "
                f"{dro.max_steps} steps; use mode='reduced' for this instance")
        b2 = inst.model.b2
        for t, q in enumerate(centers):
            cand = q.support if support is None else support
            active = np.flatnonzero(q.probs > 0)
            lam = spec.add_variable(f"lam[{t}]", 0.0, math.inf)
            s = {int(i): spec.add_variable(f"s[{i},{t}]", -math.inf, math.inf) for i in active}
            row = {int(c): float(v) for c, v in zip(xs[: t + 1], aff.on_coef[t, : t + 1])}
            if dro.radius:
                row[lam] = float(dro.radius)
            for i in active:
                row[s[int(i)]] = float(q.probs[i])
            spec.add_constraint(row, "<=", float(ub[t] - carry[t]), name=f"comfort[{t}]")
            for i in active:
                for j, xj in enumerate(cand):
                    coefs = {s[int(i)]: 1.0}
                    gap = abs(q.support[i] - xj)
                    if gap:
                        coefs[lam] = float(gap)
                    spec.add_constraint(coefs, ">=", float(b2 * xj), name=f"dual[{i},{j},{t}]")
    _set_cost(spec, xs, inst, inst.forecast.mean)
    return spec


# ---------------------------------------------------------------------------
# dispatch


@dataclass(frozen=True)
class MethodConfig:
    """One schedule to compute; ``label`` defaults to e.g. ``RO-3sigma`` / ``DRO-2``."""

    method: str
    label: str | None = None
    sigma_k: float = 2.0
    epsilon: float = 0.0
    dro_mode: str = REDUCED
    scenario_count: int = 1000
    scenario_seed: int = 0
    sp_source: str = "scenarios"  # or "distribution": discretised forecast per step
    support: tuple[float, ...] | None = None

    def __post_init__(self):
        if self.method not in METHODS:
            raise ValueError(f"unknown method {self.method!r}; expected one of {', '.join(METHODS)}")
        if self.sigma_k < 0:
            raise ValueError("sigma_k must be >= 0")
        if self.epsilon < 0:
            raise ValueError("epsilon must be >= 0")
        if self.scenario_count < 1:
            raise ValueError("scenario_count must be >= 1")
        if self.sp_source not in ("scenarios", "distribution"):
            raise ValueError("sp_source must be 'scenarios' or 'distribution'")

    @property
    def name(self) -> str:
        if self.label:
            return self.label
        if self.method == "ro":
            return f"RO-{self.sigma_k:g}sigma"
        if self.method == "dro":
            return f"DRO-{self.epsilon:g}"
        return {"do": "DO", "sp_strict": "SP-strict", "sp_average": "SP-average"}[self.method]


@dataclass
class MethodResult:
    config: MethodConfig
    schedule: Schedule
    solution: milp.Solution
    spec: milp.ModelSpec = field(repr=False)


def build_method(inst: ProblemInstance, cfg: MethodConfig) -> milp.ModelSpec:
    if cfg.method == "do":
        return build_do(inst)
    if cfg.method in ("sp_strict", "sp_average"):
        mode = cfg.method.split("_")[1]
        if cfg.sp_source == "distribution":
            source = inst.center_distributions()
        else:
            source = sample_regular(inst.forecast, cfg.scenario_count, cfg.scenario_seed)
        return build_sp(inst, source, mode)
    if cfg.method == "ro":
        return build_ro(inst, UncertaintyInterval.sigma_box(inst.forecast, cfg.sigma_k))
    return build_dro(inst, DroConfig(cfg.epsilon, cfg.dro_mode, support=cfg.support))


def run_method(inst: ProblemInstance, cfg: MethodConfig) -> MethodResult:
    spec = build_method(inst, cfg)
    sol = milp.solve_milp(spec)
    if sol.status != milp.OPTIMAL:
        raise InfeasibleScheduleError(cfg.name, _diagnose(spec, inst), sol.status)
    n = inst.horizon.step_count
    x = sol.x[:n]
    if np.any(np.abs(x - np.round(x)) > milp.INT_TOL):
        raise milp.SolverError("solver returned a fractional schedule")
    schedule = Schedule(np.round(x).astype(int), inst.horizon.initial_state, objective=sol.objective)
    if not check_min_updown(schedule, inst.horizon):
        raise milp.SolverError("solver returned a schedule violating minimum up/down time")
    return MethodResult(cfg, schedule, sol, spec)


def solve_method(inst: ProblemInstance, method: str, **params) -> Schedule:
    """Build, solve and validate one formulation; returns the schedule (objective attached)."""
    return run_method(inst, MethodConfig(method, **params)).schedule


def _diagnose(spec: milp.ModelSpec, inst: ProblemInstance) -> str:
    """Name the constraint family that makes ``spec`` infeasible."""
    n = inst.horizon.step_count
    x = np.zeros(spec.num_variables)
    x[:n] = 1.0  # full cooling is the most comfort-friendly schedule
    a = spec.matrix()
    lo, hi = spec.row_bounds()
    act = a @ x
    for r, con in enumerate(spec.constraints):
        if con.name and con.name.startswith("comfort") and act[r] > hi[r] + milp.FEAS_TOL:
            if not any(c in spec.variables[k].name for k in con.indices for c in ("lam", "s[")):
                return f"comfort bound unreachable at step {con.name.split('[')[1].rstrip(']')}"
    return "comfort bound combined with minimum up/down time"


def with_centers(inst: ProblemInstance, centers: Sequence[DiscreteDistribution]) -> ProblemInstance:
    return replace(inst, centers=tuple(centers))
