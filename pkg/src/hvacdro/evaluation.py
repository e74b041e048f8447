"""Out-of-sample scoring of fixed schedules: realized cost and comfort violations.

Sums over steps and means over scenarios use exact (correctly rounded)
summation, so every figure is independent of evaluation order and of how
scenarios are chunked.
"""

from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .distributions import ScenarioSet
from .formulations import InfeasibleScheduleError, MethodConfig, MethodResult, ProblemInstance, run_method
from .milp import SolverError
from .model import Schedule, simulate_indoor, simulate_indoor_batch

VIOLATION_DEADBAND = 1e-9
RETAIN_LIMIT = 10_000  # per-scenario vectors are kept up to this many scenarios
_CHUNK = 2_000


class ExactSum:
    """Running sum with no rounding error until :meth:`value` is read."""

    def __init__(self):
        self._partials: list[float] = []

    def add(self, x: float) -> None:
        partials = self._partials
        i = 0
        for y in partials:
            if abs(x) < abs(y):
                x, y = y, x
            hi = x + y
            lo = y - (hi - x)
            if lo:
                partials[i] = lo
                i += 1
            x = hi
        partials[i:] = [x]

    def extend(self, values) -> None:
        for v in values:
            self.add(float(v))

    def value(self) -> float:
        return math.fsum(self._partials)


def _trajectory_metrics(inst: ProblemInstance, x: np.ndarray, ambient: np.ndarray, t_in: np.ndarray):
    """Per-row (cost, V_num, V_mil) for matching (H, T) ambient/indoor arrays."""
    m = inst.model
    weight = inst.tariff.price_per_step * inst.horizon.step_hours
    power = m.a1 * x + m.a2 * ambient + m.a0
    over = t_in - inst.comfort.upper_per_step
    hit = over > VIOLATION_DEADBAND
    costs = np.array([math.fsum(row) for row in weight * power])
    vnum = hit.sum(axis=1).astype(np.int64)
    vmil = np.array([math.fsum(row) for row in np.where(hit, over, 0.0)])
    return costs, vnum, vmil


def _schedule_vector(inst: ProblemInstance, schedule) -> np.ndarray:
    x = schedule.on_off if isinstance(schedule, Schedule) else np.asarray(schedule)
    x = np.asarray(x, dtype=float).reshape(-1)
    if x.shape[0] != inst.horizon.step_count:
        raise ValueError(f"schedule has {x.shape[0]} steps, instance has {inst.horizon.step_count}")
    return x


def evaluate_one(inst: ProblemInstance, schedule, trajectory) -> tuple[float, int, float]:
    """Realized ``(cost, V_num, V_mil)`` of a schedule on one ambient trajectory.

    A step counts as violated only when the overshoot exceeds
    ``VIOLATION_DEADBAND``; sitting exactly on the bound is fine.
    """
    x = _schedule_vector(inst, schedule)
    amb = np.asarray(trajectory, dtype=float).reshape(-1)
    if amb.shape[0] != x.shape[0]:
        raise ValueError(f"trajectory has {amb.shape[0]} steps, schedule has {x.shape[0]}")
    t_in = simulate_indoor(inst.model, x, amb)
    costs, vnum, vmil = _trajectory_metrics(inst, x, amb[None, :], t_in[None, :])
    return float(costs[0]), int(vnum[0]), float(vmil[0])


@dataclass
class EvaluationReport:
    method: str
    set_label: str
    seed: int
    count: int
    mean_cost: float
    mean_vnum: float
    mean_vmil: float
    costs: np.ndarray | None = field(default=None, repr=False)
    vnum: np.ndarray | None = field(default=None, repr=False)
    vmil: np.ndarray | None = field(default=None, repr=False)

    def percentile(self, metric: str, q: float) -> float:
        values = {"cost": self.costs, "vnum": self.vnum, "vmil": self.vmil}[metric]
        if values is None:
            raise ValueError(f"per-scenario values are only kept for up to {RETAIN_LIMIT} scenarios")
        return float(np.percentile(values, q))

    def to_dict(self, per_scenario: bool = False) -> dict:
        out = {
            "method": self.method,
            "set": self.set_label,
            "seed": self.seed,
            "scenarios": self.count,
            "mean_cost": self.mean_cost,
            "mean_vnum": self.mean_vnum,
            "mean_vmil": self.mean_vmil,
        }
        if per_scenario and self.costs is not None:
            out["per_scenario"] = {
                "cost": self.costs.tolist(),
                "vnum": self.vnum.tolist(),
                "vmil": self.vmil.tolist(),
            }
        return out

    def to_json(self, per_scenario: bool = False) -> str:
        return json.dumps(self.to_dict(per_scenario), indent=2, sort_keys=True) + "\n"


def evaluate_set(inst: ProblemInstance, schedule, scenarios: ScenarioSet, method: str = "") -> EvaluationReport:
    x = _schedule_vector(inst, schedule)
    values = scenarios.values
    if values.shape[1] != x.shape[0]:
        raise ValueError(f"scenarios have {values.shape[1]} steps, schedule has {x.shape[0]}")
    count = values.shape[0]
    keep = count <= RETAIN_LIMIT
    sums = [ExactSum(), ExactSum(), ExactSum()]
    kept = ([], [], [])
    for start in range(0, count, _CHUNK):
        amb = values[start:start + _CHUNK]
        t_in = simulate_indoor_batch(inst.model, x, amb)
        parts = _trajectory_metrics(inst, x, amb, t_in)
        for acc, store, part in zip(sums, kept, parts):
            acc.extend(part)
            if keep:
                store.append(part)
    report = EvaluationReport(
        method, scenarios.label, scenarios.seed, count,
        sums[0].value() / count, sums[1].value() / count, sums[2].value() / count,
    )
    if keep:
        report.costs, report.vnum, report.vmil = (np.concatenate(s) for s in kept)
    return report


@dataclass
class ComparisonRow:
    method: str
    config: MethodConfig
    result: MethodResult | None
    reports: dict[str, EvaluationReport]
    error: str | None = None

    @property
    def ok(self) -> bool:
        return self.error is None


@dataclass
class Comparison:
    rows: list[ComparisonRow]
    cost_source: str = "regular"

    def long_csv(self) -> str:
        """One line per (method, set)."""
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["method", "set", "status", "planned_cost", "cost", "v_num", "v_mil"])
        for row in self.rows:
            for set_label in ("regular", "extreme"):
                rep = row.reports.get(set_label)
                if rep is None:
                    w.writerow([row.method, set_label, row.error or "skipped", "", "", "", ""])
                else:
                    w.writerow([row.method, set_label, "ok", _fmt(row.result.solution.objective),
                                _fmt(rep.mean_cost), _fmt(rep.mean_vnum), _fmt(rep.mean_vmil)])
        return buf.getvalue()

    def summary_csv(self) -> str:
        """Cost plus violation pairs for both sets, one line per method."""
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["method", "cost", "regular_v_num", "regular_v_mil", "extreme_v_num", "extreme_v_mil"])
        for row in self.rows:
            if not row.ok:
                w.writerow([row.method, f"infeasible: {row.error}", "", "", "", ""])
                continue
            if self.cost_source == "planned":
                cost = row.result.solution.objective
            else:
                cost = row.reports[self.cost_source].mean_cost
            reg, ext = row.reports["regular"], row.reports["extreme"]
            w.writerow([row.method, _fmt(cost), _fmt(reg.mean_vnum), _fmt(reg.mean_vmil),
                        _fmt(ext.mean_vnum), _fmt(ext.mean_vmil)])
        return buf.getvalue()

    def to_dict(self) -> dict:
        out = []
        for row in self.rows:
            entry = {"method": row.method, "status": "ok" if row.ok else "failed"}
            if row.ok:
                sol = row.result.solution
                entry.update({
                    "planned_cost": sol.objective,
                    "nodes": sol.nodes,
                    "pivots": sol.pivots,
                    "schedule": [int(v) for v in row.result.schedule.on_off],
                    "reports": {k: r.to_dict() for k, r in row.reports.items()},
                })
            else:
                entry["error"] = row.error
            out.append(entry)
        return {"cost_source": self.cost_source, "methods": out}

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True) + "\n"


def _fmt(value: float) -> str:
    return f"{value:.6f}"


def compare_methods(
    inst: ProblemInstance,
    configs: Sequence[MethodConfig],
    regular: ScenarioSet,
    extreme: ScenarioSet,
    cost_source: str = "regular",
) -> Comparison:
    """Solve every method and score it on both sets; failures stay in their row."""
    if cost_source not in ("regular", "extreme", "planned"):
        raise ValueError("cost_source must be 'regular', 'extreme' or 'planned'")
    rows = []
    for cfg in configs:
        try:
            result = run_method(inst, cfg)
        except (InfeasibleScheduleError, SolverError) as exc:
            rows.append(ComparisonRow(cfg.name, cfg, None, {}, str(exc)))
            continue
        reports = {
            "regular": evaluate_set(inst, result.schedule, regular, cfg.name),
            "extreme": evaluate_set(inst, result.schedule, extreme, cfg.name),
        }
        rows.append(ComparisonRow(cfg.name, cfg, result, reports))
    return Comparison(rows, cost_source)
