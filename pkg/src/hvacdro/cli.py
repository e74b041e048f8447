"""Command-line front end.

    hvacdro solve     --config run.json --method dro --epsilon 2 --out results/
    hvacdro evaluate  --config run.json --schedule results/schedule_DRO-2.csv
    hvacdro compare   --config run.json --out results/
    hvacdro table1
    hvacdro wasserstein a.csv b.csv

``--config`` takes a run config (JSON with an ``instance`` entry), a bare
instance JSON, or the name of a built-in instance (``practical``,
``intuitive``). Exit codes: 0 success, 1 usage/config error, 2 infeasible.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import re
import sys
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .distributions import (
    DiscreteDistribution,
    ScenarioSet,
    sample_extreme,
    sample_regular,
    wasserstein_distance,
    worst_two_point,
)
from .evaluation import compare_methods, evaluate_set
from .formulations import (
    METHODS,
    InfeasibleScheduleError,
    MethodConfig,
    ProblemInstance,
    run_method,
)
from .instances import BUILTIN, InstanceError, instance_from_dict, intuitive_instance
from .milp import SolverError
from .model import Schedule, check_min_updown, simulate_indoor

EXIT_OK, EXIT_CONFIG, EXIT_INFEASIBLE = 0, 1, 2

TABLE1_PAIRS = ((75, 77), (74, 78), (75, 78), (76, 78), (74, 79), (75, 79), (76, 79))
TABLE1_RADIUS = 2.0

DEFAULT_METHODS = (
    {"method": "do"},
    {"method": "ro", "sigma_k": 2},
    {"method": "ro", "sigma_k": 3},
    {"method": "sp_strict"},
    {"method": "sp_average"},
    {"method": "dro", "epsilon": [0, 1, 2, 2.5]},
)


class ConfigError(Exception):
    pass


@dataclass
class RunConfig:
    instance: ProblemInstance
    methods: list[MethodConfig]
    scenarios: int = 1000
    regular_seed: int = 0
    extreme_seed: int = 1
    cost_source: str = "regular"
    out: Path = Path("results")
    source_text: str = field(default="", repr=False)


# ---------------------------------------------------------------------------
# config loading


def _line_of(text: str, path: str) -> int | None:
    """Best-effort line number of the last key in a dotted ``path``."""
    if not text:
        return None
    key = re.split(r"[.\[]", path)[-1] if "." in path or "[" in path else path
    key = key.rstrip("]")
    match = re.search(r'"%s"\s*:' % re.escape(key), text)
    if match is None:
        return None
    return text.count("\n", 0, match.start()) + 1


def _config_error(origin: str, text: str, path: str, message: str) -> ConfigError:
    line = _line_of(text, path)
    where = f"{origin}:{line}" if line else origin
    return ConfigError(f"{where}: {path}: {message}" if path else f"{where}: {message}")


def _read_json(path: str) -> tuple[dict, str]:
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ConfigError(f"{path}: cannot read ({exc.strerror or exc})") from None
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}:{exc.lineno}: invalid JSON ({exc.msg})") from None
    if not isinstance(data, dict):
        raise ConfigError(f"{path}:1: top level must be an object")
    return data, text


def _load_instance(ref, origin: str, text: str, base: Path) -> ProblemInstance:
    if isinstance(ref, str) and ref in BUILTIN:
        data, origin, text = BUILTIN[ref](), f"<builtin {ref}>", ""
    elif isinstance(ref, str):
        target = Path(ref) if Path(ref).is_absolute() else base / ref
        data, text = _read_json(str(target))
        origin = str(target)
    elif isinstance(ref, dict):
        data = ref
    else:
        raise _config_error(origin, text, "instance", "expected a built-in name, a path or an object")
    try:
        return instance_from_dict(data)
    except InstanceError as exc:
        raise _config_error(origin, text, exc.path, str(exc).split(": ", 1)[1]) from None


def _expand_methods(entries, origin: str, text: str) -> list[MethodConfig]:
    if not isinstance(entries, list):
        raise _config_error(origin, text, "methods", "expected a list")
    out = []
    for k, entry in enumerate(entries):
        if isinstance(entry, str):
            entry = {"method": entry}
        if not isinstance(entry, dict):
            raise _config_error(origin, text, f"methods[{k}]", "expected an object or a method name")
        params = dict(entry)
        if "support" in params and params["support"] is not None:
            params["support"] = tuple(float(v) for v in params["support"])
        radii = params.pop("epsilon", 0.0)
        radii = radii if isinstance(radii, list) else [radii]
        if params.get("method") != "dro" and len(radii) > 1:
            raise _config_error(origin, text, "epsilon", "a radius list only applies to method 'dro'")
        for eps in radii:
            try:
                out.append(MethodConfig(epsilon=float(eps), **params))
            except (TypeError, ValueError) as exc:
                raise _config_error(origin, text, f"methods[{k}]", str(exc)) from None
    return out


def _int_field(data: dict, key: str, default: int, origin: str, text: str, minimum: int = 0) -> int:
    value = data.get(key, default)
    if isinstance(value, bool) or not isinstance(value, int) or value < minimum:
        raise _config_error(origin, text, key, f"expected an integer >= {minimum}")
    return value


def load_run_config(args) -> RunConfig:
    ref = args.config or "practical"
    if ref in BUILTIN:
        data, text, origin, base = {"instance": ref}, "", f"<builtin {ref}>", Path.cwd()
    else:
        data, text = _read_json(ref)
        origin, base = ref, Path(ref).resolve().parent
        if "horizon" in data:  # a bare instance file
            data = {"instance": data}
    if "instance" not in data:
        raise _config_error(origin, text, "", "missing 'instance'")
    inst = _load_instance(data["instance"], origin, text, base)

    methods_src = data.get("methods", list(DEFAULT_METHODS))
    if getattr(args, "method", None):
        entry = {"method": args.method}
        if args.epsilon is not None:
            entry["epsilon"] = args.epsilon
        if args.sigma_k is not None:
            entry["sigma_k"] = args.sigma_k
        if getattr(args, "support", None):
            entry["support"] = args.support
        if getattr(args, "dro_mode", None):
            entry["dro_mode"] = args.dro_mode
        methods_src = [entry]
    methods = _expand_methods(methods_src, origin, text)

    sc = data.get("scenarios", {})
    if not isinstance(sc, dict):
        raise _config_error(origin, text, "scenarios", "expected an object")
    count = _int_field(sc, "count", 1000, origin, text, minimum=1)
    regular_seed = _int_field(sc, "regular_seed", 0, origin, text)
    extreme_seed = _int_field(sc, "extreme_seed", 1, origin, text)
    if args.scenarios is not None:
        count = args.scenarios
    if args.seed is not None:
        regular_seed, extreme_seed = args.seed, args.seed + 1
    cost_source = data.get("cost_source", "regular")
    if cost_source not in ("regular", "extreme", "planned"):
        raise _config_error(origin, text, "cost_source", "expected 'regular', 'extreme' or 'planned'")
    out = Path(args.out or data.get("out", "results"))
    return RunConfig(inst, methods, count, regular_seed, extreme_seed, cost_source, out, text)


def _float_list(text: str) -> list[float]:
    try:
        values = [float(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}") from None
    if not values:
        raise argparse.ArgumentTypeError("empty list")
    return values


def _positive_int(text: str) -> int:
    value = int(text)
    if value < 1:
        raise argparse.ArgumentTypeError("must be >= 1")
    return value


def _seed(text: str) -> int:
    value = int(text)
    if not 0 <= value < 2**64 - 1:
        raise argparse.ArgumentTypeError("seed must fit in an unsigned 64-bit integer")
    return value


# ---------------------------------------------------------------------------
# file formats


def schedule_csv(schedule: Schedule) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["step", "x"])
    for t, v in enumerate(schedule.on_off):
        w.writerow([t, int(v)])
    return buf.getvalue()


def read_schedule_csv(path: str, initial_state: int) -> Schedule:
    try:
        rows = list(csv.reader(io.StringIO(Path(path).read_text())))
    except OSError as exc:
        raise ConfigError(f"{path}: cannot read ({exc.strerror or exc})") from None
    if not rows or [h.strip() for h in rows[0]] != ["step", "x"]:
        raise ConfigError(f"{path}:1: header must be 'step,x'")
    values = []
    for lineno, row in enumerate(rows[1:], start=2):
        if not row:
            continue
        try:
            step, x = int(row[0]), int(row[1])
        except (ValueError, IndexError):
            raise ConfigError(f"{path}:{lineno}: expected two integers") from None
        if step != len(values) or x not in (0, 1):
            raise ConfigError(f"{path}:{lineno}: steps must count up from 0 and x must be 0 or 1")
        values.append(x)
    return Schedule(np.array(values, dtype=int), initial_state)


def _dump_json(obj) -> str:
    return json.dumps(obj, indent=2, sort_keys=True) + "\n"


def _write(out: Path, name: str, text: str) -> Path:
    out.mkdir(parents=True, exist_ok=True)
    path = out / name
    path.write_text(text)
    return path


def _safe(name: str) -> str:
    return re.sub(r"[^A-Za-z0-9_.+-]", "_", name)


# ---------------------------------------------------------------------------
# commands


def cmd_solve(cfg: RunConfig, stdout=sys.stdout) -> int:
    status = EXIT_OK
    for method in cfg.methods:
        try:
            result = run_method(cfg.instance, method)
        except InfeasibleScheduleError as exc:
            print(f"{method.name}: infeasible ({exc.family})", file=sys.stderr)
            log = {"method": method.name, "status": "infeasible", "reason": exc.family}
            _write(cfg.out, f"solve_{_safe(method.name)}.json", _dump_json(log))
            status = EXIT_INFEASIBLE
            continue
        sol, spec = result.solution, result.spec
        log = {
            "method": method.name,
            "status": sol.status,
            "objective": sol.objective,
            "nodes": sol.nodes,
            "pivots": sol.pivots,
            "variables": spec.num_variables,
            "constraints": spec.num_constraints,
            "binaries": int(spec.binary_indices.size),
            "schedule": [int(v) for v in result.schedule.on_off],
        }
        if "dro_offsets" in spec.metadata:
            log["dro_offsets"] = spec.metadata["dro_offsets"]
        _write(cfg.out, f"schedule_{_safe(method.name)}.csv", schedule_csv(result.schedule))
        _write(cfg.out, f"solve_{_safe(method.name)}.json", _dump_json(log))
        on = int(result.schedule.on_off.sum())
        print(f"{method.name}: objective {sol.objective:.6f}, {on}/{len(result.schedule)} steps on, "
              f"{sol.nodes} nodes", file=stdout)
    return status


def _scenario_set(cfg: RunConfig, which: str) -> ScenarioSet:
    fc = cfg.instance.forecast
    if which == "regular":
        return sample_regular(fc, cfg.scenarios, cfg.regular_seed)
    return sample_extreme(fc, cfg.scenarios, cfg.extreme_seed)


def cmd_evaluate(cfg: RunConfig, schedule_path: str, which: str, stdout=sys.stdout) -> int:
    inst = cfg.instance
    schedule = read_schedule_csv(schedule_path, inst.horizon.initial_state)
    if len(schedule) != inst.horizon.step_count:
        raise ConfigError(f"{schedule_path}: schedule has {len(schedule)} steps, "
                          f"instance has {inst.horizon.step_count}")
    if not check_min_updown(schedule, inst.horizon):
        print(f"warning: {schedule_path} violates the minimum up/down time", file=sys.stderr)
    scenarios = _scenario_set(cfg, which)
    label = Path(schedule_path).stem.removeprefix("schedule_")
    report = evaluate_set(inst, schedule, scenarios, label)
    _write(cfg.out, f"evaluation_{_safe(label)}_{which}.json", report.to_json())
    print(f"{label} on {which} (H={report.count}, seed={report.seed}): cost {report.mean_cost:.4f}, "
          f"V_num {report.mean_vnum:.4f}, V_mil {report.mean_vmil:.4f}", file=stdout)
    return EXIT_OK


def _fan_csv(inst: ProblemInstance, regular: ScenarioSet) -> str:
    hours = inst.horizon.clock_hours
    fc = inst.forecast
    qs = (5, 25, 50, 75, 95)
    pct = np.percentile(regular.values, qs, axis=0)
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["step", "hour", "mean", "std", "minus2sigma", "plus2sigma", "minus3sigma", "plus3sigma"]
               + [f"p{q}" for q in qs])
    for t in range(len(hours)):
        mu, sd = fc.mean[t], fc.std[t]
        w.writerow([t, f"{hours[t]:.4f}"] + [f"{v:.6f}" for v in
                   (mu, sd, mu - 2 * sd, mu + 2 * sd, mu - 3 * sd, mu + 3 * sd, *pct[:, t])])
    return buf.getvalue()


def _trajectory_csv(inst: ProblemInstance, rows) -> str:
    """Schedules and forecast-mean indoor temperatures per method, with the band."""
    ok = [r for r in rows if r.ok]
    hours = inst.horizon.clock_hours
    temps = {r.method: simulate_indoor(inst.model, r.result.schedule, inst.forecast.mean) for r in ok}
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["step", "hour", "price", "comfort_upper", "ambient_mean"]
               + [f"x_{r.method}" for r in ok] + [f"t_in_{r.method}" for r in ok])
    for t in range(len(hours)):
        w.writerow([t, f"{hours[t]:.4f}", f"{inst.tariff.price_per_step[t]:.6f}",
                    f"{inst.comfort.upper_per_step[t]:.6f}", f"{inst.forecast.mean[t]:.6f}"]
                   + [int(r.result.schedule.on_off[t]) for r in ok]
                   + [f"{temps[r.method][t]:.6f}" for r in ok])
    return buf.getvalue()


def cmd_compare(cfg: RunConfig, stdout=sys.stdout) -> int:
    if not cfg.methods:
        raise ConfigError("no methods to compare")
    regular = _scenario_set(cfg, "regular")
    extreme = _scenario_set(cfg, "extreme")
    comparison = compare_methods(cfg.instance, cfg.methods, regular, extreme, cfg.cost_source)
    _write(cfg.out, "comparison.csv", comparison.long_csv())
    _write(cfg.out, "table.csv", comparison.summary_csv())
    _write(cfg.out, "comparison.json", comparison.to_json())
    _write(cfg.out, "forecast_fan.csv", _fan_csv(cfg.instance, regular))
    _write(cfg.out, "trajectories.csv", _trajectory_csv(cfg.instance, comparison.rows))
    for row in comparison.rows:
        if row.ok:
            _write(cfg.out, f"schedule_{_safe(row.method)}.csv", schedule_csv(row.result.schedule))
    stdout.write(comparison.summary_csv())
    if not any(row.ok for row in comparison.rows):
        print("every method failed", file=sys.stderr)
        return EXIT_INFEASIBLE
    return EXIT_OK


@dataclass(frozen=True)
class Table1Row:
    index: int
    worst: DiscreteDistribution
    expected_off: float
    expected_on: float
    x_star: int

    def format(self) -> str:
        (a, b), (pa, pb) = self.worst.support, self.worst.probs
        return (f"{self.index}  {a:g}({100 * pa:.3g}%)  {b:g}({100 * pb:.3g}%)  "
                f"{self.expected_off:.1f}  {self.expected_on:.1f}  {self.x_star}")


def table1_rows() -> list[Table1Row]:
    """Single-step example: worst two-point law per pair and the DRO decision."""
    inst = intuitive_instance()
    m = inst.model
    center = inst.center_distributions()[0]
    rows = []
    for k, pair in enumerate(TABLE1_PAIRS, start=1):
        worst = worst_two_point(center.mean(), TABLE1_RADIUS, *pair)
        amb = worst.mean()
        base = m.b2 * amb + m.b3 * m.t_in_initial + m.b0
        result = run_method(inst, MethodConfig("dro", epsilon=TABLE1_RADIUS, support=tuple(map(float, pair))))
        rows.append(Table1Row(k, worst, base, base + m.b1, int(result.schedule.on_off[0])))
    return rows


def cmd_table1(stdout=sys.stdout) -> int:
    print("index  xi1(p1)  xi2(p2)  E[T_in|x=0]  E[T_in|x=1]  x*", file=stdout)
    for row in table1_rows():
        print(row.format(), file=stdout)
    return EXIT_OK


def cmd_wasserstein(path_a: str, path_b: str, stdout=sys.stdout) -> int:
    dists = []
    for path in (path_a, path_b):
        try:
            dists.append(DiscreteDistribution.from_csv(Path(path).read_text()))
        except OSError as exc:
            raise ConfigError(f"{path}: cannot read ({exc.strerror or exc})") from None
        except (ValueError, IndexError) as exc:
            raise ConfigError(f"{path}: {exc}") from None
    dist, _ = wasserstein_distance(*dists)
    print(repr(dist), file=stdout)
    return EXIT_OK


# ---------------------------------------------------------------------------
# entry point


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="hvacdro", description="HVAC on/off scheduling under ambient uncertainty")
    sub = parser.add_subparsers(dest="command", required=True)

    def run_flags(p, with_method=True):
        p.add_argument("--config", help="run config JSON, instance JSON, or built-in name (default: practical)")
        if with_method:
            p.add_argument("--method", choices=METHODS)
            p.add_argument("--epsilon", type=_float_list, help="Wasserstein radius, or a comma-separated list")
            p.add_argument("--sigma-k", type=float, help="half-width of the robust box in forecast sigmas")
            p.add_argument("--support", type=_float_list, help="candidate support for the worst-case law")
            p.add_argument("--dro-mode", choices=("reduced", "monolithic"))
        p.add_argument("--scenarios", type=_positive_int, help="scenarios per test set")
        p.add_argument("--seed", type=_seed, help="regular-set seed (the extreme set uses seed+1)")
        p.add_argument("--out", help="output directory")

    run_flags(sub.add_parser("solve", help="solve one or more formulations and write the schedules"))
    p_eval = sub.add_parser("evaluate", help="score a schedule CSV on a generated scenario set")
    run_flags(p_eval, with_method=False)
    p_eval.add_argument("--schedule", required=True)
    p_eval.add_argument("--set", choices=("regular", "extreme"), default="regular")
    run_flags(sub.add_parser("compare", help="solve and score every configured method"))
    sub.add_parser("table1", help="print the single-step worst-case example table")
    p_w = sub.add_parser("wasserstein", help="distance between two distribution CSVs")
    p_w.add_argument("dist_a")
    p_w.add_argument("dist_b")
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_CONFIG if exc.code else EXIT_OK
    try:
        if args.command == "table1":
            return cmd_table1(sys.stdout)
        if args.command == "wasserstein":
            return cmd_wasserstein(args.dist_a, args.dist_b, sys.stdout)
        if args.command == "evaluate":
            args.method = None
        cfg = load_run_config(args)
        if args.command == "solve":
            return cmd_solve(cfg, sys.stdout)
        if args.command == "evaluate":
            return cmd_evaluate(cfg, args.schedule, args.set, sys.stdout)
        return cmd_compare(cfg, sys.stdout)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (InfeasibleScheduleError, SolverError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INFEASIBLE


if __name__ == "__main__":
    sys.exit(main())
