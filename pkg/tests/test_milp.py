import itertools
import math

import numpy as np
import pytest
from scipy.optimize import Bounds, LinearConstraint, linprog, milp

from factories import random_instance
from hvacdro import milp as solver
from hvacdro.formulations import build_do, build_ro, UncertaintyInterval
from hvacdro.instances import intuitive_instance
from hvacdro.milp import ModelSpec, brute_force_binary, dual_objective, solve_lp, solve_milp


def scipy_lp(spec):
    a = spec.matrix()
    lo, hi = spec.row_bounds()
    vlo, vhi = spec.bounds()
    res = linprog(spec.cost_vector(), A_ub=np.vstack([a, -a])[np.isfinite(np.concatenate([hi, -lo]))],
                  b_ub=np.concatenate([hi, -lo])[np.isfinite(np.concatenate([hi, -lo]))],
                  bounds=list(zip(np.where(np.isfinite(vlo), vlo, None), np.where(np.isfinite(vhi), vhi, None))),
                  method="highs")
    return res


def vertex_enumeration(c, a_ub, b_ub, lo, hi):
    """Best vertex of ``a_ub x <= b_ub, lo <= x <= hi`` (bounded, tiny)."""
    n = c.size
    rows = [a_ub[i] for i in range(a_ub.shape[0])] + [np.eye(n)[j] for j in range(n)] + [-np.eye(n)[j] for j in range(n)]
    rhs = list(b_ub) + list(hi) + [-v for v in lo]
    g, h = np.array(rows), np.array(rhs)
    best = math.inf
    for pick in itertools.combinations(range(len(rows)), n):
        sub = g[list(pick)]
        if abs(np.linalg.det(sub)) < 1e-10:
            continue
        x = np.linalg.solve(sub, h[list(pick)])
        if np.all(g @ x <= h + 1e-9):
            best = min(best, float(c @ x))
    return best


def random_lp(rng, n, m):
    spec = ModelSpec("random")
    for j in range(n):
        kind = rng.integers(4)
        lo, hi = [(0.0, math.inf), (-math.inf, math.inf), (-2.0, 3.0), (-math.inf, 5.0)][kind]
        spec.add_variable(f"x{j}", lo, hi)
    center = rng.uniform(0, 2, n)  # inside every bound pattern above
    for r in range(m):
        coefs = rng.normal(size=n) * (rng.random(n) < 0.6)
        act = coefs @ center
        rel = rng.choice(["<=", ">=", "="], p=[0.45, 0.45, 0.1])
        slack = rng.uniform(0, 2)
        rhs = act + slack if rel == "<=" else act - slack if rel == ">=" else act
        spec.add_constraint({j: float(v) for j, v in enumerate(coefs) if v}, rel, float(rhs))
    # keep every LP bounded: a box row on the sum of |x|-ish directions
    for j in range(n):
        spec.add_constraint({j: 1.0}, "<=", 50.0)
        spec.add_constraint({j: 1.0}, ">=", -50.0)
    spec.set_objective({j: float(v) for j, v in enumerate(rng.normal(size=n))})
    return spec


def test_trivial_lp():
    spec = ModelSpec()
    x = spec.add_variable("x", 0.0, math.inf)
    spec.add_constraint({x: 1.0}, "<=", 1.0)
    spec.set_objective({x: -1.0})
    sol = solve_lp(spec)
    assert sol.optimal and sol.x[0] == 1.0 and sol.objective == -1.0


def test_transport_lp_example():
    spec = ModelSpec("transport")
    support_q, support_p, probs_p = [75.0], [74.0, 78.0], [0.5, 0.5]
    pi = {(i, j): spec.add_variable(f"pi{i}{j}") for i in range(1) for j in range(2)}
    spec.add_constraint({pi[0, 0]: 1.0, pi[0, 1]: 1.0}, "=", 1.0)
    for j in range(2):
        spec.add_constraint({pi[0, j]: 1.0}, "=", probs_p[j])
    spec.set_objective({pi[0, j]: abs(support_q[0] - support_p[j]) for j in range(2)})
    assert solve_lp(spec).objective == pytest.approx(2.0, abs=1e-12)


def test_infeasible_and_unbounded():
    spec = ModelSpec()
    x = spec.add_variable("x", 0.0, 1.0)
    spec.add_constraint({x: 1.0}, ">=", 2.0)
    assert solve_lp(spec).status == solver.INFEASIBLE
    spec = ModelSpec()
    x = spec.add_variable("x", -math.inf, math.inf)
    y = spec.add_variable("y", 0.0, math.inf)
    spec.add_constraint({x: 1.0, y: -1.0}, "<=", 0.0)
    spec.set_objective({x: -1.0})
    assert solve_lp(spec).status == solver.UNBOUNDED


def test_random_lps_against_highs():
    rng = np.random.default_rng(2024)
    for trial in range(200):
        n, m = int(rng.integers(1, 31)), int(rng.integers(1, 31))
        spec = random_lp(rng, n, m)
        ours = solve_lp(spec)
        ref = scipy_lp(spec)
        assert ref.status == 0, trial
        assert ours.optimal, trial
        assert ours.objective == pytest.approx(ref.fun, abs=1e-6, rel=1e-9), trial
        assert spec.is_feasible(ours.x)
        # dual certificate closes the gap
        assert dual_objective(spec, ours) == pytest.approx(ours.objective, abs=1e-6, rel=1e-9), trial


def test_tiny_lps_against_vertex_enumeration():
    rng = np.random.default_rng(7)
    for _ in range(40):
        n, m = int(rng.integers(1, 4)), int(rng.integers(1, 5))
        a = rng.normal(size=(m, n))
        b = a @ rng.uniform(-1, 1, n) + rng.uniform(0, 1, m)
        lo, hi = np.full(n, -3.0), np.full(n, 3.0)
        c = rng.normal(size=n)
        spec = ModelSpec()
        for j in range(n):
            spec.add_variable(f"x{j}", -3.0, 3.0)
        for r in range(m):
            spec.add_constraint({j: float(a[r, j]) for j in range(n)}, "<=", float(b[r]))
        spec.set_objective({j: float(c[j]) for j in range(n)})
        assert solve_lp(spec).objective == pytest.approx(vertex_enumeration(c, a, b, lo, hi), abs=1e-8)


def test_degenerate_lp_terminates():
    # Beale-style cycling example
    spec = ModelSpec()
    xs = [spec.add_variable(f"x{j}") for j in range(4)]
    spec.add_constraint(dict(zip(xs, [0.25, -60.0, -0.04, 9.0])), "<=", 0.0)
    spec.add_constraint(dict(zip(xs, [0.5, -90.0, -0.02, 3.0])), "<=", 0.0)
    spec.add_constraint({xs[2]: 1.0}, "<=", 1.0)
    spec.set_objective(dict(zip(xs, [-0.75, 150.0, -0.02, 6.0])))
    sol = solve_lp(spec)
    assert sol.optimal and sol.objective == pytest.approx(-0.05, abs=1e-9)


def test_intuitive_do_milp():
    spec = build_do(intuitive_instance())
    sol = solve_milp(spec)
    assert sol.x[0] == 0.0
    assert sol.objective == pytest.approx(2.25, abs=1e-12)


def test_milp_matches_brute_force_and_highs():
    rng = np.random.default_rng(99)
    infeasible = 0
    for trial in range(60):
        inst = random_instance(rng, int(rng.integers(4, 13)))
        spec = build_do(inst)
        ours, oracle = solve_milp(spec), brute_force_binary(spec)
        assert ours.status == oracle.status, trial
        if not oracle.optimal:
            infeasible += 1
            continue
        assert ours.objective == pytest.approx(oracle.objective, abs=1e-9), trial
        a = spec.matrix()
        lo, hi = spec.row_bounds()
        vlo, vhi = spec.bounds()
        ref = milp(spec.cost_vector(), constraints=LinearConstraint(a, lo, hi),
                   integrality=np.ones(spec.num_variables), bounds=Bounds(vlo, vhi))
        assert ours.objective - spec.objective_offset == pytest.approx(ref.fun, abs=1e-7), trial
    assert 0 < infeasible < 60


def test_milp_with_continuous_matches_brute_force():
    rng = np.random.default_rng(5)
    for trial in range(12):
        inst = random_instance(rng, int(rng.integers(4, 8)))
        mu = inst.forecast.mean
        spec = build_ro(inst, UncertaintyInterval(mu - 0.5, mu + 0.5))
        ours, oracle = solve_milp(spec), brute_force_binary(spec)
        assert ours.status == oracle.status
        if oracle.optimal:
            assert ours.objective == pytest.approx(oracle.objective, abs=1e-9)


def test_brute_force_edge_cases():
    spec = ModelSpec()
    x = spec.add_variable("x", binary=True)
    y = spec.add_variable("y", binary=True)
    spec.add_constraint({x: 1.0, y: 1.0}, ">=", 3.0)
    assert brute_force_binary(spec).status == solver.INFEASIBLE
    assert solve_milp(spec).status == solver.INFEASIBLE

    free = ModelSpec()
    for j in range(3):
        free.add_variable(f"b{j}", binary=True)
    free.add_constraint({0: 1.0, 1: 1.0}, "<=", 1.0)
    sol = brute_force_binary(free)
    assert sol.optimal and sol.objective == 0.0 and free.is_feasible(sol.x)

    big = ModelSpec()
    for j in range(21):
        big.add_variable(f"b{j}", binary=True)
    with pytest.raises(ValueError):
        brute_force_binary(big)


def test_deterministic_node_counts():
    rng = np.random.default_rng(1)
    spec = build_do(random_instance(rng, 12))
    a, b = solve_milp(spec), solve_milp(spec)
    assert (a.status, a.objective, a.nodes, a.pivots) == (b.status, b.objective, b.nodes, b.pivots)
    if a.optimal:
        assert np.array_equal(a.x, b.x)


def test_spec_validation():
    spec = ModelSpec()
    spec.add_variable("x")
    with pytest.raises(ValueError):
        spec.add_variable("x")
    with pytest.raises(ValueError):
        spec.add_variable("y", 2.0, 1.0)
    with pytest.raises(ValueError):
        spec.add_constraint({5: 1.0}, "<=", 1.0)
    with pytest.raises(ValueError):
        spec.add_constraint({0: 1.0}, "<>", 1.0)
    with pytest.raises(ValueError):
        spec.add_constraint({0: float("nan")}, "<=", 1.0)


def test_lp_export_layout():
    spec = ModelSpec("demo")
    x = spec.add_variable("x", binary=True)
    z = spec.add_variable("z", -math.inf, math.inf)
    w = spec.add_variable("w", 0.0, 4.0)
    spec.add_constraint({x: 2.0, z: -1.0}, ">=", 1.5, name="row[0]")
    spec.add_constraint({w: 1.0, z: 1.0}, "=", 2.0)
    spec.set_objective({x: 1.0, z: 3.0}, offset=0.5)
    text = spec.to_lp_format()
    lines = text.splitlines()
    for section in ("Minimize", "Subject To", "Bounds", "Binary", "End"):
        assert section in lines
    assert lines.index("Minimize") < lines.index("Subject To") < lines.index("Bounds") < lines.index("Binary")
    assert " row[0]: 2 x - 1 z >= 1.5" in lines
    assert " z free" in lines
    assert " 0 <= w <= 4" in lines
