import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from factories import random_instance
from hvacdro.distributions import ScenarioSet, sample_extreme, sample_regular
from hvacdro.evaluation import ExactSum, compare_methods, evaluate_one, evaluate_set
from hvacdro.formulations import MethodConfig
from hvacdro.instances import instance_from_dict, intuitive_config, intuitive_instance


def loop_metrics(inst, x, amb):
    """Plain per-step loop: realized cost, violated steps, summed overshoot."""
    m = inst.model
    t_prev, cost, vnum, vmil = m.t_in_initial, 0.0, 0, 0.0
    for t in range(len(x)):
        t_in = m.b1 * x[t] + m.b2 * amb[t] + m.b3 * t_prev + m.b0
        cost += inst.tariff.price_per_step[t] * inst.horizon.step_hours * (m.a1 * x[t] + m.a2 * amb[t] + m.a0)
        over = t_in - inst.comfort.upper_per_step[t]
        if over > 1e-9:
            vnum += 1
            vmil += over
        t_prev = t_in
    return cost, vnum, vmil


def test_single_step_violation():
    cost, vnum, vmil = evaluate_one(intuitive_instance(), [0], [77.0])
    assert vnum == 1
    assert vmil == pytest.approx(0.3, abs=1e-12)
    assert cost == pytest.approx(2.31, abs=1e-12)


def test_sitting_on_bound_is_not_a_violation():
    cfg = intuitive_config()
    cfg["comfort"][0]["upper"] = 75.7  # 0.7 * 76 + 0.3 * 75
    inst = instance_from_dict(cfg)
    assert evaluate_one(inst, [0], [75.0])[1:] == (0, 0.0)


def test_one_scenario_set_equals_single_evaluation():
    rng = np.random.default_rng(0)
    inst = random_instance(rng, 12)
    x = rng.integers(0, 2, 12)
    amb = inst.forecast.mean + rng.normal(0, 1, 12)
    rep = evaluate_set(inst, x, ScenarioSet(amb[None, :], "one", 0))
    assert (rep.mean_cost, rep.mean_vnum, rep.mean_vmil) == evaluate_one(inst, x, amb)


def test_matches_loop_oracle():
    rng = np.random.default_rng(1)
    for _ in range(20):
        inst = random_instance(rng, 16)
        x = rng.integers(0, 2, 16)
        amb = inst.forecast.mean + rng.normal(0, 2, 16)
        got = evaluate_one(inst, x, amb)
        want = loop_metrics(inst, x, amb)
        assert got[1] == want[1]
        assert got[0] == pytest.approx(want[0], abs=1e-9)
        assert got[2] == pytest.approx(want[2], abs=1e-9)


def test_duplicated_set_keeps_means():
    rng = np.random.default_rng(2)
    inst = random_instance(rng, 10)
    sc = sample_regular(inst.forecast, 300, 4)
    x = rng.integers(0, 2, 10)
    a = evaluate_set(inst, x, sc)
    b = evaluate_set(inst, x, ScenarioSet(np.vstack([sc.values, sc.values]), "dup", 0))
    assert (a.mean_cost, a.mean_vnum, a.mean_vmil) == (b.mean_cost, b.mean_vnum, b.mean_vmil)


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 2**31 - 1))
def test_permutation_invariant(seed):
    rng = np.random.default_rng(seed)
    inst = random_instance(rng, 8)
    sc = sample_regular(inst.forecast, 50, seed)
    x = rng.integers(0, 2, 8)
    a = evaluate_set(inst, x, sc)
    b = evaluate_set(inst, x, ScenarioSet(sc.values[rng.permutation(50)], "perm", 0))
    assert (a.mean_cost, a.mean_vnum, a.mean_vmil) == (b.mean_cost, b.mean_vnum, b.mean_vmil)


def test_chunking_does_not_change_means():
    rng = np.random.default_rng(3)
    inst = random_instance(rng, 6)
    sc = sample_regular(inst.forecast, 4500, 2)
    x = rng.integers(0, 2, 6)
    whole = evaluate_set(inst, x, sc)
    costs = [evaluate_one(inst, x, row)[0] for row in sc.values]
    assert whole.mean_cost == math.fsum(costs) / len(costs)


def test_violation_magnitude_envelope():
    rng = np.random.default_rng(5)
    inst = random_instance(rng, 12, comfort=(74.0, 76.0))
    sc = sample_extreme(inst.forecast, 400, 1)
    x = np.zeros(12)
    rep = evaluate_set(inst, x, sc)
    for h, row in enumerate(sc.values):
        _, vn, vm = evaluate_one(inst, x, row)
        assert rep.vnum[h] == vn
        assert rep.vmil[h] == vm
    assert np.all((rep.vmil > 0) == (rep.vnum > 0))
    assert rep.mean_vnum > 0


def test_exact_sum_is_order_free():
    rng = np.random.default_rng(6)
    values = rng.normal(size=1000) * 10.0 ** rng.integers(-8, 8, 1000)
    a, b = ExactSum(), ExactSum()
    a.extend(values)
    b.extend(values[::-1])
    assert a.value() == b.value() == math.fsum(values)


def test_length_checks():
    inst = intuitive_instance()
    with pytest.raises(ValueError):
        evaluate_one(inst, [0, 1], [75.0, 75.0])
    with pytest.raises(ValueError):
        evaluate_one(inst, [0], [75.0, 75.0])


def test_report_serialization():
    rng = np.random.default_rng(7)
    inst = random_instance(rng, 6)
    rep = evaluate_set(inst, np.ones(6), sample_regular(inst.forecast, 20, 0), "demo")
    d = rep.to_dict(per_scenario=True)
    assert d["scenarios"] == 20 and len(d["per_scenario"]["cost"]) == 20
    assert rep.to_json() == rep.to_json()
    assert rep.percentile("cost", 50) == pytest.approx(float(np.median(rep.costs)))


def test_do_violates_where_ro3_does_not(practical, practical_results):
    sc = sample_regular(practical.forecast, 2000, 0)
    do = evaluate_set(practical, practical_results("do").schedule, sc)
    ro = evaluate_set(practical, practical_results("ro", sigma_k=3.0).schedule, sc)
    assert do.mean_vnum > 0
    assert ro.mean_vnum == 0 and ro.mean_vmil == 0


def test_compare_records_infeasible_rows():
    cfg = intuitive_config()
    cfg["comfort"][0]["upper"] = 70.0
    inst = instance_from_dict(cfg)
    sc = sample_regular(inst.forecast, 10, 0)
    comp = compare_methods(inst, [MethodConfig("do")], sc, sc)
    assert not comp.rows[0].ok and "comfort" in comp.rows[0].error
    assert "infeasible" in comp.summary_csv()


def test_compare_dro_zero_equals_sp_average():
    rng = np.random.default_rng(9)
    inst = random_instance(rng, 10, comfort=(76.5, 79.0))
    reg, ext = sample_regular(inst.forecast, 200, 0), sample_extreme(inst.forecast, 200, 1)
    comp = compare_methods(inst, [MethodConfig("dro", epsilon=0.0),
                                  MethodConfig("sp_average", sp_source="distribution")], reg, ext)
    a, b = comp.rows
    assert a.ok == b.ok
    if a.ok:
        assert np.array_equal(a.result.schedule.on_off, b.result.schedule.on_off)
        for key in ("regular", "extreme"):
            assert a.reports[key].mean_cost == b.reports[key].mean_cost
    with pytest.raises(ValueError):
        compare_methods(inst, [], reg, ext, cost_source="median")
