import itertools

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from oracles import literal_updown
from hvacdro.model import (
    BuildingModel,
    ComfortBand,
    HorizonConfig,
    Schedule,
    TariffSchedule,
    check_min_updown,
    power_series,
    simulate_indoor,
    simulate_indoor_batch,
    total_cost,
    unroll_affine,
)

SMALL = BuildingModel(b1=-3.0, b2=0.3, b3=0.7, b0=0.0, a1=100.0, a2=0.3, a0=0.0, t_in_initial=76.0)
REGRESSION = BuildingModel(b1=-2.07, b2=0.15, b3=0.45, b0=37.9, a1=70.7, a2=0.24, a0=-17.8, t_in_initial=80.0)


def test_recursion_single_step():
    assert simulate_indoor(SMALL, [0], [77.0]) == pytest.approx([76.3], abs=1e-12)


def test_recursion_two_steps():
    assert simulate_indoor(SMALL, [0, 0], [77.0, 77.0]) == pytest.approx([76.3, 76.51], abs=1e-12)


def test_pure_decay():
    model = BuildingModel(0.0, 0.0, 0.5, 0.0, 0.0, 0.0, 0.0, 64.0)
    out = simulate_indoor(model, np.zeros(6), np.zeros(6))
    assert np.array_equal(out, 64.0 * 0.5 ** np.arange(1, 7))


def test_unstable_recursion_rejected():
    with pytest.raises(ValueError):
        BuildingModel(0.0, 0.0, 1.0, 0.0, 0.0, 0.0, 0.0, 70.0)


def test_cooling_sign_convention():
    with pytest.raises(ValueError):
        BuildingModel(1.0, 0.1, 0.5, 0.0, 1.0, 0.1, 0.0, 70.0)
    with pytest.raises(ValueError):
        BuildingModel(-1.0, 0.1, 0.5, 0.0, -1.0, 0.1, 0.0, 70.0)


def test_length_mismatch():
    with pytest.raises(ValueError):
        simulate_indoor(SMALL, [0, 1], [75.0])
    with pytest.raises(ValueError):
        power_series(SMALL, [0, 1], [75.0, 75.0, 75.0])


def test_power_regression_values():
    assert power_series(REGRESSION, [1], [75.0])[0] == pytest.approx(70.9, abs=1e-12)
    assert power_series(SMALL, [1], [77.0])[0] == pytest.approx(123.1, abs=1e-12)
    zero = BuildingModel(-1.0, 0.1, 0.5, 0.0, 0.0, 0.0, 0.0, 70.0)
    assert np.all(power_series(zero, [1, 0, 1], [70.0, 80.0, 90.0]) == 0)


def test_total_cost_examples():
    assert total_cost(TariffSchedule([0.1]), HorizonConfig(1, 1.0, 1), [123.1]) == pytest.approx(12.31)
    assert total_cost(TariffSchedule([1.0, 2.0]), HorizonConfig(2, 0.5, 1), [10.0, 10.0]) == pytest.approx(15.0)
    assert total_cost(TariffSchedule([0.3, 0.7]), HorizonConfig(2, 0.5, 1), [0.0, 0.0]) == 0.0


def test_total_cost_linear():
    rng = np.random.default_rng(3)
    tariff = TariffSchedule(rng.uniform(0, 1, 12))
    hz = HorizonConfig(12, 0.25, 2)
    p1, p2 = rng.normal(size=12), rng.normal(size=12)
    assert total_cost(tariff, hz, p1 + p2) == pytest.approx(total_cost(tariff, hz, p1) + total_cost(tariff, hz, p2))


def test_unroll_first_step_and_regression_value():
    hz = HorizonConfig(3, 0.1, 1)
    aff = unroll_affine(REGRESSION, hz)
    assert aff.on_coef[0, 0] == REGRESSION.b1
    assert aff.ambient_coef[0, 0] == REGRESSION.b2
    assert aff.offset[0] == pytest.approx(REGRESSION.b0 + REGRESSION.b3 * 80.0)
    value = aff.evaluate([1, 0, 0], [75.0, 75.0, 75.0])[0]
    assert value == pytest.approx(83.08, abs=1e-9)


def test_unroll_coefficients_closed_form():
    hz = HorizonConfig(5, 0.1, 1)
    aff = unroll_affine(SMALL, hz)
    for t in range(5):
        for k in range(5):
            expect = SMALL.b1 * SMALL.b3 ** (t - k) if k <= t else 0.0
            assert aff.on_coef[t, k] == pytest.approx(expect, abs=1e-15)
        gamma = SMALL.b0 * sum(SMALL.b3 ** j for j in range(t + 1)) + SMALL.b3 ** (t + 1) * SMALL.t_in_initial
        assert aff.offset[t] == pytest.approx(gamma)


@st.composite
def model_and_inputs(draw):
    n = draw(st.integers(1, 30))
    coef = st.floats(-5, 0)
    model = BuildingModel(
        b1=draw(coef),
        b2=draw(st.floats(0, 1)),
        b3=draw(st.floats(-0.99, 0.99)),
        b0=draw(st.floats(-50, 50)),
        a1=draw(st.floats(0, 100)),
        a2=draw(st.floats(-1, 1)),
        a0=draw(st.floats(-20, 20)),
        t_in_initial=draw(st.floats(60, 90)),
    )
    x = draw(st.lists(st.integers(0, 1), min_size=n, max_size=n))
    amb = draw(st.lists(st.floats(60, 95), min_size=n, max_size=n))
    return model, np.array(x), np.array(amb)


@settings(max_examples=100, deadline=None)
@given(model_and_inputs())
def test_affine_map_matches_recursion(case):
    model, x, amb = case
    aff = unroll_affine(model, HorizonConfig(len(x), 0.1, 1))
    np.testing.assert_allclose(aff.evaluate(x, amb), simulate_indoor(model, x, amb), rtol=0, atol=1e-9)


def test_batch_matches_single():
    rng = np.random.default_rng(0)
    amb = rng.uniform(65, 85, size=(7, 10))
    x = rng.integers(0, 2, 10)
    batch = simulate_indoor_batch(REGRESSION, x, amb)
    for h in range(7):
        assert np.array_equal(batch[h], simulate_indoor(REGRESSION, x, amb[h]))


def test_monotone_in_ambient():
    rng = np.random.default_rng(1)
    for _ in range(20):
        amb = rng.uniform(65, 85, 15)
        x = rng.integers(0, 2, 15)
        base = simulate_indoor(REGRESSION, x, amb)
        k = rng.integers(15)
        bumped = amb.copy()
        bumped[k] += rng.uniform(0.1, 3)
        assert np.all(simulate_indoor(REGRESSION, x, bumped) >= base)


def test_min_updown_examples():
    hz = HorizonConfig(12, 0.1, 4)
    assert check_min_updown([0, 0, 0, 1, 1, 1, 1, 0, 0, 0, 0, 0], hz)
    assert not check_min_updown([0, 1, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0], hz)
    # a run cut by the horizon end is fine
    assert check_min_updown([0] * 10 + [1, 1], hz)
    # so is the first run when it continues the pre-horizon state
    assert check_min_updown([1, 0, 0, 0, 0] + [0] * 7, hz, initial_state=1)
    assert not check_min_updown([1, 0, 0, 0, 0] + [0] * 7, hz, initial_state=0)


@pytest.mark.parametrize("pre_state", [0, 1])
def test_min_updown_exhaustive(pre_state):
    hz = HorizonConfig(10, 0.1, 4, pre_state)
    for bits in itertools.product((0, 1), repeat=10):
        assert check_min_updown(bits, hz) == literal_updown(bits, 4, pre_state), bits


@pytest.mark.parametrize("run_len", [1, 2, 3, 5])
def test_min_updown_other_lengths(run_len):
    hz = HorizonConfig(8, 0.1, run_len)
    for bits in itertools.product((0, 1), repeat=8):
        assert check_min_updown(bits, hz) == literal_updown(bits, run_len, 0)


def test_containers_validate():
    with pytest.raises(ValueError):
        HorizonConfig(0)
    with pytest.raises(ValueError):
        HorizonConfig(4, 0.1, 5)
    with pytest.raises(ValueError):
        HorizonConfig(4, -1.0, 1)
    with pytest.raises(ValueError):
        TariffSchedule([0.1, -0.2])
    with pytest.raises(ValueError):
        ComfortBand([76.0, float("nan")])
    with pytest.raises(ValueError):
        Schedule([0, 2, 1])
    s = Schedule([0, 1, 1])
    assert s.on_off.dtype == np.int8 and len(s) == 3
