import math
from dataclasses import fields

import numpy as np
import pytest

from harvestsim.integrator import IntegrationConfig
from harvestsim.model import ModelParams, Proportional, ProportionalThreshold, Rotational, Seasonal
from harvestsim.scenarios import (
    DATA_SETS,
    apply_overrides,
    find_by_tag,
    get_scenario,
    registry,
    run_scenario,
)

EXPECTED_NAMES = {
    "fig1_proportional", "fig3_yield", "fig4_beta", "fig5_restricted", "fig6_threshold", "fig7_threshold_beta",
    "fig8_seasonal_pulse", "fig9_pulse_data1", "fig10_pulse_data2", "fig11_pulse_data3", "fig12_pulse_data3_long",
    "fig13_square_data1", "fig14_sinusoid_data1", "fig15_sinusoid_data2", "fig16_sinusoid_data3",
    "fig17_beta_seasonal_data1", "fig18_beta_seasonal_data3", "fig19_rotational_short", "fig20_rotational",
    "data1_sweep", "data2_sweep", "data3_sweep",
}


def test_registry_contents():
    names = [s.name for s in registry()]
    assert len(names) == len(set(names))
    assert EXPECTED_NAMES <= set(names)


def test_fig1_lookup():
    s = get_scenario("fig1_proportional")
    assert s.params == ModelParams(r=0.5, K=1.0, q=0.8, alpha=1.0, beta=1.0)
    assert s.strategy == Proportional(0.5)
    assert s.strategy.lam * s.params.q * s.params.alpha == pytest.approx(0.4)


def test_fig7_lookup():
    s = get_scenario("fig7_threshold_beta")
    assert (s.params.r, s.params.q, s.params.K) == (0.1, 0.4, 0.5)
    assert s.strategy == ProportionalThreshold(0.5, 0.3)


def test_data3_sweep_lookup():
    s = get_scenario("data3_sweep")
    assert [m["alpha"] for m in s.sweep] == [0.04, 0.18, 0.49, 0.61, 0.72, 1.0]
    assert s.params.r == 0.3 and s.params.q == 1.0 and s.params.K == 1.0
    assert s.metadata["E_msy"] == 0.25


def test_data_sets_default_to_unit_beta_and_capacity():
    for s in registry():
        if "data_set" in s.metadata:
            assert s.params.K == 1.0 and s.params.q == 1.0
            if s.figure_tag not in ("fig17", "fig18"):
                assert s.params.beta == 1.0


def test_beta_studies_sweep_multiples_of_alpha():
    for name in ("fig17_beta_seasonal_data1", "fig18_beta_seasonal_data3"):
        s = get_scenario(name)
        assert [m["beta"] / s.params.alpha for m in s.sweep] == pytest.approx([0.25, 0.5, 1.0, 2.0])


def test_rotational_scenarios_gate_one_in_three():
    for name in ("fig19_rotational_short", "fig20_rotational"):
        s = get_scenario(name)
        assert isinstance(s.strategy, Rotational)
        assert (s.strategy.open_years, s.strategy.closed_years) == (1, 2)
        assert s.params.alpha == 1.0


def test_overrides_reference_existing_fields():
    for s in registry():
        names = {f.name for f in fields(s.params)} | {f.name for f in fields(s.strategy)} | {"N0"}
        for m in s.sweep:
            assert set(m) <= names, (s.name, m)


def test_apply_overrides():
    s = get_scenario("fig1_proportional")
    p, st, N0 = apply_overrides(s.params, s.strategy, s.N0, {"beta": 0.5, "lam": 0.25, "N0": 0.9})
    assert (p.beta, st.lam, N0) == (0.5, 0.25, 0.9)
    with pytest.raises(KeyError):
        apply_overrides(s.params, s.strategy, s.N0, {"nope": 1})


def test_lookup_errors():
    with pytest.raises(KeyError):
        get_scenario("nope")
    with pytest.raises(KeyError):
        find_by_tag("fig99")
    assert find_by_tag("fig1").name == "fig1_proportional"


def test_run_fig1():
    res = run_scenario("fig1_proportional")
    assert res.passed
    assert abs(res.report["runs"][0]["final_N"] - 0.2) < 1e-6


def test_run_fig20_period_three():
    res = run_scenario("fig20_rotational")
    assert res.passed, res.messages
    run = res.report["runs"][0]
    assert run["period"] == 3.0 and run["attractor_min_N"] > 0


def test_run_fig5_basins():
    res = run_scenario("fig5_restricted")
    assert res.passed, res.messages
    (_, low), (_, high) = res.runs
    assert low.extinct and abs(high.N[-1] - 0.5 * (1 + math.sqrt(0.2))) < 1e-5


def test_failing_predicate_is_reported():
    s = get_scenario("fig1_proportional")
    res = run_scenario(s, IntegrationConfig(dt=0.01, t_end=5))
    assert not res.passed
    assert any(m.startswith("FAIL") for m in res.messages)


def test_sweep_replacement():
    res = run_scenario("fig1_proportional", IntegrationConfig(dt=0.01, t_end=200), sweep=[{"N0": 0.05}, {"N0": 0.9}])
    assert len(res.runs) == 2 and res.passed


def test_runs_are_bit_identical():
    a = run_scenario("fig19_rotational_short")
    b = run_scenario("fig19_rotational_short")
    for (_, ta), (_, tb) in zip(a.runs, b.runs):
        assert np.array_equal(ta.N, tb.N) and np.array_equal(ta.t, tb.t) and ta.events == tb.events


@pytest.mark.slow
@pytest.mark.parametrize("name", sorted(s.name for s in registry()))
def test_every_scenario_runs(name):
    # completes (or ends in a flagged extinction) without numerical failure, and its own predicate holds
    res = run_scenario(name)
    for _, traj in res.runs:
        assert not traj.truncated
        assert traj.extinct or traj.t[-1] == res.report["t_end"]
    assert res.passed, res.messages


def test_data_set_table():
    assert DATA_SETS["data1"]["alpha_q"] == (0.24, 0.36, 0.42, 1.00)
    assert DATA_SETS["data2"]["alpha_q"] == (0.57, 1.58, 1.70, 1.81)
    assert all(d["r"] == 0.3 for d in DATA_SETS.values())


def test_seasonal_scenarios_use_summer_pulse():
    s = get_scenario("fig9_pulse_data1")
    assert isinstance(s.strategy, Seasonal)
    assert (s.strategy.schedule.t_start, s.strategy.schedule.H) == (0.25, 0.25)
