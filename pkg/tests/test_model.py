import math

import pytest
from hypothesis import assume, given
from hypothesis import strategies as st

from harvestsim import model
from harvestsim.model import (
    Constant,
    DomainError,
    ModelParams,
    Proportional,
    ProportionalThreshold,
    RestrictedProportional,
    SingularityError,
)
from oracles import capped_roots, threshold_root

unit = st.floats(0.0, 1.0)
pos = st.floats(0.05, 2.0)


# effort

def test_effort_zero_growth_is_alpha():
    p = ModelParams(r=0.5, K=1, q=1, alpha=1, beta=1)
    assert model.effort(p, 0.5, 0.0) == 1.0


def test_effort_hand_value():
    p = ModelParams(r=0.5, K=1, q=1, alpha=1, beta=1)
    assert model.effort(p, 0.2, 0.02) == pytest.approx(0.9, abs=1e-15)


def test_effort_beta_zero_is_constant():
    p = ModelParams(r=0.5, K=1, q=1, alpha=1, beta=0)
    assert model.effort(p, 0.3, -0.1) == 1.0


def test_effort_undefined_at_zero():
    with pytest.raises(DomainError):
        model.effort(ModelParams(r=0.5, K=1, q=1), 0.0, 0.0)


def test_effort_negative_reported_as_is():
    p = ModelParams(r=0.5, K=1, q=1, alpha=0.1, beta=2)
    assert model.effort(p, 0.1, 0.1) == pytest.approx(-1.9)


def test_time_dependent_coefficients():
    p = ModelParams(r=0.5, K=1, q=1, alpha=lambda t: 1 + t, beta=lambda t: 2 * t)
    assert model.effort(p, 0.5, 0.1, t=1.0) == pytest.approx(2 - 2 * 0.1 / 0.5)


@pytest.mark.parametrize("kw", [dict(r=-1, K=1, q=1), dict(r=1, K=0, q=1), dict(r=1, K=1, q=-0.1),
                                dict(r=1, K=1, q=1, alpha=-1), dict(r=1, K=1, q=1, beta=-1)])
def test_params_reject_invalid(kw):
    with pytest.raises(ValueError):
        ModelParams(**kw)


@pytest.mark.parametrize("lam", [-0.1, 1.5])
def test_lambda_range(lam):
    with pytest.raises(ValueError):
        Proportional(lam)


# right-hand sides

@pytest.mark.parametrize("N, expected", [(0.0, 0.0), (1.0, 0.0), (0.5, 0.125)])
def test_rhs_unharvested(N, expected):
    assert model.rhs_unharvested(ModelParams(r=0.5, K=1, q=1), N) == expected


@pytest.mark.parametrize("E, expected", [(0.0, 0.125), (0.125, 0.0), (0.2, -0.075)])
def test_rhs_constant(E, expected):
    assert model.rhs_constant(ModelParams(r=0.5, K=1, q=1), 0.5, E) == pytest.approx(expected, abs=1e-15)


def test_rhs_proportional_equilibrium(fig1_params):
    assert model.rhs_proportional(fig1_params, 0.2, 0.5) == pytest.approx(0.0, abs=1e-15)


def test_rhs_proportional_hand_value(fig1_params):
    assert model.rhs_proportional(fig1_params, 0.5, 0.5) == pytest.approx((0.5 * 0.25 - 0.4 * 0.5) / 0.6, abs=1e-15)
    assert model.rhs_proportional(fig1_params, 0.5, 0.5) == pytest.approx(-0.125, abs=1e-15)


def test_rhs_proportional_no_harvest(fig1_params):
    assert model.rhs_proportional(fig1_params, 0.5, 0.0) == model.rhs_unharvested(fig1_params, 0.5)


def test_rhs_proportional_singular():
    p = ModelParams(r=0.5, K=1, q=1, alpha=1, beta=2)
    with pytest.raises(SingularityError):
        model.rhs_proportional(p, 0.5, 0.5)


def test_rhs_threshold_at_threshold(fig1_params):
    assert model.rhs_threshold(fig1_params, 0.2, 0.5, 0.2) == model.rhs_unharvested(fig1_params, 0.2)


def test_rhs_threshold_root(fig1_params):
    root = threshold_root(0.5, 1.0, 0.4, 0.2)
    assert root == pytest.approx(0.1 + math.sqrt(0.17), abs=1e-12)
    assert root == pytest.approx(0.51231, abs=1e-5)
    assert abs(model.rhs_threshold(fig1_params, root, 0.5, 0.2)) < 1e-12


def test_rhs_threshold_below(fig1_params):
    assert model.rhs_threshold(fig1_params, 0.1, 0.5, 0.2) == pytest.approx(0.045, abs=1e-15)


def test_rhs_threshold_singular():
    p = ModelParams(r=0.5, K=1, q=1, alpha=1, beta=4)
    # 1 - lam q beta (1 - N_thre/N) = 0 at N = 2 N_thre when lam q beta = 2
    with pytest.raises(SingularityError):
        model.rhs_threshold(p, 0.4, 0.5, 0.2)


def test_rhs_restricted_large_cap_is_proportional(fig1_params):
    for N in (0.1, 0.5, 0.9):
        v, regime = model.rhs_restricted(fig1_params, N, 0.5, 1e9)
        assert regime == "uncapped"
        assert v == model.rhs_proportional(fig1_params, N, 0.5)


def test_rhs_restricted_zero_cap():
    p = ModelParams(r=0.5, K=1, q=1, alpha=1, beta=0.5)
    assert model.rhs_restricted(p, 0.5, 1.0, 0.0) == (0.125, "capped")


def test_capped_equilibria_match_root_finder():
    lo, hi = capped_roots(0.5, 1.0, 0.1)
    assert lo == pytest.approx(0.27639, abs=1e-5)
    assert hi == pytest.approx(0.72361, abs=1e-5)
    p = ModelParams(r=0.5, K=1, q=1, alpha=1, beta=0.5)
    for N in (lo, hi):
        v, regime = model.rhs_restricted(p, N, 1.0, 0.1)
        assert regime == "capped" and abs(v) < 1e-12


# yield

def test_yield_at_proportional_equilibrium(fig1_params):
    assert model.harvest_yield(fig1_params, 0.2, 0.0, 0.5) == pytest.approx(0.08, abs=1e-15)


def test_yield_without_harvest(fig1_params):
    assert model.harvest_yield(fig1_params, 0.5, 0.1, 0.0) == 0.0


def test_yield_below_threshold(fig1_params):
    assert model.harvest_yield(fig1_params, 0.15, 0.0, 0.5, N_thre=0.2) == 0.0


def test_yield_zero_stock(fig1_params):
    assert model.harvest_yield(fig1_params, 0.0, 0.0, 0.5) == 0.0


# invariants

params_st = st.builds(ModelParams, r=pos, K=pos, q=unit, alpha=st.floats(0, 2), beta=st.floats(0, 2))


@given(params_st, unit, st.floats(0.0, 1.0))
def test_equilibrium_consistency_proportional(p, lam, _):
    assume(abs(1 - lam * p.q * p.beta) > 1e-3 and lam * p.q * p.alpha < p.r)
    Ns = (1 - lam * p.q * p.alpha / p.r) * p.K
    assert abs(model.rhs_proportional(p, Ns, lam)) < 1e-12 * max(1.0, p.r * p.K)


@given(params_st, unit, st.floats(0.0, 1.0))
def test_equilibrium_consistency_threshold(p, lam, frac):
    N_thre = frac * p.K
    lqa = lam * p.q * p.alpha
    assume(p.r > 0)
    # root of the harvested branch strictly above the threshold
    b = lqa - p.r
    disc = b * b + 4 * (p.r / p.K) * lqa * N_thre
    Ns = (-b + math.sqrt(disc)) / (2 * p.r / p.K)
    assume(Ns > N_thre * (1 + 1e-9))
    denom = 1 - lam * p.q * p.beta * (1 - N_thre / Ns)
    assume(abs(denom) > 1e-3)
    assert abs(model.rhs_threshold(p, Ns, lam, N_thre)) < 1e-12 * max(1.0, p.r * p.K) / abs(denom)


@given(params_st, unit, st.floats(0, 1))
def test_zero_is_fixed_point(p, lam, frac):
    assume(abs(1 - lam * p.q * p.beta) > 1e-3)
    assert model.rhs_proportional(p, 0.0, lam) == 0.0
    assert model.rhs_threshold(p, 0.0, lam, frac * p.K) == 0.0
    assert model.rhs_restricted(p, 0.0, lam, 0.1)[0] == 0.0


@given(params_st, st.floats(0.001, 1))
def test_constant_harvest_removes_at_zero(p, E):
    v = model.rhs_constant(p, 0.0, E)
    assert v == -p.q * E
    if p.q * E > 0:  # not lost to underflow
        assert v < 0


@given(params_st, unit, st.floats(0.0, 1.0))
def test_threshold_branch_continuity(p, lam, frac):
    N_thre = frac * p.K
    assume(N_thre > 0)
    below = model.rhs_threshold(p, N_thre, lam, N_thre)
    above = model.rhs_threshold(p, N_thre, lam, N_thre, harvest_below=True)
    assert below == above
    # the harvested branch approaches the same value from above
    eps = 1e-9 * p.K
    assume(abs(1 - lam * p.q * p.beta * (1 - N_thre / (N_thre + eps))) > 1e-3)
    assert model.rhs_threshold(p, N_thre + eps, lam, N_thre) == pytest.approx(below, abs=1e-7 * max(1, p.r * p.K + lam * p.q * p.alpha))


@given(st.floats(0.05, 2), st.floats(0.1, 2), st.floats(0, 1), st.floats(0, 1), st.floats(0, 2), st.floats(0, 3))
def test_beta_does_not_move_the_equilibrium(r, K, lam, q, alpha, beta):
    assume(lam * q * beta < 1 - 1e-3 and lam * q * alpha < r)
    p = ModelParams(r=r, K=K, q=q, alpha=alpha, beta=beta)
    p0 = ModelParams(r=r, K=K, q=q, alpha=alpha, beta=0.0)
    Ns = (1 - lam * q * alpha / r) * K
    for pp in (p, p0):
        assert abs(model.rhs_proportional(pp, Ns, lam)) < 1e-12 * max(1, r * K) / (1 - lam * q * beta)


@given(st.floats(0.05, 2), st.floats(0.1, 2), st.floats(0.01, 1), st.floats(0.01, 1), st.floats(0, 2),
       st.floats(0, 3), st.floats(0.001, 0.999))
def test_sign_structure(r, K, lam, q, alpha, beta, frac):
    lqa = lam * q * alpha
    assume(lam * q * beta < 1 - 1e-3 and lqa < r * 0.999)
    p = ModelParams(r=r, K=K, q=q, alpha=alpha, beta=beta)
    Ns = (1 - lqa / r) * K
    assert model.rhs_proportional(p, frac * Ns, lam) > 0
    assert model.rhs_proportional(p, Ns + frac * K, lam) < 0


@given(params_st, unit, st.floats(0.01, 2), st.floats(-1, 1), st.one_of(st.none(), st.floats(0, 1)))
def test_yield_matches_effort(p, lam, N, dNdt, N_thre):
    Y = model.harvest_yield(p, N, dNdt, lam, N_thre=N_thre)
    E = model.effort(p, N, dNdt)
    if N_thre is None:
        factor = lam
    else:
        factor = lam * (N - N_thre) if N > N_thre else 0.0
    assert Y == pytest.approx(factor * p.q * N * E, rel=1e-12, abs=1e-15)


@given(st.floats(0.05, 2), st.floats(0.1, 2), st.floats(0.01, 1), st.floats(0.01, 1), st.floats(0, 2),
       st.floats(0, 3), st.floats(0, 0.5), st.floats(0.01, 2))
def test_restricted_regimes_agree_on_switching_surface(r, K, lam, q, alpha, beta, Yfrac, N):
    # on Y = Y_limit the capped and uncapped right-hand sides coincide
    assume(abs(1 - lam * q * beta) > 1e-2)
    p = ModelParams(r=r, K=K, q=q, alpha=alpha, beta=beta)
    Y = model.proportional_yield(p, N, lam)
    assume(Y >= 0)
    uncapped = model.rhs_proportional(p, N, lam)
    capped = r * N * (1 - N / K) - Y
    assert capped == pytest.approx(uncapped, rel=1e-9, abs=1e-12)


def test_strategy_rhs_dispatch(fig1_params):
    assert model.strategy_rhs(fig1_params, Proportional(0.5), 0.2) == pytest.approx(0, abs=1e-15)
    assert model.strategy_rhs(fig1_params, Constant(0.0), 0.5) == 0.125
    assert model.strategy_rhs(fig1_params, ProportionalThreshold(0.5, 0.2), 0.1) == pytest.approx(0.045)
    assert model.strategy_rhs(fig1_params, RestrictedProportional(0.5, 1e9), 0.2) == pytest.approx(0, abs=1e-15)
