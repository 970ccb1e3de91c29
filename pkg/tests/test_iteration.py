import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy import integrate

from gammaconvex.barriers import default_constants
from gammaconvex.errors import DomainError, IterationDivergence, ValidationError
from gammaconvex.geometry import Modulus
from gammaconvex.iteration import (
    BRANCH_A, BRANCH_B, AdversarialOracle, CornerState, FixedOracle, FlatState, IterationInputs,
    Profile, RandomOracle, check_claims, corner_bound, corner_run, corner_step, fit_corner_constant,
    fit_gap_constant, flat_run, flat_step, gap_bound, gap_bounds, gap_dominated, scaled_log_integral,
    sequence_table, sum_bound_check)

CS = default_constants(2, 1.0).C_small
DELTA = default_constants(2, 1.0).delta


def dini_inputs(c=1.0, beta=1.0, f_share=0.1, **over):
    return IterationInputs.defaults(sigma=Profile.power(c * CS, beta), f=Profile.power(f_share * c * CS, beta),
                                    **over)


# -- profiles and integrals --------------------------------------------------

def test_profile_validation():
    with pytest.raises(ValidationError):
        IterationInputs.defaults(sigma=Profile(lambda r: -np.asarray(r)))
    with pytest.raises(ValidationError):
        IterationInputs.defaults(f=Profile.constant(2.0))
    with pytest.raises(ValidationError):
        IterationInputs.defaults(mu=1.0)


def test_step_profile_matches_density():
    p = Profile.from_steps(lambda m: 0.5 ** m, 0.25)
    assert p.steps(3, 0.25) == 0.125
    assert p(0.25 ** 3) == pytest.approx(0.125)
    assert p(0.5 * 0.25 ** 3) == pytest.approx(0.125)


def test_scaled_log_integral_matches_quad():
    # e^{-a S} int_0^S p(e^-s) e^{a s} ds with p(r) = r^0.3
    fn = lambda r: np.asarray(r) ** 0.3
    S, a = 7.0, 0.4
    ref, _ = integrate.quad(lambda s: math.exp(-0.3 * s + a * (s - S)), 0, S, epsabs=1e-14)
    assert scaled_log_integral(fn, 0.0, S, a, None) == pytest.approx(ref, rel=1e-12)


# -- corner recurrence ---------------------------------------------------------

def test_corner_first_step_from_initial_data():
    inp = IterationInputs.defaults()
    s1 = corner_step(CornerState.initial(inp.delta), inp)
    assert (s1.K, s1.B) == (12.0, 0.0)


def test_corner_zero_profiles_closed_form():
    inp = IterationInputs.defaults()
    states = corner_run(inp, 50)
    for s in states[1:]:
        assert s.K == pytest.approx(inp.mu ** s.m * inp.M, rel=1e-14)
        assert s.B == 0.0


def test_constant_sigma_trips_overflow_guard():
    # sigma = 0.01 is far above C_small: K + B/delta^m multiplies by ~70 per step
    inp = IterationInputs.defaults(sigma=Profile.constant(0.01))
    with pytest.raises(IterationDivergence):
        corner_run(inp, 50)


def test_corner_bound_zero_profiles():
    inp = IterationInputs(0.25, 0.5, 24.0, 4.0, 49.0, Profile.zero(), Profile.zero())
    assert inp.alpha == pytest.approx(0.5)
    assert corner_bound(0.01, inp, C=1.0, Lambda=16.0) == pytest.approx(0.001, rel=1e-14)


@pytest.mark.parametrize("beta", [0.75, 1.0, 2.0])
def test_corner_bound_power_sigma_closed_form(beta):
    inp = IterationInputs(0.25, 0.5, 24.0, 4.0, 49.0, Profile.zero(), Profile.power(1.0, beta))
    a, r, Lam = 0.5, 0.01, 16.0
    expect = r * (r ** a * (1 + (1 - r ** (beta - a)) / (beta - a)) + (Lam * r) ** beta)
    assert corner_bound(r, inp, 1.0, Lam) == pytest.approx(expect, rel=1e-10)


def test_corner_bound_range():
    inp = IterationInputs.defaults()
    with pytest.raises(DomainError):
        corner_bound(0.5, inp)


def test_corner_scale_consistency():
    inp = dini_inputs(beta=0.8)
    states = corner_run(inp, 12)
    s1 = states[1]
    shifted = corner_run(inp.shifted(1), 11, start=CornerState(s1.K, s1.beta, 0, inp.delta))
    for a, b in zip(states[1:], shifted):
        assert b.K == pytest.approx(a.K, rel=1e-12)
        assert b.beta == pytest.approx(a.beta, rel=1e-12)


def test_corner_bound_dominates_random_dini_profiles():
    rng = np.random.default_rng(20)
    for _ in range(20):
        beta = rng.uniform(0.3, 2.0)
        inp = dini_inputs(c=rng.uniform(0.05, 1.0), beta=beta, f_share=rng.uniform(0.0, 1.0))
        states = corner_run(inp, 50)
        C, ratios = fit_corner_constant(states[:31], inp)
        assert np.all(np.isfinite(ratios))
        # fitted on m <= 30, checked on every m up to 50
        for s in states[2:]:
            r = inp.delta ** s.m
            assert s.K * r + s.B <= corner_bound(r, inp, C) * (1 + 1e-6)


def test_sum_bound_linear_profile_is_exact():
    out = sum_bound_check(Profile.power(1.0, 1.0), 0.25, 60)
    assert out.partial_sum == pytest.approx(1 / 0.75, rel=1e-14)
    assert out.stated_bound == pytest.approx(out.partial_sum, rel=1e-10)


def test_sum_bound_zero_tail():
    p = Profile.from_steps(lambda m: 1.0 if m == 0 else 0.0, 0.25)
    out = sum_bound_check(p, 0.25, 20)
    assert out.partial_sum == 1.0 and out.stated_bound_holds and out.valid_bound_holds


@pytest.mark.parametrize("delta,expect_sum", [(0.25, 2.0), (1 / 144, 12 / 11)])
def test_sum_bound_sqrt_profile(delta, expect_sum):
    out = sum_bound_check(Profile.power(1.0, 0.5), delta, 80)
    assert out.partial_sum == pytest.approx(expect_sum, rel=1e-12)
    # int_0^1 r^{-1/2} dr = 2
    assert out.valid_bound == pytest.approx(1 + 2 / math.log(1 / delta), rel=1e-10)
    assert out.valid_bound_holds
    assert not out.stated_bound_holds


# -- flat recurrence -----------------------------------------------------------------

def test_flat_first_step():
    inp = IterationInputs.defaults()
    s1 = flat_step(FlatState.initial(inp.delta), BRANCH_A, inp)
    assert (s1.k, s1.K, s1.b, s1.B) == (0.0, inp.M, 0.0, 0.0)


def test_flat_clamp():
    inp = IterationInputs.defaults()
    s = FlatState(0.1, 1.0, 1.0, 0.0, 3, inp.delta)
    for br in (BRANCH_A, BRANCH_B):
        assert flat_step(s, br, inp).k == 0.0


def test_flat_unknown_branch():
    inp = IterationInputs.defaults()
    with pytest.raises(DomainError):
        flat_step(FlatState.initial(inp.delta), "C", inp)


state_st = st.tuples(st.floats(0, 10), st.floats(0, 10), st.floats(0, 1e-3), st.floats(0, 1e-3),
                     st.integers(0, 30), st.sampled_from([BRANCH_A, BRANCH_B]))


@settings(max_examples=1000, deadline=None)
@given(state_st)
def test_gap_identity_when_clamps_inactive(data):
    k, extra, bb, BB, m, br = data
    inp = dini_inputs()
    s = FlatState(k, k + extra, bb, BB, m, inp.delta)
    s1 = flat_step(s, br, inp)
    lowered = k - inp.M * bb + (inp.mu * extra if br == BRANCH_A else 0.0)
    if lowered > 0:
        expect = (1 - inp.mu) * extra + inp.M * (bb + BB)
        assert s1.gap == pytest.approx(expect, rel=1e-12, abs=1e-12)


@settings(max_examples=300, deadline=None)
@given(state_st)
def test_order_preservation(data):
    k, extra, bb, BB, m, br = data
    inp = dini_inputs(beta=0.5)
    s1 = flat_step(FlatState(k, k + extra, bb, BB, m, inp.delta), br, inp)
    assert s1.K >= s1.k >= 0
    assert s1.beta_b >= 0 and s1.beta_B >= 0


def test_flat_zero_profiles():
    inp = IterationInputs.defaults()
    run = flat_run(inp, RandomOracle(1), 100)
    for s in run.states[1:]:
        assert s.b == 0.0 and s.B == 0.0
        assert s.gap <= (1 - inp.mu) ** (s.m - 1) * inp.M * (1 + 1e-14)
    # exact contraction once the clamp is inactive
    g = run.gaps[1:30]
    assert np.allclose(g[1:] / g[:-1], 1 - inp.mu, rtol=1e-12)
    assert run.limit is not None


def test_flat_run_needs_50_steps():
    with pytest.raises(DomainError):
        flat_run(IterationInputs.defaults(), RandomOracle(0), 10)


def test_inverse_square_steps_overflow_with_default_constants():
    prof = Profile.from_steps(lambda m: (m + 1.0) ** -2, DELTA)
    inp = IterationInputs.defaults(sigma=prof, D=prof)
    with pytest.raises(IterationDivergence):
        flat_run(inp, RandomOracle(0), 200)


@pytest.mark.parametrize("beta", [0.5, 1.0, 1.5])
def test_claims_over_oracles(beta):
    inp = dini_inputs(beta=beta)
    oracles = [RandomOracle(s) for s in range(10)] + [AdversarialOracle(), FixedOracle("AB")]
    limits = []
    for o in oracles:
        run = flat_run(inp, o, 200)
        rep = check_claims(run, tol=1e-6)
        assert rep.all_hold, rep
        limits.append(run.limit)
    assert all(l is not None and l > 0 for l in limits)


def test_adversarial_oracle_picks_larger_gap():
    inp = dini_inputs(beta=0.5)
    s = FlatState(1.0, 3.0, 1e-4, 1e-4, 2, inp.delta)
    br = AdversarialOracle()(2, s, inp)
    other = BRANCH_B if br == BRANCH_A else BRANCH_A
    assert flat_step(s, br, inp).gap >= flat_step(s, other, inp).gap


def test_gap_bound_zero_profiles():
    inp = IterationInputs.defaults()
    a = inp.alpha_flat
    for m in (0, 3, 10):
        assert gap_bound(inp, m, 2.0) == pytest.approx(2.0 * inp.delta ** (m * a), rel=1e-14)


def test_gap_bound_linear_sigma_closed_form():
    inp = IterationInputs.defaults(sigma=Profile.power(CS, 1.0), D=Profile.zero())
    a = inp.alpha_flat
    for m in (1, 4, 9):
        r = inp.delta ** m
        expect = r ** a * (1 + CS * (1 - r ** (1 - a)) / (1 - a))
        assert gap_bound(inp, m) == pytest.approx(expect, rel=1e-10)
    assert gap_bounds(inp, 9)[9] == pytest.approx(gap_bound(inp, 9), rel=1e-12)


def test_gap_bound_dominates_random_profiles():
    rng = np.random.default_rng(7)
    for i in range(10):
        inp = dini_inputs(c=rng.uniform(0.05, 1.0), beta=rng.uniform(0.4, 2.0), f_share=rng.uniform(0, 1))
        for oracle in (RandomOracle(i), AdversarialOracle()):
            run = flat_run(inp, oracle, 200)
            C6, ratios = fit_gap_constant(run, inp)
            assert np.isfinite(C6) and C6 > 0
            assert gap_dominated(run, inp, C6)


def test_sequence_table_columns():
    inp = dini_inputs()
    run = flat_run(inp, RandomOracle(0), 60)
    rows = sequence_table(run.states, inp)
    assert len(rows) == 61 and len(rows[0]) == 7
    crow = sequence_table(corner_run(inp, 3), inp)
    assert crow[1][1] == 0.0
