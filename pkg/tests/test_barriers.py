import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy.optimize import brentq

from gammaconvex.barriers import (
    BarrierParams, EllipticCoefficients, away_from_kinks, barrier_gradients, barrier_hessian,
    choose_epsilon, default_constants, epsilon_condition, eval_barriers, hessian_fd_error,
    make_params, min_M, operator_bound, verify_barrier, worst_case_operator)
from gammaconvex.errors import DomainError, ValidationError
from gammaconvex.geometry import Modulus


def loose(delta=0.1, eps=0.5, M=24.0, g=0.0, n=2, lam=1.0):
    return BarrierParams(n, lam, M, delta, eps, g, strict=False)


# -- epsilon -------------------------------------------------------------------

def test_epsilon_for_M2_is_quadratic_root():
    assert choose_epsilon(2.0) == pytest.approx((-3 + math.sqrt(17)) / 2, abs=1e-12)


def test_epsilon_cap():
    assert choose_epsilon(1 + 1e-9) == 1.0


def test_epsilon_for_M17_matches_brentq():
    eps = choose_epsilon(17.0)
    assert 0.15 < eps < 0.20
    assert eps == pytest.approx(brentq(lambda e: epsilon_condition(e, 17.0), 0.15, 0.2, xtol=1e-15), abs=1e-12)


def test_epsilon_rejects_small_M():
    with pytest.raises(DomainError):
        choose_epsilon(1.0)


@settings(max_examples=50, deadline=None)
@given(M=st.floats(1.0001, 500.0))
def test_epsilon_feasible_and_maximal(M):
    eps = choose_epsilon(M)
    assert epsilon_condition(eps, M) >= 0
    if eps < 1.0:
        assert epsilon_condition(eps + 1e-9, M) < 0


# -- constants -----------------------------------------------------------------

def test_default_constants_n2_lam1():
    c = default_constants(2, 1.0)
    assert (c.M1, c.M) == (6.0, 24.0)
    assert c.delta1 == pytest.approx(1 / 12)
    assert c.delta == pytest.approx(1 / 144)
    assert c.C_small == pytest.approx(1 / 288)


def test_default_constants_other_cases():
    c = default_constants(2, 0.5)
    assert c.M1 == pytest.approx(10.0) and c.delta1 == pytest.approx(1 / 20)
    assert c.C_small == pytest.approx(1 / 800)
    assert default_constants(3, 1.0).M1 == pytest.approx(2 * math.sqrt(2) * (1 + 2 * math.sqrt(2)))


@pytest.mark.parametrize("n,lam", [(2, 1.0), (2, 0.5), (2, 0.25), (3, 1.0), (3, 0.25)])
def test_defaults_satisfy_parameter_invariants(n, lam):
    c = default_constants(n, lam)
    assert c.M >= min_M(n, lam)
    assert c.M * c.delta < 0.5
    make_params(n, lam).validate()


def test_invalid_params_are_rejected():
    with pytest.raises(ValidationError, match="lower bound"):
        BarrierParams(2, 1.0, 3.0, 0.01, 0.5)
    with pytest.raises(ValidationError, match="M\\*delta"):
        BarrierParams(2, 1.0, 24.0, 0.05, 0.2)


# -- values and derivatives ------------------------------------------------------

def test_barrier_values_at_top_center():
    psi, psit = eval_barriers(loose(), np.array([0.0, 0.1]))
    assert psi == pytest.approx(1.75, abs=1e-15)
    assert psit == pytest.approx(0.375, abs=1e-15)


def test_psi_vanishes_at_bottom_center():
    p = loose(g=0.02)
    psi, _ = eval_barriers(p, np.array([0.0, -0.02]))
    assert psi == 0.0


def test_lateral_terms_inactive_inside_delta():
    p = loose()
    a = eval_barriers(p, np.array([0.09, 0.05]))
    b = eval_barriers(p, np.array([0.0, 0.05]))
    assert a == b
    H, Ht = barrier_hessian(p, np.array([0.05, 0.03]))
    assert np.allclose(H, np.diag([0.0, -1 / (2 * 0.01)]))
    assert np.allclose(Ht, np.diag([0.0, 1 / (4 * 0.01)]))


def test_hessian_lateral_entry():
    H, _ = barrier_hessian(loose(), np.array([0.2, 0.0]))
    assert H[0, 0] == pytest.approx(46.875, rel=1e-14)
    assert H[0, 1] == 0.0


def test_gradient_matches_values():
    p = loose(delta=0.01, eps=0.3)
    rng = np.random.default_rng(3)
    pts = np.column_stack([rng.uniform(-0.2, 0.2, 50), rng.uniform(-0.005, 0.01, 50)])
    h = 1e-7
    g, gt = barrier_gradients(p, pts)
    for j in range(2):
        e = np.zeros(2)
        e[j] = h
        fp, ftp = eval_barriers(p, pts + e)
        fm, ftm = eval_barriers(p, pts - e)
        assert np.allclose((fp - fm) / (2 * h), g[:, j], rtol=1e-6, atol=1e-6 * np.abs(g).max())
        assert np.allclose((ftp - ftm) / (2 * h), gt[:, j], rtol=1e-6, atol=1e-6 * np.abs(gt).max())


@pytest.mark.parametrize("n,lam", [(2, 1.0), (2, 0.25), (3, 0.5)])
def test_hessian_finite_differences(n, lam):
    p = make_params(n, lam)
    rng = np.random.default_rng(11)
    Md = p.M * p.delta
    pts = np.column_stack([rng.uniform(-Md, Md, (400, n - 1)), rng.uniform(0, p.delta, 400)])
    pts = pts[away_from_kinks(p, pts)][:100]
    assert pts.shape[0] == 100
    assert hessian_fd_error(p, pts, h=1e-5) < 1e-6


# -- operator bounds -----------------------------------------------------------

def test_worst_case_closes_at_zero():
    p = make_params(2, 1.0)
    lo, hi = operator_bound(p)
    scale = 1 / p.delta ** 2
    assert lo >= -1e-10 * scale
    assert abs(lo) <= 1e-10 * scale
    assert hi <= 1e-10 * scale


def test_worst_case_operator_agrees_with_closed_form_at_lateral_face():
    p = make_params(2, 1.0)
    x = np.array([p.M * p.delta, 0.0])
    lo, hi = worst_case_operator(p, x)
    blo, bhi = operator_bound(p)
    assert lo == pytest.approx(blo, abs=1e-9 / p.delta ** 2)
    assert hi == pytest.approx(bhi, abs=1e-9 / p.delta ** 2)


def test_identity_operator_in_flat_zone():
    p = make_params(2, 1.0)
    H, _ = barrier_hessian(p, np.array([0.0, 0.5 * p.delta]))
    assert -np.trace(H) == 1 / (2 * p.delta ** 2)


def test_explicit_anisotropic_coefficients():
    p = make_params(2, 0.5)
    coeffs = EllipticCoefficients.constant(np.diag([2.0, 1.0]), 0.5)
    lo, hi = operator_bound(p, coeffs, grid=50)
    assert lo >= 0
    assert hi <= 0
    # independent grid evaluation
    x1 = np.linspace(-p.M * p.delta, p.M * p.delta, 50)
    xn = np.linspace(0, p.delta, 50)
    X, Y = np.meshgrid(x1, xn, indexing="ij")
    H, Ht = barrier_hessian(p, np.stack([X, Y], -1))
    assert lo == pytest.approx((-(2 * H[..., 0, 0] + H[..., 1, 1])).min())


def test_non_elliptic_coefficients_rejected():
    coeffs = EllipticCoefficients.constant(np.diag([3.0, 1.0]), 0.5)
    with pytest.raises(ValidationError):
        operator_bound(make_params(2, 0.5), coeffs)


# -- certification ------------------------------------------------------------------

def test_default_certification_passes():
    rep = verify_barrier(make_params(2, 1.0), Modulus.zero())
    assert len(rep.properties) == 10
    assert rep.passed
    assert rep["psi.3.two"].passed


def test_lateral_face_lower_bound():
    p = make_params(2, 1.0)
    rep = verify_barrier(p, Modulus.zero())
    # Psi >= lam^2/(8(n-1)) (M/sqrt(n-1) - 1)^(2+eps) on |x'| = M delta, x_n >= -g
    floor = p.lateral_coef * (p.M - 1) ** (2 + p.epsilon)
    assert floor >= 2
    assert rep["psi.3"].min_slack + 1 >= floor - 1e-9


def test_certification_with_nonzero_modulus():
    gamma = Modulus.power(0.1, 3.0)  # gamma(2 M delta) = 0.1/27 < delta
    p = make_params(2, 1.0, gamma=gamma)
    assert p.g == pytest.approx(gamma(2 * p.M * p.delta))
    assert verify_barrier(p, gamma).passed


def test_certification_rejects_inconsistent_g():
    p = make_params(2, 1.0)
    with pytest.raises(ValidationError):
        verify_barrier(p, Modulus.power(1.0, 2.0))


def test_broken_params_fail_lateral_property():
    rep = verify_barrier(BarrierParams(2, 1.0, 3.0, 0.05, 0.5, strict=False), Modulus.zero())
    assert not rep.passed
    assert rep["psi.3"].min_slack < 0


def test_budget_floor():
    with pytest.raises(DomainError):
        verify_barrier(make_params(2, 1.0), Modulus.zero(), sample_budget=100)


def test_certification_is_deterministic():
    a = verify_barrier(make_params(3, 0.5), Modulus.zero(), seed=4)
    b = verify_barrier(make_params(3, 0.5), Modulus.zero(), seed=4)
    assert list(a.rows()) == list(b.rows())


def test_comparison_ordering_on_slab():
    p = make_params(2, 1.0, gamma=Modulus.power(0.1, 3.0))
    rng = np.random.default_rng(0)
    x1 = rng.uniform(-p.delta, p.delta, 2000)
    xn = rng.uniform(-p.g, p.delta, 2000)
    psi, psit = eval_barriers(p, np.column_stack([x1, xn]))
    assert np.all(psit <= (xn + p.g) / p.delta + 1e-15)
    assert np.all(psi <= 2 * (xn + p.g) / p.delta + 1e-15)
