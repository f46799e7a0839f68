import json
import math

import mpmath as mp
import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from tdmass import profiles as pr

mp.mp.dps = 40


def fd2(f, t, h=1e-3):
    return (-f(t + 2 * h) + 16 * f(t + h) - 30 * f(t) + 16 * f(t - h) - f(t - 2 * h)) / (12 * h * h)


def fd1(f, t, h=1e-4):
    return (-f(t + 2 * h) + 8 * f(t + h) - 8 * f(t - h) + f(t - 2 * h)) / (12 * h)


# oracle: high-precision evaluation of the closed forms
def mp_rho_hyperbolic(beta, tau):
    b, t = mp.mpf(beta), mp.mpf(tau)
    return mp.tanh(b * t) * mp.sqrt(1 + (b * t - mp.coth(b * t)) ** 2 / b**2)


def mp_rho_quadratic(gamma, tau):
    x = mp.mpf(gamma) + 2 * mp.mpf(tau)
    return mp.sqrt(x * (1 + mp.log(x) ** 2 / 4))


class TestKappaM:
    def test_hyperbolic_at_zero(self):
        assert pr.eval_kappa_m(pr.Hyperbolic(1.0), 0.0) == 0.5

    def test_quadratic_at_zero(self):
        assert pr.eval_kappa_m(pr.Quadratic(1.0), 0.0) == 1.0

    def test_hyperbolic_against_high_precision(self):
        expected = float(mp.cosh(1) ** 2 / mp.mpf("0.5"))
        assert expected == pytest.approx(4.76220, abs=1e-5)
        assert pr.eval_kappa_m(pr.Hyperbolic(0.5), 2.0) == pytest.approx(expected, rel=1e-14)

    def test_vectorised(self):
        t = np.linspace(0, 3, 7)
        np.testing.assert_allclose(pr.eval_kappa_m(pr.Quadratic(2.0), t), (2 + 2 * t) ** 2)

    @pytest.mark.parametrize("profile,tau", [
        (pr.Hyperbolic(1.0), -0.1),
        (pr.Quadratic(1.0), -1e-9),
        (pr.Tabulated((0.0, 1.0), (1.0, 2.0)), 1.5),
        (pr.Tabulated((0.0, 1.0), (1.0, 2.0)), math.nan),
    ])
    def test_domain_errors(self, profile, tau):
        with pytest.raises(pr.ProfileDomainError):
            pr.eval_kappa_m(profile, tau)

    @pytest.mark.parametrize("kwargs", [{"beta": 0.0}, {"beta": -1.0}, {"beta": math.inf}])
    def test_bad_beta(self, kwargs):
        with pytest.raises(ValueError):
            pr.Hyperbolic(**kwargs)

    def test_bad_gamma(self):
        with pytest.raises(ValueError):
            pr.Quadratic(0.0)


class TestTabulated:
    def test_nodes_bit_for_bit(self):
        tau = np.array([0.0, 0.3, 0.7, 1.1, 2.0, 3.5])
        km = np.array([1.0, 1.7, 0.4, 0.9, 2.2, 5.0]) / 3.0
        prof = pr.Tabulated(tuple(tau), tuple(km))
        out = pr.eval_kappa_m(prof, tau)
        assert np.array_equal(out, km)
        for t, k in zip(tau, km):
            assert pr.eval_kappa_m(prof, t) == k

    def test_positivity_between_nodes(self):
        # a spiky table where an unconstrained cubic would undershoot below zero
        prof = pr.Tabulated((0, 1, 2, 3, 4), (5.0, 5.0, 0.01, 5.0, 5.0))
        t = np.linspace(0, 4, 4001)
        assert np.all(pr.eval_kappa_m(prof, t) > 0)

    @pytest.mark.parametrize("tau,km", [
        ((0.0, 0.0), (1.0, 1.0)),
        ((0.0, 1.0), (1.0, 0.0)),
        ((1.0, 0.0), (1.0, 1.0)),
        ((0.0,), (1.0,)),
    ])
    def test_invalid_tables(self, tau, km):
        with pytest.raises(ValueError):
            pr.Tabulated(tau, km)

    def test_unavailable_closed_forms(self):
        prof = pr.Tabulated.constant()
        assert pr.analytic_u(prof, 0.5) is None
        assert pr.analytic_rho(prof, 0.5) is None
        assert pr.analytic_theta(prof, 0.5) is None


class TestClosedForms:
    def test_u_hyperbolic(self):
        assert pr.analytic_u(pr.Hyperbolic(1.0), 1.0) == pytest.approx(math.tanh(1.0), abs=1e-15)
        assert pr.analytic_u(pr.Hyperbolic(1.0), 1.0) == pytest.approx(0.761594, abs=1e-6)

    def test_u_quadratic(self):
        assert pr.analytic_u(pr.Quadratic(1.0), 1.5) == 2.0

    def test_rho_hyperbolic(self):
        expected = float(mp_rho_hyperbolic(1, 1))
        assert expected == pytest.approx(0.798037, abs=1e-5)
        assert pr.analytic_rho(pr.Hyperbolic(1.0), 1.0) == pytest.approx(expected, rel=1e-13)

    def test_rho_quadratic(self):
        tau = (math.e**2 - 1) / 2
        assert float(mp_rho_quadratic(1, tau)) == pytest.approx(math.e * math.sqrt(2), rel=1e-15)
        assert pr.analytic_rho(pr.Quadratic(1.0), tau) == pytest.approx(3.84423, abs=1e-5)
        assert pr.analytic_rho(pr.Quadratic(1.0), tau) == pytest.approx(math.e * math.sqrt(2), rel=1e-14)

    @pytest.mark.parametrize("beta", [0.2, 0.5, 1.0, 3.0])
    def test_rho_hyperbolic_limit(self, beta):
        prof = pr.Hyperbolic(beta)
        assert pr.analytic_rho(prof, 0.0) == 1.0 / beta
        assert pr.analytic_rho(prof, 1e-4) == pytest.approx(1.0 / beta, abs=1e-3)
        assert pr.analytic_rho_dot(prof, 0.0) == 0.0

    def test_theta_quadratic_quarter_turn(self):
        tau = (math.e**2 - 1) / 2
        assert pr.analytic_theta(pr.Quadratic(1.0), tau) == pytest.approx(math.pi / 4, abs=1e-12)

    @pytest.mark.parametrize("profile", [pr.Hyperbolic(1.0), pr.Hyperbolic(0.3), pr.Quadratic(1.0), pr.Quadratic(5.0)])
    def test_theta_zero_at_origin(self, profile):
        assert pr.analytic_theta(profile, 0.0) == 0.0

    def test_theta_rate_quadratic_at_one(self):
        prof = pr.Quadratic(1.0)
        rate = fd1(lambda t: pr.analytic_theta(prof, t), 1.0, h=1e-3)
        assert rate == pytest.approx(1.0 / pr.analytic_rho(prof, 1.0) ** 2, abs=1e-6)

    @pytest.mark.parametrize("profile", [pr.Hyperbolic(1.0), pr.Hyperbolic(0.5), pr.Quadratic(1.0), pr.Quadratic(10.0)])
    def test_u_solves_linear_equation(self, profile):
        taus = np.linspace(0.1, 5.0, 100)
        res = [abs(fd2(lambda t: pr.analytic_u(profile, t), t) + pr.analytic_u(profile, t) / pr.eval_kappa_m(profile, t))
               for t in taus]
        assert max(res) < 1e-6

    @pytest.mark.parametrize("profile", [pr.Hyperbolic(1.0), pr.Hyperbolic(0.2), pr.Quadratic(1.0), pr.Quadratic(5.0)])
    def test_rho_from_u_relation(self, profile):
        taus = np.linspace(0.1, 5.0, 60)
        u = pr.analytic_u(profile, taus)
        s = pr.analytic_s(profile, taus)
        np.testing.assert_allclose(pr.analytic_rho(profile, taus), u * np.sqrt(1 + s * s), rtol=0, atol=1e-8)
        ds = np.array([fd1(lambda t: pr.analytic_s(profile, t), t) for t in taus])
        np.testing.assert_allclose(ds, 1 / u**2, rtol=1e-8)

    @pytest.mark.parametrize("profile", [pr.Hyperbolic(1.0), pr.Hyperbolic(0.5), pr.Quadratic(1.0), pr.Quadratic(10.0)])
    def test_theta_rate(self, profile):
        for t in np.linspace(0.2, 5.0, 25):
            rate = fd1(lambda x: pr.analytic_theta(profile, x), t, h=1e-3)
            assert rate == pytest.approx(pr.analytic_rho(profile, t) ** -2, abs=1e-6)

    @pytest.mark.parametrize("profile", [pr.Hyperbolic(1.0), pr.Quadratic(1.0), pr.Quadratic(5.0)])
    def test_rho_dot_matches_finite_difference(self, profile):
        for t in np.linspace(0.2, 5.0, 20):
            assert pr.analytic_rho_dot(profile, t) == pytest.approx(fd1(lambda x: pr.analytic_rho(profile, x), t), abs=1e-8)

    def test_quadratic_rho_dot_at_zero(self):
        # d(rho^2)/dx = ln^2(x)/4 + ln(x)/2 + 1 with x = 1 + 2 tau, so rho_dot(0) = 1
        assert pr.analytic_rho_dot(pr.Quadratic(1.0), 0.0) == pytest.approx(1.0, abs=1e-15)

    def test_arccos_form_is_unsigned(self):
        prof = pr.Hyperbolic(1.0)
        for t in (0.3, 0.8, 1.5, 3.0):
            s = pr.analytic_s(prof, t)
            assert pr.arccos_phase(prof, t) == pytest.approx(abs(math.atan(s)), abs=1e-14)


class TestJson:
    @pytest.mark.parametrize("spec", [
        {"kind": "hyperbolic", "beta": 1.0},
        {"kind": "quadratic", "gamma": 5.0},
        {"kind": "tabulated", "samples": [[0.0, 1.0], [2.0, 3.0]]},
    ])
    def test_round_trip(self, spec):
        prof = pr.profile_from_json(json.dumps(spec))
        assert pr.profile_to_dict(prof) == spec

    @pytest.mark.parametrize("spec", [{"beta": 1}, {"kind": "cubic"}, {"kind": "hyperbolic", "beta": -2}, [1, 2]])
    def test_rejects_bad_specs(self, spec):
        with pytest.raises((ValueError, KeyError)):
            pr.profile_from_dict(spec)


@settings(max_examples=50, deadline=None)
@given(beta=st.floats(0.05, 5.0), tau=st.floats(0.0, 20.0))
def test_hyperbolic_positive(beta, tau):
    prof = pr.Hyperbolic(beta)
    assert pr.eval_kappa_m(prof, tau) > 0
    assert pr.analytic_rho(prof, tau) > 0


@settings(max_examples=50, deadline=None)
@given(gamma=st.floats(0.01, 50.0), tau=st.floats(0.0, 50.0))
def test_quadratic_theta_in_range(gamma, tau):
    th = pr.analytic_theta(pr.Quadratic(gamma), tau)
    assert -1e-15 <= th < math.pi


@pytest.mark.parametrize("beta", [0.2, 1.0, 3.0])
@pytest.mark.parametrize("tau", [1e-300, 1e-12, 1e-6])
def test_hyperbolic_rho_dot_near_origin(beta, tau):
    # rho_dot ~ (beta^2 - 2) beta tau for small tau
    val = pr.analytic_rho_dot(pr.Hyperbolic(beta), tau)
    assert math.isfinite(val)
    assert val == pytest.approx((beta * beta - 2) * beta * tau, rel=1e-6, abs=1e-300)
