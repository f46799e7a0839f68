import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from tdmass import ermakov as er
from tdmass import gaussian as ga
from tdmass import profiles as pr

finite = st.floats(-3.0, 3.0)
rhos = st.floats(0.2, 5.0)


def test_coherent_state_moments():
    s = ga.make_coherent(1 + 2j)
    np.testing.assert_allclose(s.mean, [math.sqrt(2), 2 * math.sqrt(2)])
    np.testing.assert_allclose(s.cov, 0.5 * np.eye(2))
    assert s.alpha == pytest.approx(1 + 2j)
    assert s.uncertainty == 0.5


def test_purity_check():
    with pytest.raises(ga.PurityError):
        ga.GaussianState([0, 0], np.eye(2)).check_pure()


def test_fourier_sign_matches_number_basis(fourier_convention):
    assert ga.FOURIER_SIGN == fourier_convention.sign
    out = ga.fourier_map(ga.make_coherent(1 + 0.5j))
    assert out.alpha == pytest.approx(fourier_convention.sign * 1j * (1 + 0.5j))


def test_fourier_four_times_is_identity():
    s = ga.apply_dilation(ga.make_coherent(0.3 - 1j), 0.4)
    out = s
    for _ in range(4):
        out = ga.fourier_map(out)
    np.testing.assert_allclose(out.mean, s.mean, atol=1e-14)
    np.testing.assert_allclose(out.cov, s.cov, atol=1e-14)
    with pytest.raises(ValueError):
        ga.fourier_map(s, "sideways")


def test_rotation_phase_convention():
    # free evolution for phase theta takes alpha to alpha e^{-i theta}
    s = ga.apply_rotation(ga.make_coherent(1.0), 0.7)
    assert s.alpha == pytest.approx(np.exp(-0.7j))


def test_t_dagger_of_vacuum():
    # T^dagger |0> has Var q = rho^2/2, Var p = (1/rho^2 + rho_dot^2)/2, Cov = rho rho_dot/2
    rho, drho = 1.7, -0.4
    s = ga.apply_T_dagger(ga.vacuum(), rho, drho)
    assert s.var_q == pytest.approx(rho**2 / 2)
    assert s.var_p == pytest.approx((rho**-2 + drho**2) / 2)
    assert s.cov_qp == pytest.approx(rho * drho / 2)
    assert ga.invariant_expectation(s, rho, drho) == pytest.approx(0.5)


def test_squeeze_params():
    s = ga.apply_dilation(ga.vacuum(), 0.3)
    r, phi = ga.squeeze_params(s)
    assert r == pytest.approx(0.3)
    assert phi == pytest.approx(0.0, abs=1e-12)
    r, phi = ga.squeeze_params(ga.apply_dilation(ga.vacuum(), -0.3))
    assert r == pytest.approx(0.3)
    assert phi == pytest.approx(math.pi / 2)
    assert ga.squeeze_params(ga.make_coherent(2.0)) == (0.0, 0.0)


@settings(max_examples=60, deadline=None)
@given(re=finite, im=finite, rho=rhos, drho=finite, theta=finite, c=finite)
def test_operations_preserve_det(re, im, rho, drho, theta, c):
    s = ga.make_coherent(complex(re, im))
    s = ga.apply_T_dagger(ga.apply_rotation(ga.apply_shear(s, c), theta), rho, drho)
    assert abs(np.linalg.det(s.cov) - 0.25) < 1e-9 * max(1.0, np.abs(s.cov).max() ** 2)
    assert s.uncertainty >= 0.5 - 1e-9


@settings(max_examples=60, deadline=None)
@given(re=finite, im=finite, rho=rhos, drho=finite)
def test_t_round_trip(re, im, rho, drho):
    s = ga.make_coherent(complex(re, im))
    back = ga.apply_T(ga.apply_T_dagger(s, rho, drho), rho, drho)
    np.testing.assert_allclose(back.mean, s.mean, atol=1e-9)
    np.testing.assert_allclose(back.cov, s.cov, atol=1e-9)


@settings(max_examples=60, deadline=None)
@given(rho=rhos, drho=finite)
def test_matrices_symplectic(rho, drho):
    j = np.array([[0, 1], [-1, 0]])
    m = ga.t_dagger_matrix(rho, drho)
    np.testing.assert_allclose(m @ j @ m.T, j, atol=1e-12 * max(1, np.abs(m).max() ** 2))


def test_invariant_conserved_along_propagation():
    for prof in (pr.Hyperbolic(1.0), pr.Quadratic(1.0)):
        t0 = 0.1 if isinstance(prof, pr.Hyperbolic) else 0.0
        erm = er.closed_form_solution(prof, np.linspace(t0, 5, 501))
        init = ga.fourier_map(ga.make_coherent(1.0), "inverse")
        reps = ga.propagate_series(erm, init)
        inv = np.array([r.invariant for r in reps])
        assert np.max(np.abs(inv - inv[0])) / inv[0] < 1e-9


def test_propagator_matches_classical_flow():
    # the propagator matrix advances (q, p) like Hamilton's equations for (p^2 + q^2/kM)/2
    from scipy.integrate import solve_ivp
    prof = pr.Quadratic(2.0)
    erm = er.closed_form_solution(prof, np.linspace(0, 3, 301))

    def rhs(t, y):
        return [y[1], -y[0] / pr.eval_kappa_m(prof, t)]

    for y0 in ([1.0, 0.0], [0.0, 1.0]):
        sol = solve_ivp(rhs, (0, 3), y0, rtol=1e-11, atol=1e-13)
        np.testing.assert_allclose(ga.propagator_matrix(erm, 3.0) @ y0, sol.y[:, -1], atol=1e-8)


def test_invariant_frame_state_is_pure_and_squeezed_by_rho():
    erm = er.closed_form_solution(pr.Hyperbolic(0.5), np.linspace(0.1, 3, 101))
    s = ga.invariant_frame_state(erm, 1.0)
    s.check_pure()
    rho, drho, _ = erm.at(0.1)
    assert ga.invariant_expectation(s, rho, drho) == pytest.approx(1.5)


def test_propagate_rejects_mismatched_profile():
    erm = er.closed_form_solution(pr.Quadratic(1.0), [0.0, 1.0])
    with pytest.raises(ValueError):
        ga.propagate(pr.Quadratic(2.0), erm, 0.5, ga.vacuum())


def test_reports_csv(tmp_path):
    erm = er.closed_form_solution(pr.Quadratic(1.0), np.linspace(0, 1, 5))
    reps = ga.propagate_series(erm, ga.vacuum())
    path = tmp_path / "r.csv"
    ga.write_reports_csv(path, reps)
    lines = path.read_text().splitlines()
    assert lines[0].split(",") == ga.REPORT_COLUMNS
    assert len(lines) == 6
