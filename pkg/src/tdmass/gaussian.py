"""
Pure Gaussian states and the closed-form propagator.

A state is its mean vector (<q>, <p>) and covariance matrix
Sigma = [[Var q, Cov], [Cov, Var p]] with det Sigma = 1/4 (pure, hbar = 1).
Every operator that appears in the propagator is at most quadratic, so each
acts on (mean, Sigma) through a 2x2 symplectic matrix S:
mean -> S mean, Sigma -> S Sigma S^T.

State maps (conventions measured with the number-basis oracle):

    shear(c)      exp(i c q^2)                  (q, p) -> (q, p + 2 c q)
    dilation(s)   exp(-i (s/2)(qp + pq))        (q, p) -> (e^s q, e^-s p)
    rotation(th)  exp(-i th (p^2 + q^2)/2)      alpha -> alpha e^{-i th}
    Fourier       exp(-i (pi/4)(p^2 + q^2))     alpha -> -i alpha

The propagator of the transformed oscillator is
U(tau, tau0) = T^dagger(tau) R(Theta(tau) - Theta(tau0)) T(tau0), with
T^dagger = exp(i (rho_dot/2 rho) q^2) exp(-i (ln rho/2)(qp + pq)).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, Optional

import numpy as np

from . import ermakov as er
from . import profiles as pr

PURITY_TOL = 1e-9

# F maps |alpha> to |FOURIER_SIGN * i * alpha>; fixed by fock_oracle.fourier_convention()
FOURIER_SIGN = -1


class PurityError(ValueError):
    pass


@dataclass(frozen=True)
class GaussianState:
    mean: np.ndarray  # (<q>, <p>)
    cov: np.ndarray  # 2x2

    def __post_init__(self):
        mean = np.asarray(self.mean, dtype=float).reshape(2)
        cov = np.asarray(self.cov, dtype=float).reshape(2, 2)
        cov = 0.5 * (cov + cov.T)
        object.__setattr__(self, "mean", mean)
        object.__setattr__(self, "cov", cov)

    @property
    def var_q(self) -> float:
        return float(self.cov[0, 0])

    @property
    def var_p(self) -> float:
        return float(self.cov[1, 1])

    @property
    def cov_qp(self) -> float:
        return float(self.cov[0, 1])

    @property
    def uncertainty(self) -> float:
        """Delta q * Delta p."""
        return math.sqrt(self.var_q * self.var_p)

    def is_pure(self, tol: float = PURITY_TOL) -> bool:
        return abs(np.linalg.det(self.cov) - 0.25) <= tol and self.var_q > 0

    def check_pure(self, tol: float = PURITY_TOL) -> "GaussianState":
        if not self.is_pure(tol):
            raise PurityError(f"det Sigma = {np.linalg.det(self.cov)!r}, expected 1/4")
        return self

    def transform(self, s: np.ndarray) -> "GaussianState":
        return GaussianState(s @ self.mean, s @ self.cov @ s.T)

    @property
    def alpha(self) -> complex:
        return complex(self.mean[0], self.mean[1]) / math.sqrt(2)


def vacuum() -> GaussianState:
    return GaussianState(np.zeros(2), 0.5 * np.eye(2))


def make_coherent(alpha: complex) -> GaussianState:
    alpha = complex(alpha)
    return GaussianState(math.sqrt(2) * np.array([alpha.real, alpha.imag]), 0.5 * np.eye(2))


# -- symplectic matrices --------------------------------------------------


def shear_matrix(c: float) -> np.ndarray:
    return np.array([[1.0, 0.0], [2.0 * c, 1.0]])


def dilation_matrix(s: float) -> np.ndarray:
    return np.diag([math.exp(s), math.exp(-s)])


def rotation_matrix(theta: float) -> np.ndarray:
    c, s = math.cos(theta), math.sin(theta)
    return np.array([[c, s], [-s, c]])


def t_dagger_matrix(rho: float, rho_dot: float) -> np.ndarray:
    """State map of T^dagger: dilation by ln rho, then shear by rho_dot/(2 rho)."""
    return shear_matrix(rho_dot / (2.0 * rho)) @ dilation_matrix(math.log(rho))


def t_matrix(rho: float, rho_dot: float) -> np.ndarray:
    return np.linalg.inv(t_dagger_matrix(rho, rho_dot))


# -- state operations -----------------------------------------------------


def apply_shear(state: GaussianState, c: float) -> GaussianState:
    """Multiplication by exp(i c q^2): p -> p + 2 c q."""
    return state.transform(shear_matrix(c))


def apply_dilation(state: GaussianState, s: float) -> GaussianState:
    """(q, p) -> (e^s q, e^-s p); the state action of exp(-i (s/2)(qp + pq))."""
    return state.transform(dilation_matrix(s))


def apply_rotation(state: GaussianState, theta: float) -> GaussianState:
    """Free oscillator evolution for phase theta: alpha -> alpha e^{-i theta}."""
    return state.transform(rotation_matrix(theta))


def fourier_map(state: GaussianState, direction: str = "forward") -> GaussianState:
    """Apply F (forward) or F^dagger (inverse); F is a quarter-period rotation."""
    quarter = -FOURIER_SIGN * math.pi / 2
    if direction == "forward":
        return apply_rotation(state, quarter)
    if direction == "inverse":
        return apply_rotation(state, -quarter)
    raise ValueError(f"direction must be 'forward' or 'inverse', got {direction!r}")


def apply_T_dagger(state: GaussianState, rho: float, rho_dot: float) -> GaussianState:
    if not rho > 0:
        raise ValueError("rho must be positive")
    return apply_shear(apply_dilation(state, math.log(rho)), rho_dot / (2.0 * rho))


def apply_T(state: GaussianState, rho: float, rho_dot: float) -> GaussianState:
    if not rho > 0:
        raise ValueError("rho must be positive")
    return apply_dilation(apply_shear(state, -rho_dot / (2.0 * rho)), -math.log(rho))


# -- observables ----------------------------------------------------------


def invariant_expectation(state: GaussianState, rho: float, rho_dot: float) -> float:
    """<I> for I = (q^2/rho^2 + (rho p - rho_dot q)^2)/2."""
    if not rho > 0:
        raise ValueError("rho must be positive")
    return invariant_from_moments(*state.mean, state.var_q, state.var_p, state.cov_qp, rho, rho_dot)


def invariant_from_moments(mq, mp, vq, vp, c, rho, rho_dot) -> float:
    q2 = vq + mq * mq
    p2 = vp + mp * mp
    qp = c + mq * mp
    return 0.5 * (q2 / rho**2 + rho**2 * p2 - 2.0 * rho * rho_dot * qp + rho_dot**2 * q2)


def squeeze_params(state: GaussianState, zero_tol: float = 1e-12):
    """(r, phi): r = ln(2 lambda_max)/2, phi = major-axis angle in [0, pi).

    phi is reported as 0 when the state is unsqueezed (r below zero_tol).
    """
    w, v = np.linalg.eigh(state.cov)
    lam = w[-1]
    r = 0.5 * math.log(2.0 * lam)
    if r <= zero_tol:
        return max(r, 0.0), 0.0
    vec = v[:, -1]
    phi = math.atan2(vec[1], vec[0]) % math.pi
    if math.isclose(phi, math.pi, abs_tol=1e-15):
        phi = 0.0
    return r, phi


# -- propagation ----------------------------------------------------------


@dataclass(frozen=True)
class PropagationReport:
    tau: float
    state: GaussianState
    invariant: float
    r: float
    phi: float

    @property
    def var_q(self) -> float:
        return self.state.var_q

    @property
    def var_p(self) -> float:
        return self.state.var_p

    @property
    def uncertainty(self) -> float:
        return self.state.uncertainty

    def row(self):
        s = self.state
        return [self.tau, s.mean[0], s.mean[1], s.var_q, s.var_p, s.cov_qp,
                s.uncertainty, self.invariant, self.r, self.phi]


REPORT_COLUMNS = ["tau", "mean_q", "mean_p", "var_q", "var_p", "cov_qp",
                  "uncertainty", "invariant", "r", "phi"]


def propagator_matrix(ermakov: er.ErmakovSolution, tau: float) -> np.ndarray:
    """Symplectic matrix of T^dagger(tau) R(Theta(tau) - Theta(tau0)) T(tau0)."""
    rho0, drho0, theta0 = ermakov.at(ermakov.tau_start)
    rho, drho, theta = ermakov.at(tau)
    return t_dagger_matrix(rho, drho) @ rotation_matrix(theta - theta0) @ t_matrix(rho0, drho0)


def propagate(profile: Optional[pr.MassProfile], ermakov: er.ErmakovSolution, tau: float,
              initial: GaussianState) -> PropagationReport:
    """Evolve ``initial`` (given at the first sample of ``ermakov``) to ``tau``.

    The state lives in the Fourier-transformed picture, where the
    Hamiltonian is (p^2 + q^2/(kappa*M))/2.
    """
    if profile is not None and profile != ermakov.profile:
        raise ValueError("profile does not match the Ermakov solution")
    initial.check_pure()
    rho0, drho0, theta0 = ermakov.at(ermakov.tau_start)
    rho, drho, theta = ermakov.at(tau)
    state = apply_T(initial, rho0, drho0)
    state = apply_rotation(state, theta - theta0)
    state = apply_T_dagger(state, rho, drho)
    r, phi = squeeze_params(state)
    return PropagationReport(float(tau), state, invariant_expectation(state, rho, drho), r, phi)


def propagate_series(ermakov: er.ErmakovSolution, initial: GaussianState,
                     taus: Optional[Iterable[float]] = None):
    taus = ermakov.tau if taus is None else taus
    return [propagate(None, ermakov, t, initial) for t in taus]


def invariant_frame_state(ermakov: er.ErmakovSolution, alpha: complex, tau: Optional[float] = None) -> GaussianState:
    """T^dagger(tau) |i-picture alpha e^{-i Theta}>: the squeezed-coherent solution family.

    ``alpha`` is the coherent amplitude in the original picture; in the
    transformed picture the state is F^dagger|alpha>. At the first sample this
    is the state that the evolved-coherent-state formula assigns to the start
    of the run.
    """
    tau = ermakov.tau_start if tau is None else tau
    rho, drho, theta = ermakov.at(tau)
    base = fourier_map(make_coherent(alpha), "inverse")
    return apply_T_dagger(apply_rotation(base, theta), rho, drho)


def write_reports_csv(path, reports) -> None:
    data = np.array([rep.row() for rep in reports], dtype=float)
    np.savetxt(path, data, fmt="%.17g", delimiter=",", header=",".join(REPORT_COLUMNS), comments="")
