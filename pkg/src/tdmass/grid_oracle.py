"""
Brute-force Schrodinger propagation on a periodic position grid.

Independent of the Ermakov machinery: states are sampled on q in [-L/2, L/2)
and stepped with second-order Strang splitting, diagonal factors in position
space and the kinetic factor in FFT momentum space. The time-dependent
coefficient is evaluated at the midpoint of each step.

Two equations are available (tau = kappa t, hbar = 1):

    transformed   i dPsi/dtau = (p^2 + q^2/(kappa M)) Psi / 2
    original      i dpsi/dtau = (p^2/(kappa M) + q^2) psi / 2
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

from . import gaussian as ga
from . import profiles as pr

BOUNDARY_TOL = 1e-8
DEFAULT_N = 2048
DEFAULT_L = 24.0
DEFAULT_DT = 1e-4


class ResolutionError(RuntimeError):
    """The wavefunction reached the edge of the grid."""

    def __init__(self, message: str, tau: Optional[float] = None):
        super().__init__(message if tau is None else f"{message} (at tau={tau!r})")
        self.tau = tau


@dataclass(frozen=True)
class GridWavefunction:
    psi: np.ndarray
    length: float

    def __post_init__(self):
        psi = np.asarray(self.psi, dtype=complex)
        n = psi.size
        if psi.ndim != 1 or n < 4 or n & (n - 1):
            raise ValueError("grid size must be a power of two")
        object.__setattr__(self, "psi", psi)

    @property
    def n(self) -> int:
        return self.psi.size

    @property
    def dq(self) -> float:
        return self.length / self.n

    @property
    def q(self) -> np.ndarray:
        return grid_points(self.n, self.length)

    @property
    def p(self) -> np.ndarray:
        return momentum_points(self.n, self.length)

    def norm(self) -> float:
        return float(np.sum(np.abs(self.psi) ** 2) * self.dq)

    def edge_amplitude(self) -> float:
        a = np.abs(self.psi)
        return float(max(a[0], a[1], a[-1], a[-2]))

    def check_boundary(self, tau: Optional[float] = None, tol: float = BOUNDARY_TOL) -> "GridWavefunction":
        edge = self.edge_amplitude()
        if edge >= tol:
            raise ResolutionError(f"|psi| = {edge:.2e} at the grid edge; enlarge L", tau)
        return self

    def to_csv(self, path) -> None:
        data = np.column_stack([self.q, self.psi.real, self.psi.imag, np.abs(self.psi) ** 2])
        np.savetxt(path, data, fmt="%.17g", delimiter=",", header="q,re_psi,im_psi,abs2", comments="")


def grid_points(n: int, length: float) -> np.ndarray:
    return -length / 2 + (length / n) * np.arange(n)


def momentum_points(n: int, length: float) -> np.ndarray:
    return 2 * np.pi * np.fft.fftfreq(n, d=length / n)


def sample_gaussian(state: ga.GaussianState, n: int = DEFAULT_N, length: float = DEFAULT_L) -> GridWavefunction:
    """psi(q) ~ exp(-(1 - 2i Cov)(q - q0)^2/(4 Var q) + i p0 (q - q0)), zero phase at the mean."""
    state.check_pure()
    q = grid_points(n, length)
    q0, p0 = state.mean
    x = q - q0
    a = (1 - 2j * state.cov_qp) / (4 * state.var_q)
    psi = np.exp(-a * x * x + 1j * p0 * x)
    psi /= math.sqrt(np.sum(np.abs(psi) ** 2) * (length / n))
    return GridWavefunction(psi, length).check_boundary()


# -- stepping -------------------------------------------------------------


def _strang(psi: GridWavefunction, t0: float, t1: float, dt: float,
            position_coeff: Callable[[float], float], momentum_coeff: Callable[[float], float],
            check_every: int = 200) -> GridWavefunction:
    """Step exp(-i h (a(t) q^2 + b(t) p^2)/2) with half steps in position space.

    Both coefficient functions must accept an array of times.
    """
    if not dt > 0:
        raise ValueError("dt must be positive")
    if t1 < t0:
        raise ValueError("t_end must not precede t_start")
    steps = int(math.ceil((t1 - t0) / dt - 1e-9))
    if steps == 0:
        return psi
    h = (t1 - t0) / steps
    q2 = psi.q ** 2
    p2 = psi.p ** 2
    mids = t0 + (np.arange(steps) + 0.5) * h
    # coefficient functions are vectorised, so evaluate every midpoint at once
    a = np.broadcast_to(position_coeff(mids), mids.shape)
    b = np.broadcast_to(momentum_coeff(mids), mids.shape)
    y = psi.psi.copy()
    half = kin = None
    for k in range(steps):
        # a constant factor is reused rather than re-exponentiated
        if half is None or a[k] != a[k - 1]:
            half = np.exp(-0.25j * h * a[k] * q2)
        if kin is None or b[k] != b[k - 1]:
            kin = np.exp(-0.5j * h * b[k] * p2)
        y = half * np.fft.ifft(kin * np.fft.fft(half * y))
        if (k + 1) % check_every == 0:
            GridWavefunction(y, psi.length).check_boundary(t0 + (k + 1) * h)
    return GridWavefunction(y, psi.length).check_boundary(t1)


def evolve_transformed(psi: GridWavefunction, profile: pr.MassProfile, tau_start: float,
                       tau_end: float, dt: float = DEFAULT_DT) -> GridWavefunction:
    """Evolve under (p^2 + q^2/(kappa M(tau)))/2."""
    pr.eval_kappa_m(profile, [tau_start, tau_end])
    return _strang(psi, tau_start, tau_end, dt,
                   lambda t: 1.0 / pr.eval_kappa_m(profile, t), lambda t: 1.0)


def evolve_original(psi: GridWavefunction, profile: pr.MassProfile, t_start: float,
                    t_end: float, dt: float = DEFAULT_DT) -> GridWavefunction:
    """Evolve under (p^2/(kappa M(tau)) + q^2)/2, time already rescaled to tau = kappa t."""
    pr.eval_kappa_m(profile, [t_start, t_end])
    return _strang(psi, t_start, t_end, dt,
                   lambda t: 1.0, lambda t: 1.0 / pr.eval_kappa_m(profile, t))


def evolve_transformed_series(psi: GridWavefunction, profile: pr.MassProfile, taus,
                              dt: float = DEFAULT_DT):
    """Snapshots at each tau in ``taus`` (first entry is the start time)."""
    out = [psi]
    for a, b in zip(taus[:-1], taus[1:]):
        psi = evolve_transformed(psi, profile, a, b, dt)
        out.append(psi)
    return out


def apply_fourier_grid(psi: GridWavefunction, direction: str = "forward") -> GridWavefunction:
    """F = exp(-i (pi/4)(p^2 + q^2)) e^{i pi/4}, or its inverse.

    Uses the exact factorisation of the quarter-period oscillator evolution
    into chirp / free-flight / chirp, exp(-i q^2/2) exp(-i p^2/2) exp(-i q^2/2),
    each factor diagonal in position or momentum space.
    """
    if direction not in ("forward", "inverse"):
        raise ValueError(f"direction must be 'forward' or 'inverse', got {direction!r}")
    sgn = 1.0 if direction == "forward" else -1.0
    chirp = np.exp(-0.5j * sgn * psi.q ** 2)
    kin = np.exp(-0.5j * sgn * psi.p ** 2)
    y = chirp * np.fft.ifft(kin * np.fft.fft(chirp * psi.psi))
    return GridWavefunction(np.exp(0.25j * sgn * np.pi) * y, psi.length)


# -- measurements ---------------------------------------------------------


@dataclass(frozen=True)
class GridObservables:
    mean_q: float
    mean_p: float
    var_q: float
    var_p: float
    cov_qp: float
    invariant: Optional[float] = None

    @property
    def uncertainty(self) -> float:
        return math.sqrt(self.var_q * self.var_p)


def observables(psi: GridWavefunction, rho: Optional[float] = None,
                rho_dot: Optional[float] = None) -> GridObservables:
    """Moments by quadrature; p acts spectrally. <I> is filled when rho is given."""
    y = psi.psi
    dq = psi.dq
    q = psi.q
    norm = np.sum(np.abs(y) ** 2) * dq
    dens = np.abs(y) ** 2 * dq / norm
    mq = float(np.sum(dens * q))
    vq = float(np.sum(dens * q * q)) - mq * mq
    py = np.fft.ifft(psi.p * np.fft.fft(y))
    mp = float(np.real(np.vdot(y, py)) * dq / norm)
    p2 = float(np.sum(np.abs(py) ** 2) * dq / norm)
    vp = p2 - mp * mp
    # <(qp + pq)/2> = Re <psi| q p |psi>
    qp = float(np.real(np.vdot(q * y, py)) * dq / norm)
    c = qp - mq * mp
    inv = None
    if rho is not None:
        inv = ga.invariant_from_moments(mq, mp, vq, vp, c, rho, 0.0 if rho_dot is None else rho_dot)
    return GridObservables(mq, mp, vq, vp, c, inv)


def fidelity(psi1: GridWavefunction, psi2: GridWavefunction) -> float:
    """|<psi1|psi2>|^2 normalised by both norms; insensitive to global phase."""
    _same_grid(psi1, psi2)
    ov = np.vdot(psi1.psi, psi2.psi)
    n1 = np.vdot(psi1.psi, psi1.psi).real
    n2 = np.vdot(psi2.psi, psi2.psi).real
    return float(min(1.0, abs(ov) ** 2 / (n1 * n2)))


def state_distance(psi1: GridWavefunction, psi2: GridWavefunction) -> float:
    """sqrt(1 - fidelity), computed from the orthogonal component to avoid cancellation."""
    _same_grid(psi1, psi2)
    u = psi1.psi / np.linalg.norm(psi1.psi)
    v = psi2.psi / np.linalg.norm(psi2.psi)
    return float(np.linalg.norm(v - np.vdot(u, v) * u))


def _same_grid(a: GridWavefunction, b: GridWavefunction) -> None:
    if a.n != b.n or a.length != b.length:
        raise ValueError(f"grids differ: (N={a.n}, L={a.length}) vs (N={b.n}, L={b.length})")
