"""
Auxiliary functions of the transformed oscillator.

The transformed Hamiltonian is H = (p^2 + q^2/(kappa*M(tau)))/2. Its invariant
is parametrised by the Ermakov amplitude rho, which solves

    rho'' + rho/(kappa*M) = 1/rho^3,

and which can also be built from any solution u of the linear equation
u'' + u/(kappa*M) = 0 via rho = u*sqrt(1 + S^2), S = S0 + int dtau/u^2.
The accumulated phase is Theta = int dtau/rho^2 (characteristic frequency
omega = 1/rho^2).

Three routes produce an ErmakovSolution: closed forms (hyperbolic and
quadratic profiles), the linear route through u, and direct integration of
the nonlinear equation. They are independent of one another and are
cross-checked in the test suite.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np
from scipy.integrate import solve_ivp
from scipy.interpolate import CubicHermiteSpline

from . import profiles as pr

RTOL = 1e-10
ATOL = 1e-12


class IntegrationError(RuntimeError):
    """The adaptive integrator could not advance past ``tau``."""

    def __init__(self, message: str, tau: float):
        super().__init__(f"{message} (at tau={tau!r})")
        self.tau = tau


class SingularityError(RuntimeError):
    """u crossed zero, or rho collapsed to zero, near ``tau``."""

    def __init__(self, message: str, tau: float):
        super().__init__(f"{message} (at tau={tau!r})")
        self.tau = tau


class Source(enum.Enum):
    CLOSED_FORM = "closed_form"
    FROM_U = "from_u"
    DIRECT_ODE = "direct_ode"


def _as_grid(tau_grid) -> np.ndarray:
    t = np.asarray(tau_grid, dtype=float)
    if t.ndim != 1 or t.size < 2:
        raise ValueError("tau_grid needs at least two samples")
    if np.any(np.diff(t) <= 0):
        raise ValueError("tau_grid must be strictly increasing")
    return t


@dataclass(frozen=True)
class ErmakovSolution:
    """rho, its derivative and the phase Theta sampled on ``tau`` (Theta[0] == 0)."""

    tau: np.ndarray
    rho: np.ndarray
    rho_dot: np.ndarray
    theta: np.ndarray
    source: Source
    profile: pr.MassProfile

    def __post_init__(self):
        n = self.tau.size
        if not (self.rho.size == self.rho_dot.size == self.theta.size == n):
            raise ValueError("sample arrays must share the tau grid length")
        if np.any(self.rho <= 0):
            raise ValueError("rho must be positive at every sample")

    @property
    def omega(self) -> np.ndarray:
        return 1.0 / self.rho**2

    @property
    def kappa_m(self) -> np.ndarray:
        return np.asarray(pr.eval_kappa_m(self.profile, self.tau))

    @property
    def tau_start(self) -> float:
        return float(self.tau[0])

    @property
    def tau_end(self) -> float:
        return float(self.tau[-1])

    def rho_ddot(self) -> np.ndarray:
        """Second derivative from the Ermakov equation itself."""
        return self.rho**-3 - self.rho / self.kappa_m

    def at(self, tau: float):
        """(rho, rho_dot, Theta) at ``tau`` inside the sampled range.

        Closed-form solutions are evaluated exactly; sampled ones use cubic
        Hermite interpolation with the exact derivatives available at the nodes.
        """
        tau = float(tau)
        lo, hi = self.tau_start, self.tau_end
        if not (lo - 1e-12 * max(1.0, abs(lo)) <= tau <= hi + 1e-12 * max(1.0, abs(hi))):
            raise pr.ProfileDomainError(f"tau={tau} outside solution range [{lo}, {hi}]")
        tau = min(max(tau, lo), hi)
        if self.source is Source.CLOSED_FORM:
            theta = pr.analytic_theta(self.profile, tau) - pr.analytic_theta(self.profile, lo)
            return (
                pr.analytic_rho(self.profile, tau),
                pr.analytic_rho_dot(self.profile, tau),
                float(theta),
            )
        i = int(np.searchsorted(self.tau, tau))
        if i < self.tau.size and self.tau[i] == tau:
            return float(self.rho[i]), float(self.rho_dot[i]), float(self.theta[i])
        rho_i, drho_i, theta_i = self._splines()
        return float(rho_i(tau)), float(drho_i(tau)), float(theta_i(tau))

    def _splines(self):
        cache = self.__dict__.get("_spline_cache")
        if cache is None:
            cache = (
                CubicHermiteSpline(self.tau, self.rho, self.rho_dot),
                CubicHermiteSpline(self.tau, self.rho_dot, self.rho_ddot()),
                CubicHermiteSpline(self.tau, self.theta, self.omega),
            )
            object.__setattr__(self, "_spline_cache", cache)
        return cache

    def to_csv(self, path) -> None:
        """Write columns tau, rho, rho_dot, theta, kappa_m with 17 significant digits."""
        data = np.column_stack([self.tau, self.rho, self.rho_dot, self.theta, self.kappa_m])
        np.savetxt(path, data, fmt="%.17g", delimiter=",",
                   header="tau,rho,rho_dot,theta,kappa_m", comments="")


def read_solution_csv(path, profile: pr.MassProfile, source: Source = Source.DIRECT_ODE) -> ErmakovSolution:
    data = np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)
    return ErmakovSolution(data[:, 0], data[:, 1], data[:, 2], data[:, 3], source, profile)


def closed_form_solution(profile: pr.MassProfile, tau_grid) -> ErmakovSolution:
    """Sample the closed-form rho and Theta (Theta re-zeroed at the first sample)."""
    t = _as_grid(tau_grid)
    if not pr.has_closed_form(profile):
        raise ValueError(f"no closed form for {profile!r}")
    theta = np.asarray(pr.analytic_theta(profile, t))
    return ErmakovSolution(
        t,
        np.asarray(pr.analytic_rho(profile, t)),
        np.asarray(pr.analytic_rho_dot(profile, t)),
        theta - theta[0],
        Source.CLOSED_FORM,
        profile,
    )


# -- linear route ---------------------------------------------------------


@dataclass(frozen=True)
class USolution:
    tau: np.ndarray
    u: np.ndarray
    u_dot: np.ndarray
    dense: Callable  # tau -> array([u, u_dot])
    profile: pr.MassProfile


def _run_ivp(rhs, t_span, y0, tau_grid, events=None):
    sol = solve_ivp(rhs, t_span, y0, method="DOP853", t_eval=tau_grid, dense_output=True,
                    rtol=RTOL, atol=ATOL, events=events)
    if sol.status == -1:
        raise IntegrationError(sol.message, float(sol.t[-1]) if sol.t.size else t_span[0])
    return sol


def solve_u(profile: pr.MassProfile, tau0: float, u0: float, u_dot0: float, tau_grid) -> USolution:
    """Integrate u'' + u/(kappa*M) = 0 from (u0, u_dot0) at tau0; sample on tau_grid."""
    t = _as_grid(tau_grid)
    if t[0] != tau0:
        raise ValueError("tau_grid must start at tau0")
    pr.eval_kappa_m(profile, t)  # domain check up front

    def rhs(tau, y):
        return [y[1], -y[0] / pr.eval_kappa_m(profile, tau)]

    sol = _run_ivp(rhs, (t[0], t[-1]), [u0, u_dot0], t)
    return USolution(t, sol.y[0].copy(), sol.y[1].copy(), sol.sol, profile)


_GL_X, _GL_W = np.polynomial.legendre.leggauss(10)


def _integrate_inverse_square(u_of_tau: Callable, t: np.ndarray, h_max: float = 0.01) -> np.ndarray:
    """Cumulative int_{t[0]}^{t[k]} dtau / u^2 by composite Gauss-Legendre."""
    edges = [t[:1]]
    for a, b in zip(t[:-1], t[1:]):
        n = max(1, int(np.ceil((b - a) / h_max)))
        edges.append(np.linspace(a, b, n + 1)[1:])
    fine = np.concatenate(edges)
    a, b = fine[:-1], fine[1:]
    mid, half = 0.5 * (a + b), 0.5 * (b - a)
    nodes = mid[:, None] + half[:, None] * _GL_X[None, :]
    u = u_of_tau(nodes.ravel()).reshape(nodes.shape)
    if np.any(u == 0) or np.any(np.sign(u) != np.sign(u[0, 0])):
        bad = nodes[np.nonzero(np.sign(u) != np.sign(u[0, 0]))]
        raise SingularityError("u crosses zero inside the grid", float(bad[0]) if bad.size else float(t[0]))
    pieces = half * ((_GL_W[None, :] / u**2).sum(axis=1))
    cum = np.concatenate([[0.0], np.cumsum(pieces)])
    idx = np.searchsorted(fine, t)
    return cum[idx]


def rho_from_u(u, u_dot, tau_grid, s0: float, dense: Optional[Callable] = None,
               profile: Optional[pr.MassProfile] = None) -> ErmakovSolution:
    """Build rho = u*sqrt(1 + S^2) with S = s0 + int_{tau[0]}^tau dtau'/u^2.

    ``dense`` is the integrator's continuous output (tau -> [u, u_dot]); when
    absent the samples are interpolated with a cubic Hermite spline.
    """
    t = _as_grid(tau_grid)
    u = np.asarray(u, dtype=float)
    u_dot = np.asarray(u_dot, dtype=float)
    if u.shape != t.shape or u_dot.shape != t.shape:
        raise ValueError("u, u_dot and tau_grid must have equal length")
    sgn = np.sign(u)
    if np.any(sgn == 0) or np.any(sgn != sgn[0]):
        k = int(np.nonzero((sgn == 0) | (sgn != sgn[0]))[0][0])
        raise SingularityError("u crosses zero inside the grid", float(t[k]))
    if dense is not None:
        u_of_tau = lambda x: np.asarray(dense(x))[0]
    else:
        spline = CubicHermiteSpline(t, u, u_dot)
        u_of_tau = spline
    s = s0 + _integrate_inverse_square(u_of_tau, t)
    w = np.hypot(1.0, s)
    # a negative u solution gives the same rho up to sign
    rho = np.abs(u) * w
    rho_dot = np.sign(u) * (u_dot * w + s / (u * w))
    theta = np.arctan2(s - s0, 1.0 + s * s0)
    if profile is None:
        profile = pr.Tabulated.constant()
    return ErmakovSolution(t, rho, rho_dot, theta, Source.FROM_U, profile)


def solve_rho_via_u(profile: pr.MassProfile, tau_grid, u0: float, u_dot0: float, s0: float) -> ErmakovSolution:
    t = _as_grid(tau_grid)
    usol = solve_u(profile, t[0], u0, u_dot0, t)
    return rho_from_u(usol.u, usol.u_dot, t, s0, dense=usol.dense, profile=profile)


# -- nonlinear route ------------------------------------------------------


def solve_ermakov_direct(profile: pr.MassProfile, tau0: float, rho0: float, rho_dot0: float,
                         tau_grid) -> ErmakovSolution:
    """Integrate rho'' + rho/(kappa*M) = rho^-3 together with Theta' = rho^-2."""
    t = _as_grid(tau_grid)
    if t[0] != tau0:
        raise ValueError("tau_grid must start at tau0")
    if not rho0 > 0:
        raise ValueError("rho0 must be positive")
    pr.eval_kappa_m(profile, t)
    floor = 1e-8 * rho0

    def rhs(tau, y):
        r = y[0]
        return [y[1], r**-3 - r / pr.eval_kappa_m(profile, tau), r**-2]

    def collapse(tau, y):
        return y[0] - floor

    collapse.terminal = True
    sol = _run_ivp(rhs, (t[0], t[-1]), [rho0, rho_dot0, 0.0], t, events=collapse)
    if sol.status == 1:
        raise SingularityError("rho collapsed towards zero", float(sol.t_events[0][0]))
    return ErmakovSolution(t, sol.y[0].copy(), sol.y[1].copy(), sol.y[2].copy(),
                           Source.DIRECT_ODE, profile)


def equilibrium_seed(profile: pr.MassProfile, tau0: float):
    """(rho0, rho_dot0) of the instantaneous ground state: rho0 = (kappa*M)^(1/4), rho_dot0 = 0."""
    return float(pr.eval_kappa_m(profile, tau0)) ** 0.25, 0.0


def solve(profile: pr.MassProfile, tau_grid, method: str = "auto") -> ErmakovSolution:
    """Convenience front end: closed form where available, direct ODE otherwise."""
    t = _as_grid(tau_grid)
    if method == "auto":
        method = "closed_form" if pr.has_closed_form(profile) else "direct"
    if method == "closed_form":
        return closed_form_solution(profile, t)
    if method == "from_u":
        if pr.has_closed_form(profile):
            u0 = pr.analytic_u(profile, t[0])
            du0 = pr.analytic_u_dot(profile, t[0])
            return solve_rho_via_u(profile, t, u0, du0, pr.default_s0(profile, t[0]))
        raise ValueError("from_u needs a profile with a closed-form u seed")
    if method == "direct":
        if pr.has_closed_form(profile):
            rho0, drho0 = pr.analytic_rho(profile, t[0]), pr.analytic_rho_dot(profile, t[0])
        else:
            rho0, drho0 = equilibrium_seed(profile, t[0])
        return solve_ermakov_direct(profile, t[0], rho0, drho0, t)
    raise ValueError(f"unknown method {method!r}")


# -- diagnostics ----------------------------------------------------------


def ermakov_residual(solution: ErmakovSolution, profile: Optional[pr.MassProfile] = None) -> float:
    """max |rho'' + rho/(kappa*M) - rho^-3| over interior samples.

    rho'' comes from the fourth-order central difference, so the grid must be
    uniform.
    """
    profile = solution.profile if profile is None else profile
    t, r = solution.tau, solution.rho
    if t.size < 5:
        raise ValueError("residual needs at least 5 samples")
    h = np.diff(t)
    if np.max(np.abs(h - h.mean())) > 1e-9 * max(1.0, abs(t[-1])):
        raise ValueError("residual needs a uniform tau grid")
    h = (t[-1] - t[0]) / (t.size - 1)
    d2 = (-r[4:] + 16 * r[3:-1] - 30 * r[2:-2] + 16 * r[1:-3] - r[:-4]) / (12 * h * h)
    inner = r[2:-2]
    km = np.asarray(pr.eval_kappa_m(profile, t[2:-2]))
    return float(np.max(np.abs(d2 + inner / km - inner**-3)))


def find_critical_points(solution: ErmakovSolution, tol: float = 1e-8, zero_band: float = 1e-10):
    """Isolated sign changes of rho_dot, refined by bisection to |rho_dot| < tol.

    Runs of |rho_dot| <= zero_band longer than a single sample are treated as a
    plateau (e.g. a constant-mass equilibrium) and skipped.
    """
    t, d = solution.tau, solution.rho_dot
    sgn = np.where(np.abs(d) <= zero_band, 0, np.sign(d)).astype(int)
    nz = np.nonzero(sgn)[0]
    out = []
    for i, j in zip(nz[:-1], nz[1:]):
        if sgn[i] == sgn[j] or j - i > 2:
            continue
        if j - i == 2:
            tp = float(t[i + 1])
        else:
            tp = _bisect(lambda x: solution.at(x)[1], float(t[i]), float(t[j]), tol)
        out.append((tp, float(solution.at(tp)[0])))
    return out


def _bisect(f, a: float, b: float, tol: float, max_iter: int = 200) -> float:
    fa = f(a)
    for _ in range(max_iter):
        m = 0.5 * (a + b)
        fm = f(m)
        if abs(fm) < tol and (b - a) < 1e-6:
            return m
        if fm == 0:
            return m
        if np.sign(fm) == np.sign(fa):
            a, fa = m, fm
        else:
            b = m
        if b - a <= 4 * np.finfo(float).eps * max(1.0, abs(m)):
            return m
    return 0.5 * (a + b)
