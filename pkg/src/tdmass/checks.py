"""
Cross-validation runs shared by the CLI ``verify`` command and the test suite.

Each function returns raw measurements; thresholds are applied by the caller.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from . import ermakov as er
from . import fock_oracle as fo
from . import gaussian as ga
from . import grid_oracle as go
from . import profiles as pr

RHO_GRID = (0.5, 0.8, 1.25, 2.0)
RHO_DOT_GRID = (-1.0, -0.3, 0.3, 1.0)


def default_start(profile: pr.MassProfile) -> float:
    """Hyperbolic runs start at tau = 0.1, where u = tanh(beta tau) is safely non-zero."""
    return 0.1 if isinstance(profile, pr.Hyperbolic) else float(profile.tau_min)


def seed_state(ermakov: er.ErmakovSolution, alpha: complex, frame: str = "invariant") -> ga.GaussianState:
    """Initial state at the first Ermakov sample, in the transformed picture.

    ``invariant``: the evolved-coherent-state family T^dagger |alpha'>, which is
    a squeezed state whenever T(tau0) is not the identity.
    ``coherent``: the transformed image F^dagger|alpha> of a coherent state.
    """
    if frame == "invariant":
        return ga.invariant_frame_state(ermakov, alpha)
    if frame == "coherent":
        return ga.fourier_map(ga.make_coherent(alpha), "inverse")
    raise ValueError(f"frame must be 'invariant' or 'coherent', got {frame!r}")


def grid_length_for(states: Sequence[ga.GaussianState], n: int = go.DEFAULT_N,
                    tol: float = go.BOUNDARY_TOL, minimum: float = go.DEFAULT_L) -> float:
    """Smallest multiple of 8 (>= minimum) keeping every state, and its Fourier image, off the edge."""
    depth = math.sqrt(4.0 * math.log(1.0 / (tol * 1e-3)))
    half = 0.0
    for s in states:
        for mean, var in ((s.mean[0], s.var_q), (s.mean[1], s.var_p)):
            half = max(half, abs(mean) + depth * math.sqrt(var))
    length = max(minimum, 8.0 * math.ceil(2.0 * half / 8.0))
    p_needed = max(abs(s.mean[1]) + depth * math.sqrt(s.var_p) for s in states)
    p_needed = max(p_needed, max(abs(s.mean[0]) + depth * math.sqrt(s.var_q) for s in states))
    if math.pi * n / length < p_needed:
        raise go.ResolutionError(f"N={n} cannot resolve momenta up to {p_needed:.3g} with L={length}")
    return length


@dataclass
class CrossValidation:
    profile: pr.MassProfile
    taus: list
    # 1 - |<analytic|grid>|^2 and 1 - |<F grid_T|grid_O>|^2 per tau, kept as the squared
    # orthogonal component so values below machine epsilon stay resolved
    infidelity: dict = field(default_factory=dict)
    picture_infidelity: dict = field(default_factory=dict)
    grid_invariant_drift: float = math.nan
    analytic_invariant_drift: float = math.nan
    length: float = math.nan

    @property
    def fidelity(self) -> dict:
        return {t: 1.0 - v for t, v in self.infidelity.items()}

    @property
    def picture_fidelity(self) -> dict:
        return {t: 1.0 - v for t, v in self.picture_infidelity.items()}


def cross_validate(profile: pr.MassProfile, alpha: complex = 1.0, taus=(0.5, 1.0, 2.0),
                   n: int = go.DEFAULT_N, dt: float = go.DEFAULT_DT, length=None,
                   frame: str = "invariant", picture: bool = True,
                   drift_stride: float = 0.05) -> CrossValidation:
    """Grid evolution of the transformed and original equations against the closed-form propagator."""
    tau0 = default_start(profile)
    t_end = max(taus)
    grid = np.linspace(tau0, t_end, int(round((t_end - tau0) / 1e-3)) + 1)
    erm = er.solve(profile, grid)
    init = seed_state(erm, alpha, frame)
    checkpoints = sorted({float(x) for x in np.round(np.arange(tau0, t_end, drift_stride), 12)}
                         | {float(t) for t in taus} | {float(tau0)})
    reports = [ga.propagate(profile, erm, t, init) for t in checkpoints]
    if length is None:
        length = grid_length_for([r.state for r in reports] + [init], n)
    out = CrossValidation(profile, list(taus), length=length)

    psi0 = go.sample_gaussian(init, n, length)
    snaps = go.evolve_transformed_series(psi0, profile, checkpoints, dt)
    invariants = []
    for t, snap, rep in zip(checkpoints, snaps, reports):
        rho, drho, _ = erm.at(t)
        invariants.append(go.observables(snap, rho, drho).invariant)
        if t in taus:
            out.infidelity[t] = go.state_distance(go.sample_gaussian(rep.state, n, length), snap) ** 2
    i0 = invariants[0]
    out.grid_invariant_drift = float(max(abs(i - i0) for i in invariants) / abs(i0))
    a0 = reports[0].invariant
    out.analytic_invariant_drift = float(max(abs(r.invariant - a0) for r in reports) / abs(a0))

    if picture:
        phi = go.apply_fourier_grid(psi0)
        t_prev = tau0
        for t in sorted(taus):
            phi = go.evolve_original(phi, profile, t_prev, t, dt)
            t_prev = t
            snap = snaps[checkpoints.index(t)]
            out.picture_infidelity[t] = go.state_distance(go.apply_fourier_grid(snap), phi) ** 2
    return out


def convergence_ratio(profile: pr.MassProfile, dt: float = 1e-3, alpha: complex = 1.0,
                      t_end: float = 2.0, n: int = go.DEFAULT_N, length=None):
    """Distance sqrt(1 - F) to the analytic state at dt and dt/2, and their ratio."""
    tau0 = default_start(profile)
    erm = er.solve(profile, np.linspace(tau0, t_end, 1001))
    init = seed_state(erm, alpha)
    final = ga.propagate(profile, erm, t_end, init).state
    if length is None:
        mids = [ga.propagate(profile, erm, t, init).state for t in np.linspace(tau0, t_end, 41)]
        length = grid_length_for(mids, n)
    psi0 = go.sample_gaussian(init, n, length)
    exact = go.sample_gaussian(final, n, length)
    errors = [go.state_distance(exact, go.evolve_transformed(psi0, profile, tau0, t_end, h))
              for h in (dt, dt / 2)]
    return errors[0], errors[1], errors[0] / errors[1]


def squeezing_at_critical_points(profile: pr.Hyperbolic, tau_max: float = 6.0, samples: int = 5901,
                                 alpha: complex = 1.0, grid: bool = True, n: int = go.DEFAULT_N,
                                 dt: float = go.DEFAULT_DT):
    """Locate tau_p and compare the analytic and grid states there."""
    tau0 = default_start(profile)
    erm = er.closed_form_solution(profile, np.linspace(tau0, tau_max, samples))
    init = seed_state(erm, alpha)
    rows = []
    for tp, rho_p in er.find_critical_points(erm):
        rep = ga.propagate(profile, erm, tp, init)
        row = {
            "tau_p": tp,
            "rho": rho_p,
            "rho_dot": float(pr.analytic_rho_dot(profile, tp)),
            "uncertainty": rep.uncertainty,
            "r": rep.r,
            "ln_rho": math.log(rho_p),
        }
        if grid:
            path = [ga.propagate(profile, erm, t, init).state for t in np.linspace(tau0, tp, 60)]
            length = grid_length_for(path, n)
            psi = go.evolve_transformed(go.sample_gaussian(init, n, length), profile, tau0, tp, dt)
            row["grid_uncertainty"] = go.observables(psi).uncertainty
            row["grid_length"] = length
        rows.append(row)
    return rows


def fock_grid_checks(dim: int = 64, sign: int = +1):
    """BCH and similarity discrepancies over the 4 x 4 (rho, rho_dot) grid."""
    out = []
    for rho in RHO_GRID:
        for rho_dot in RHO_DOT_GRID:
            out.append({
                "rho": rho,
                "rho_dot": rho_dot,
                "bch": fo.check_bch(rho, rho_dot, dim, sign=sign),
                "similarity": fo.check_invariant_similarity(rho, rho_dot, dim),
            })
    return out
