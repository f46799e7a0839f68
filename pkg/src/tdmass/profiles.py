"""
Mass profiles kappa*M(tau) for the time-dependent-mass oscillator.

Time is the rescaled variable tau = kappa*t, and every profile is described by
the dimensionless product kappa*M(tau). In the Fourier-transformed picture this
product sets the instantaneous squared frequency 1/(kappa*M).

Two profiles carry closed-form auxiliary solutions:

    hyperbolic   kappa*M = cosh^2(beta*tau) / (2 beta^2),  u = tanh(beta*tau)
    quadratic    kappa*M = (gamma + 2 tau)^2,              u = sqrt(gamma + 2 tau)

From u the Ermakov amplitude follows as rho = u*sqrt(1 + S^2) with
dS/dtau = 1/u^2, and the accumulated phase Theta = int 1/rho^2 dtau equals
arctan(S) up to a constant.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from typing import Sequence, Union

import numpy as np
from scipy.interpolate import PchipInterpolator


class ProfileDomainError(ValueError):
    """Raised when a profile is evaluated outside its domain."""


@dataclass(frozen=True)
class Hyperbolic:
    beta: float

    def __post_init__(self):
        if not (self.beta > 0 and math.isfinite(self.beta)):
            raise ValueError(f"hyperbolic profile needs beta > 0, got {self.beta!r}")

    @property
    def tau_min(self) -> float:
        return 0.0

    @property
    def tau_max(self) -> float:
        return math.inf


@dataclass(frozen=True)
class Quadratic:
    gamma: float

    def __post_init__(self):
        if not (self.gamma > 0 and math.isfinite(self.gamma)):
            raise ValueError(f"quadratic profile needs gamma > 0, got {self.gamma!r}")

    @property
    def tau_min(self) -> float:
        return 0.0

    @property
    def tau_max(self) -> float:
        return math.inf


@dataclass(frozen=True)
class Tabulated:
    """Sampled kappa*M values, interpolated with a monotone (PCHIP) cubic."""

    tau: tuple
    kappa_m: tuple
    _interp: PchipInterpolator = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        tau = np.asarray(self.tau, dtype=float)
        km = np.asarray(self.kappa_m, dtype=float)
        if tau.ndim != 1 or tau.shape != km.shape or tau.size < 2:
            raise ValueError("tabulated profile needs at least two (tau, kappa_m) samples")
        if not np.all(np.isfinite(tau)) or not np.all(np.isfinite(km)):
            raise ValueError("tabulated samples must be finite")
        if np.any(np.diff(tau) <= 0):
            raise ValueError("tabulated tau samples must be strictly increasing")
        if np.any(km <= 0):
            raise ValueError("tabulated kappa_m samples must be positive")
        object.__setattr__(self, "tau", tuple(tau.tolist()))
        object.__setattr__(self, "kappa_m", tuple(km.tolist()))
        object.__setattr__(self, "_interp", PchipInterpolator(tau, km, extrapolate=False))

    @classmethod
    def from_samples(cls, samples: Sequence[Sequence[float]]) -> "Tabulated":
        arr = np.asarray(samples, dtype=float)
        if arr.ndim != 2 or arr.shape[1] != 2:
            raise ValueError("samples must be a list of [tau, kappa_m] pairs")
        return cls(tuple(arr[:, 0]), tuple(arr[:, 1]))

    @classmethod
    def constant(cls, value: float = 1.0, tau_max: float = 1.0e3) -> "Tabulated":
        return cls((0.0, float(tau_max)), (float(value), float(value)))

    @property
    def tau_min(self) -> float:
        return self.tau[0]

    @property
    def tau_max(self) -> float:
        return self.tau[-1]


MassProfile = Union[Hyperbolic, Quadratic, Tabulated]


def _check_domain(profile: MassProfile, tau) -> np.ndarray:
    t = np.asarray(tau, dtype=float)
    if np.any(~np.isfinite(t)):
        raise ProfileDomainError(f"non-finite tau for {profile!r}")
    if np.any(t < profile.tau_min) or np.any(t > profile.tau_max):
        raise ProfileDomainError(
            f"tau outside [{profile.tau_min}, {profile.tau_max}] for {profile!r}"
        )
    return t


def _scalar_or_array(t: np.ndarray, value):
    return float(value) if t.ndim == 0 else value


def eval_kappa_m(profile: MassProfile, tau):
    """Return kappa*M(tau) (scalar in, scalar out; array in, array out)."""
    t = _check_domain(profile, tau)
    if isinstance(profile, Hyperbolic):
        b = profile.beta
        out = np.cosh(b * t) ** 2 / (2.0 * b * b)
    elif isinstance(profile, Quadratic):
        out = (profile.gamma + 2.0 * t) ** 2
    elif isinstance(profile, Tabulated):
        nodes = np.asarray(profile.tau)
        values = np.asarray(profile.kappa_m)
        out = np.asarray(profile._interp(t), dtype=float)
        # node values are returned verbatim, not through the cubic
        idx = np.clip(np.searchsorted(nodes, t), 0, nodes.size - 1)
        hit = nodes[idx] == t
        out = np.where(hit, values[idx], out)
    else:
        raise TypeError(f"unknown profile {profile!r}")
    return _scalar_or_array(t, out)


def inverse_kappa_m(profile: MassProfile, tau):
    """Squared frequency 1/(kappa*M) of the transformed oscillator."""
    return 1.0 / eval_kappa_m(profile, tau)


def has_closed_form(profile: MassProfile) -> bool:
    return isinstance(profile, (Hyperbolic, Quadratic))


def _closed_form_pieces(profile: MassProfile, t: np.ndarray):
    """u, du/dtau and the antiderivative S = int dtau/u^2 chosen by the closed forms."""
    if isinstance(profile, Hyperbolic):
        b = profile.beta
        u = np.tanh(b * t)
        du = b / np.cosh(b * t) ** 2
        with np.errstate(divide="ignore", over="ignore"):
            s = t - 1.0 / (b * np.tanh(b * t))
        return u, du, s
    if isinstance(profile, Quadratic):
        x = profile.gamma + 2.0 * t
        u = np.sqrt(x)
        return u, 1.0 / u, 0.5 * np.log(x)
    return None


def analytic_u(profile: MassProfile, tau):
    """Closed-form solution of u'' + u/(kappa*M) = 0, or None for tabulated profiles."""
    if not has_closed_form(profile):
        return None
    t = _check_domain(profile, tau)
    u, _, _ = _closed_form_pieces(profile, t)
    return _scalar_or_array(t, u)


def analytic_u_dot(profile: MassProfile, tau):
    if not has_closed_form(profile):
        return None
    t = _check_domain(profile, tau)
    _, du, _ = _closed_form_pieces(profile, t)
    return _scalar_or_array(t, du)


def analytic_s(profile: MassProfile, tau):
    """The antiderivative S(tau) = int dtau/u^2 used by the closed-form rho."""
    if not has_closed_form(profile):
        return None
    t = _check_domain(profile, tau)
    _, _, s = _closed_form_pieces(profile, t)
    return _scalar_or_array(t, s)


def _rho_and_rate(profile: MassProfile, t: np.ndarray):
    u, du, s = _closed_form_pieces(profile, t)
    w = np.hypot(1.0, s)
    with np.errstate(divide="ignore", invalid="ignore"):
        rho = u * w
        rho_dot = du * w + s / (u * w)
    if isinstance(profile, Hyperbolic):
        # the two terms of rho_dot cancel as u -> 0; switch to the series in x = beta*tau
        b = profile.beta
        x = b * t
        c4 = 40.0 - 12.0 * b * b - (3.0 * b * b - 4.0) ** 2
        small = x < 1e-3
        rho = np.where(small, (1.0 + x * x * (b * b - 2.0) / 2.0 + x**4 * c4 / 72.0) / b, rho)
        rho_dot = np.where(small, x * (b * b - 2.0) + x**3 * c4 / 18.0, rho_dot)
    return rho, rho_dot


def analytic_rho(profile: MassProfile, tau):
    """Closed-form Ermakov amplitude rho(tau), or None for tabulated profiles."""
    if not has_closed_form(profile):
        return None
    t = _check_domain(profile, tau)
    rho, _ = _rho_and_rate(profile, t)
    return _scalar_or_array(t, rho)


def analytic_rho_dot(profile: MassProfile, tau):
    if not has_closed_form(profile):
        return None
    t = _check_domain(profile, tau)
    _, rho_dot = _rho_and_rate(profile, t)
    return _scalar_or_array(t, rho_dot)


def analytic_theta(profile: MassProfile, tau):
    """Phase Theta(tau) = int_0^tau dtau'/rho^2, normalised so that Theta(0) = 0.

    Computed as arctan(S(tau)) - arctan(S(0+)). For the hyperbolic profile
    S(0+) = -inf, so Theta = pi/2 + arctan(S) = atan2(1, -S), which keeps full
    precision near tau = 0.
    """
    if not has_closed_form(profile):
        return None
    t = _check_domain(profile, tau)
    _, _, s = _closed_form_pieces(profile, t)
    if isinstance(profile, Hyperbolic):
        theta = np.where(t == 0.0, 0.0, np.arctan2(1.0, -s))
    else:
        s0 = 0.5 * math.log(profile.gamma)
        theta = np.arctan2(s - s0, 1.0 + s * s0)
    return _scalar_or_array(t, theta)


def arccos_phase(profile: MassProfile, tau):
    """The arccos form of the phase integral, arccos(1/sqrt(1 + S^2)).

    This equals |arctan S|: it carries no branch information, so its
    derivative is sign(S)/rho^2 rather than 1/rho^2 where S < 0.
    """
    if not has_closed_form(profile):
        return None
    t = _check_domain(profile, tau)
    _, _, s = _closed_form_pieces(profile, t)
    return _scalar_or_array(t, np.arccos(1.0 / np.sqrt(1.0 + s * s)))


def default_s0(profile: MassProfile, tau0: float) -> float:
    """Value of the closed-form antiderivative S at tau0 (seed for rho_from_u)."""
    s = analytic_s(profile, tau0)
    if s is None:
        raise ProfileDomainError(f"no closed-form S for {profile!r}")
    return float(s)


# -- JSON config ----------------------------------------------------------


def profile_from_dict(spec: dict) -> MassProfile:
    """Build a profile from {"kind": "hyperbolic", "beta": 1.0} and friends."""
    if not isinstance(spec, dict) or "kind" not in spec:
        raise ValueError(f"profile spec must be an object with a 'kind' key, got {spec!r}")
    kind = str(spec["kind"]).lower()
    if kind == "hyperbolic":
        return Hyperbolic(float(spec["beta"]))
    if kind == "quadratic":
        return Quadratic(float(spec["gamma"]))
    if kind == "tabulated":
        return Tabulated.from_samples(spec["samples"])
    raise ValueError(f"unknown profile kind {spec['kind']!r}")


def profile_to_dict(profile: MassProfile) -> dict:
    if isinstance(profile, Hyperbolic):
        return {"kind": "hyperbolic", "beta": profile.beta}
    if isinstance(profile, Quadratic):
        return {"kind": "quadratic", "gamma": profile.gamma}
    if isinstance(profile, Tabulated):
        return {"kind": "tabulated", "samples": [list(p) for p in zip(profile.tau, profile.kappa_m)]}
    raise TypeError(f"unknown profile {profile!r}")


def profile_from_json(text: str) -> MassProfile:
    return profile_from_dict(json.loads(text))
