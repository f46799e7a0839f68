"""Quantum oscillator with time-dependent mass: Ermakov-invariant propagation and oracles."""

from .ermakov import ErmakovSolution, closed_form_solution, find_critical_points, solve
from .gaussian import GaussianState, make_coherent, propagate
from .profiles import Hyperbolic, Quadratic, Tabulated, eval_kappa_m

__all__ = [
    "ErmakovSolution",
    "GaussianState",
    "Hyperbolic",
    "Quadratic",
    "Tabulated",
    "closed_form_solution",
    "eval_kappa_m",
    "find_critical_points",
    "make_coherent",
    "propagate",
    "solve",
]

__version__ = "0.1.0"
