"""
Truncated number-basis operator engine.

Checks operator identities at the matrix level, where the Gaussian and grid
layers only see moments: the BCH factorisation of the squeeze operator T, the
similarity T I T^dagger = (p^2 + q^2)/2, and the action of the Fourier
operator on coherent states.

Quadratic exponentials are badly truncated near the basis edge, and a strong
shear exp(-i c q^2) spreads even low number states far upward. Every check
therefore builds its exponentials in a padded working basis (``work_factor``
times ``dim``) and reports the discrepancy on the leading ``dim - 16`` block
only. Quadratic generators preserve parity and are tridiagonal inside each
parity sector, so they are exponentiated exactly through a tridiagonal
eigen-decomposition.
"""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass

import numpy as np
from scipy.linalg import eigh_tridiagonal, expm

TRUSTED_MARGIN = 16
WORK_FACTOR = 8


def build_quadratures(dim: int):
    """Return dense (q, p, a, a_dag) with a = (q + i p)/sqrt(2)."""
    if dim < 8:
        raise ValueError("dim must be at least 8")
    a = np.diag(np.sqrt(np.arange(1, dim, dtype=float)), 1).astype(complex)
    a_dag = a.conj().T
    q = (a + a_dag) / np.sqrt(2)
    p = (a - a_dag) / (1j * np.sqrt(2))
    return q, p, a, a_dag


def number_operator(dim: int) -> np.ndarray:
    return np.diag(np.arange(dim, dtype=float)).astype(complex)


def matrix_exp(m: np.ndarray) -> np.ndarray:
    """exp(m) for a dense square matrix.

    Anti-Hermitian input goes through the Hermitian eigen-decomposition
    (exactly unitary output); anything else through scipy's Pade
    scaling-and-squaring.
    """
    m = np.asarray(m)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise ValueError("matrix_exp needs a square matrix")
    if not np.all(np.isfinite(m)):
        raise OverflowError("matrix_exp: non-finite entries")
    h = -1j * m
    scale = max(1.0, float(np.abs(m).max()))
    if np.allclose(h, h.conj().T, rtol=0, atol=1e-14 * scale):
        w, v = np.linalg.eigh(0.5 * (h + h.conj().T))
        return (v * np.exp(1j * w)) @ v.conj().T
    out = expm(m)
    if not np.all(np.isfinite(out)):
        raise OverflowError("matrix_exp overflowed; rescale the argument")
    return out


# -- exact exponentials of quadratic generators ---------------------------


def quadratic_generator(x: float, y: float, z: float, dim: int) -> np.ndarray:
    """Galerkin projection of G = x q^2 + y p^2 + z (qp + pq)/2 onto the first dim states."""
    n = np.arange(dim, dtype=float)
    g = np.diag((x + y) * (n + 0.5)).astype(complex)
    off = np.sqrt((n[:-2] + 1) * (n[:-2] + 2)) * ((x - y) - 1j * z) / 2
    g[np.arange(dim - 2), np.arange(2, dim)] = off
    g[np.arange(2, dim), np.arange(dim - 2)] = off.conj()
    return g


def expi_quadratic(x: float, y: float, z: float, dim: int) -> np.ndarray:
    """exp(i G) for G = x q^2 + y p^2 + z (qp + pq)/2, projected onto dim states.

    G couples n to n and n +- 2 only, so each parity sector is Hermitian
    tridiagonal; a diagonal phase similarity makes it real symmetric.
    """
    n = np.arange(dim, dtype=float)
    out = np.zeros((dim, dim), dtype=complex)
    for parity in (0, 1):
        idx = np.arange(parity, dim, 2)
        k = n[idx]
        diag = (x + y) * (k + 0.5)
        off = np.sqrt((k[:-1] + 1) * (k[:-1] + 2)) * ((x - y) - 1j * z) / 2
        mag = np.abs(off)
        phase = np.ones(idx.size, dtype=complex)
        unit = np.where(mag > 0, off.conj() / np.where(mag > 0, mag, 1.0), 1.0)
        phase[1:] = np.cumprod(unit)
        if idx.size == 1:
            w, v = diag, np.ones((1, 1))
        else:
            w, v = eigh_tridiagonal(diag, mag)
        block = (v * np.exp(1j * w)) @ v.T
        out[np.ix_(idx, idx)] = phase[:, None] * block * phase.conj()[None, :]
    return out


def dilation_generator_coeffs(s: float):
    """exp(i (s/2)(qp + pq)) as (x, y, z)."""
    return 0.0, 0.0, s


def shear_generator_coeffs(c: float):
    """exp(i c q^2) as (x, y, z)."""
    return c, 0.0, 0.0


def t_operator(rho: float, rho_dot: float, dim: int) -> np.ndarray:
    """T = exp(i (ln rho/2)(qp + pq)) exp(-i (rho_dot/(2 rho)) q^2)."""
    s = np.log(rho)
    return expi_quadratic(*dilation_generator_coeffs(s), dim) @ expi_quadratic(
        *shear_generator_coeffs(-rho_dot / (2 * rho)), dim)


def invariant_operator(rho: float, rho_dot: float, dim: int) -> np.ndarray:
    """I = (q^2/rho^2 + (rho p - rho_dot q)^2)/2, projected onto dim states."""
    return quadratic_generator(0.5 * (rho**-2 + rho_dot**2), 0.5 * rho**2, -rho * rho_dot, dim)


def oscillator_hamiltonian(dim: int) -> np.ndarray:
    return quadratic_generator(0.5, 0.5, 0.0, dim)


# -- checks ---------------------------------------------------------------


@dataclass
class CheckReport:
    check: str
    parameters: dict
    discrepancy: float
    trusted_block: int
    tolerance: float

    @property
    def passed(self) -> bool:
        return bool(self.discrepancy < self.tolerance)

    def to_dict(self) -> dict:
        d = asdict(self)
        d["pass"] = self.passed
        return d

    def to_json(self) -> str:
        return json.dumps(self.to_dict())


def _block(dim: int) -> int:
    return dim - TRUSTED_MARGIN


def check_bch(rho: float, rho_dot: float, dim: int = 64, sign: int = +1,
              work_factor: int = WORK_FACTOR) -> float:
    """Max element discrepancy between the combined and factorised forms of T.

    Combined exponent: i (ln rho/2)(qp + pq + sign * 2 rho rho_dot/(1 - rho^2) q^2);
    ``sign=+1`` is the coefficient that the factorisation requires, ``sign=-1``
    the opposite one (kept for mutation testing).
    """
    if rho <= 0:
        raise ValueError("rho must be positive")
    work = work_factor * dim
    m = _block(dim)
    s = np.log(rho)
    # ln(rho)/(1 - rho^2) -> -1/2 as rho -> 1
    ratio = -0.5 if rho == 1.0 else s / (1 - rho**2)
    combined = expi_quadratic(sign * rho * rho_dot * ratio, 0.0, s, work)
    product = t_operator(rho, rho_dot, work)
    return float(np.abs(combined[:m, :m] - product[:m, :m]).max())


def check_invariant_similarity(rho: float, rho_dot: float, dim: int = 64,
                               work_factor: int = WORK_FACTOR) -> float:
    """Max element discrepancy between T I T^dagger and (p^2 + q^2)/2 on the trusted block."""
    if rho <= 0:
        raise ValueError("rho must be positive")
    work = work_factor * dim
    m = _block(dim)
    t = t_operator(rho, rho_dot, work)
    rows = t[:m]
    sim = rows @ invariant_operator(rho, rho_dot, work) @ rows.conj().T
    return float(np.abs(sim - oscillator_hamiltonian(m)).max())


def bch_report(rho, rho_dot, dim=64, tolerance=1e-6, sign=+1) -> CheckReport:
    return CheckReport("bch", {"rho": rho, "rho_dot": rho_dot, "dim": dim, "sign": sign},
                       check_bch(rho, rho_dot, dim, sign=sign), _block(dim), tolerance)


def similarity_report(rho, rho_dot, dim=64, tolerance=1e-8) -> CheckReport:
    return CheckReport("invariant_similarity", {"rho": rho, "rho_dot": rho_dot, "dim": dim},
                       check_invariant_similarity(rho, rho_dot, dim), _block(dim), tolerance)


# -- states ---------------------------------------------------------------


def coherent_vector(alpha: complex, dim: int) -> np.ndarray:
    """Truncated e^{-|alpha|^2/2} sum alpha^n/sqrt(n!) |n>, renormalised."""
    alpha = complex(alpha)
    if abs(alpha) ** 2 >= dim / 4:
        raise ValueError(f"|alpha|^2 = {abs(alpha)**2:.3g} too large for dim={dim}")
    v = np.empty(dim, dtype=complex)
    v[0] = 1.0
    for n in range(1, dim):
        v[n] = v[n - 1] * alpha / np.sqrt(n)
    v *= np.exp(-abs(alpha) ** 2 / 2)
    return v / np.linalg.norm(v)


def fourier_operator(dim: int) -> np.ndarray:
    """F = exp(-i (pi/4)(p^2 + q^2)) e^{i pi/4}, built from the generator."""
    return expi_quadratic(-np.pi / 4, -np.pi / 4, 0.0, dim) * np.exp(1j * np.pi / 4)


def overlap2(u: np.ndarray, v: np.ndarray) -> float:
    return float(abs(np.vdot(u, v)) ** 2)


def moments(vec: np.ndarray):
    """(mean_q, mean_p, var_q, var_p, cov_qp) of a number-basis vector."""
    n = np.arange(vec.size)
    a1 = np.vdot(vec, _lower(vec))
    a2 = np.vdot(vec, _lower(_lower(vec)))
    nbar = np.vdot(vec, n * vec).real
    mq, mp = np.sqrt(2) * a1.real, np.sqrt(2) * a1.imag
    # <q^2> = (2 Re<a^2> + 2n + 1)/2, <p^2> = (2n + 1 - 2 Re<a^2>)/2, <(qp + pq)/2> = Im<a^2>
    q2 = a2.real + nbar + 0.5
    p2 = nbar + 0.5 - a2.real
    return mq, mp, q2 - mq**2, p2 - mp**2, a2.imag - mq * mp


def _lower(vec):
    n = np.arange(vec.size)
    out = np.zeros_like(vec)
    out[:-1] = np.sqrt(n[1:]) * vec[1:]
    return out


@dataclass
class FourierConvention:
    """Outcome of applying F to coherent states: F|alpha> = |sign * i * alpha>."""

    sign: int  # -1: F|alpha> = |-i alpha>;  +1: |+i alpha>
    overlaps: dict

    def to_dict(self):
        return {"maps_alpha_to": "-i*alpha" if self.sign < 0 else "+i*alpha",
                "sign": self.sign, "overlaps": self.overlaps}


def fourier_convention(dim: int = 64, tol: float = 1e-8) -> FourierConvention:
    f = fourier_operator(dim)
    overlaps = {}
    votes = set()
    for alpha in (1.0, 1j, 1 + 1j):
        out = f @ coherent_vector(alpha, dim)
        minus = overlap2(coherent_vector(-1j * alpha, dim), out)
        plus = overlap2(coherent_vector(1j * alpha, dim), out)
        overlaps[str(alpha)] = {"minus_i": minus, "plus_i": plus}
        if minus > 1 - tol and plus <= 1 - tol:
            votes.add(-1)
        elif plus > 1 - tol and minus <= 1 - tol:
            votes.add(+1)
        else:
            raise RuntimeError(f"Fourier operator maps |{alpha}> to neither |+-i alpha>")
    if len(votes) != 1:
        raise RuntimeError("inconsistent Fourier convention across test states")
    return FourierConvention(votes.pop(), overlaps)


def apply_dilation_vector(vec: np.ndarray, s: float) -> np.ndarray:
    """exp(i (s/2)(qp + pq)) applied to a number-basis vector."""
    return expi_quadratic(*dilation_generator_coeffs(s), vec.size) @ vec


def apply_shear_vector(vec: np.ndarray, c: float) -> np.ndarray:
    """exp(i c q^2) applied to a number-basis vector."""
    return expi_quadratic(*shear_generator_coeffs(c), vec.size) @ vec


def apply_t_dagger_vector(vec: np.ndarray, rho: float, rho_dot: float) -> np.ndarray:
    return t_operator(rho, rho_dot, vec.size).conj().T @ vec
