"""Schur and Carathéodory functions, OPUC recurrences and the m-function.

For a one-sided sequence ``alpha_0, alpha_1, ...`` the Schur function is
computed by the backward Schur recursion

    g_n(z) = (alpha_n + z g_{n+1}(z)) / (1 + conj(alpha_n) z g_{n+1}(z)),

closed at ``g_depth = alpha_depth``; ``g = g_0`` and the Carathéodory
function is ``G = (1 + z g) / (1 - z g)``.  With ``phi_n`` the orthonormal
polynomials and ``psi_n`` those of the sign-flipped sequence ``-alpha``,
``u_n = psi_n + G phi_n`` and ``m+ = u_1 / u_0``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .cocycle import _check_z, lyapunov_exponent
from .dynamics import orbit_values
from .verblunsky import VerblunskySequence

DENOM_TOL = 1e-14


class NonContractionError(ArithmeticError):
    """A Schur iterate left the open unit disk (invalid coefficients)."""


def _check_disk_point(z) -> complex:
    z = complex(z)
    if not abs(z) < 1.0:
        raise ValueError("z must lie in the open unit disk")
    return z


def schur_iterates(alpha: np.ndarray, z) -> np.ndarray:
    """All iterates ``g_0 .. g_depth`` for ``alpha = (alpha_0, ..., alpha_depth)``."""
    z = _check_disk_point(z)
    alpha = np.asarray(alpha, dtype=np.complex128)
    if alpha.size < 2:
        raise ValueError("depth must be at least 1")
    out = np.empty(alpha.size, dtype=np.complex128)
    g = alpha[-1]
    out[-1] = g
    for n in range(alpha.size - 2, -1, -1):
        a = alpha[n]
        zg = z * g
        g = (a + zg) / (1.0 + a.conjugate() * zg)
        out[n] = g
    if np.any(np.abs(out) >= 1.0):
        raise NonContractionError("Schur iterate left the unit disk")
    return out


def schur_function(seq: VerblunskySequence, z, depth: int) -> complex:
    """Schur function ``g(z)`` from ``alpha_0 .. alpha_depth``."""
    if depth < 1:
        raise ValueError("depth must be at least 1")
    return complex(schur_iterates(seq.slice(0, depth), z)[0])


def schur_sliding(alpha: np.ndarray, z, depth: int, count: int) -> np.ndarray:
    """``g`` for the shifted sequences ``alpha[k:]``, ``k = 0 .. count-1``."""
    z = _check_disk_point(z)
    alpha = np.asarray(alpha, dtype=np.complex128)
    if alpha.size < count + depth:
        raise ValueError("coefficient array too short for the requested windows")
    g = alpha[depth : depth + count].copy()
    for j in range(depth - 1, -1, -1):
        a = alpha[j : j + count]
        zg = z * g
        g = (a + zg) / (1.0 + a.conj() * zg)
    if np.any(np.abs(g) >= 1.0):
        raise NonContractionError("Schur iterate left the unit disk")
    return g


def caratheodory(g, z):
    """``G = (1 + z g) / (1 - z g)``; works elementwise on arrays."""
    zg = np.asarray(z) * np.asarray(g)
    denom = 1.0 - zg
    if np.any(np.abs(denom) < DENOM_TOL):
        raise ZeroDivisionError("Carathéodory denominator collapsed")
    out = (1.0 + zg) / denom
    return complex(out) if np.ndim(out) == 0 else out


@dataclass(frozen=True)
class OPUCPolynomialState:
    degree: int
    phi: complex
    phi_star: complex
    psi: complex
    psi_star: complex


def _szego(alpha: np.ndarray, z: complex):
    phi, phis = 1 + 0j, 1 + 0j
    for a in alpha:
        a = complex(a)
        r = math.sqrt(1.0 - abs(a) ** 2)
        phi, phis = (z * phi - a.conjugate() * phis) / r, (phis - a * z * phi) / r
    return phi, phis


def opuc_recurrence(seq: VerblunskySequence, z, n: int) -> OPUCPolynomialState:
    """``phi_n, phi_n*, psi_n, psi_n*`` at ``z`` by the Szegő recurrence."""
    z = complex(z)
    if n < 0:
        raise ValueError("degree must be non-negative")
    alpha = seq.slice(0, n - 1)
    phi, phis = _szego(alpha, z)
    psi, psis = _szego(-alpha, z)
    return OPUCPolynomialState(n, phi, phis, psi, psis)


def aleksandrov_phi(seq: VerblunskySequence, z, n: int, lam) -> tuple[complex, complex]:
    """``(phi_n, phi_n*)`` of the Aleksandrov family with coefficients ``lam * alpha``."""
    return _szego(complex(lam) * seq.slice(0, n - 1), complex(z))


def _m_from_g(a0, g, z):
    G = caratheodory(g, z)
    u0 = 1.0 + G
    if np.any(np.abs(u0) < DENOM_TOL):
        raise ZeroDivisionError("u_0 collapsed")
    a0c = np.conj(a0)
    r0 = np.sqrt(1.0 - np.abs(a0) ** 2)
    phi1 = (z - a0c) / r0
    psi1 = (z + a0c) / r0
    return (psi1 + G * phi1) / u0


def m_plus(seq: VerblunskySequence, z, depth: int) -> complex:
    """``m+(z) = u_1(z) / u_0(z)`` with the Schur function truncated at ``depth``."""
    z = _check_z(_check_disk_point(z))
    g = schur_function(seq, z, depth)
    return complex(_m_from_g(seq[0], g, z))


def u_solution(seq: VerblunskySequence, z, n: int, depth: int) -> tuple[complex, complex]:
    """``(u_n, u_n*) = (psi_n + G phi_n, -psi_n* + G phi_n*)``."""
    z = _check_disk_point(z)
    G = caratheodory(schur_function(seq, z, depth), z)
    s = opuc_recurrence(seq, z, n)
    return s.psi + G * s.phi, -s.psi_star + G * s.phi_star


@dataclass(frozen=True)
class MGammaCheck:
    mean_log_m: float
    log_z_minus_gamma: float
    gamma: float

    @property
    def residual(self) -> float:
        return abs(self.mean_log_m - self.log_z_minus_gamma)


def m_gamma_sides(system, f, z, depth: int = 400, samples: int = 10**4, gamma=None,
                  steps: int = 10**5, orbit_samples: int = 4, seed=0) -> MGammaCheck:
    """Both sides of ``avg log|m+| = log|z| - gamma_A(z)``.

    The left side is a Birkhoff average over ``samples`` consecutive points of
    one orbit.  ``gamma`` defaults to a cocycle estimate (A-normalization).
    """
    z = _check_z(_check_disk_point(z))
    rng = np.random.default_rng(seed)
    (omega,) = system.random_points(rng, 1, (0, samples + depth))
    alpha = orbit_values(system, omega, f, 0, samples + depth)
    g = schur_sliding(alpha, z, depth, samples)
    m = _m_from_g(alpha[:samples], g, z)
    lhs = float(np.mean(np.log(np.abs(m))))
    if gamma is None:
        gamma = lyapunov_exponent(system, f, z, steps, orbit_samples, "A", seed).gamma
    return MGammaCheck(lhs, math.log(abs(z)) - gamma, float(gamma))


def verify_m_gamma(system, f, z, depth: int = 400, samples: int = 10**4, **kwargs) -> float:
    """Residual ``|avg log|m+| - (log|z| - gamma_A(z))|``."""
    return m_gamma_sides(system, f, z, depth, samples, **kwargs).residual
