"""Szegő transfer matrices, log-scaled cocycle products and Lyapunov exponents.

Two normalizations are supported throughout:

``"A"``  the unnormalized transfer matrix ``A^z`` with ``det = z``;
``"M"``  the determinant-one matrix ``M^z = A^z / sqrt(z)``.

The exponents are related by ``gamma_A(z) = gamma_M(z) + log|z| / 2`` and
coincide on the unit circle.  ``sqrt`` is the principal branch.
"""

from __future__ import annotations

import cmath
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from . import kernels
from .dynamics import orbit_values
from .verblunsky import VerblunskySequence, rho

CONVENTIONS = ("A", "M")


def _check_z(z) -> complex:
    z = complex(z)
    if z == 0:
        raise ValueError("spectral parameter must be nonzero")
    if not (math.isfinite(z.real) and math.isfinite(z.imag)):
        raise ValueError("spectral parameter must be finite")
    return z


def _mode(convention: str, inverse: bool = False) -> int:
    if convention not in CONVENTIONS:
        raise ValueError(f"convention must be 'A' or 'M', got {convention!r}")
    base = kernels.MODE_A if convention == "A" else kernels.MODE_M
    return base + 2 if inverse else base


def a_matrix(alpha, z) -> np.ndarray:
    """``(1/rho) [[z, -conj(alpha)], [-alpha z, 1]]``."""
    z = _check_z(z)
    a = complex(alpha)
    r = rho(a)
    return np.array([[z, -a.conjugate()], [-a * z, 1.0]], dtype=np.complex128) / r


def m_matrix(alpha, z) -> np.ndarray:
    """``(1/rho) [[s, -conj(alpha)/s], [-alpha s, 1/s]]`` with ``s = sqrt(z)``."""
    z = _check_z(z)
    a = complex(alpha)
    r = rho(a)
    s = cmath.sqrt(z)
    return np.array([[s, -a.conjugate() / s], [-a * s, 1.0 / s]], dtype=np.complex128) / r


@dataclass(frozen=True)
class CocycleProduct:
    """``e^{log_scale} * matrix``, with ``matrix`` of max-entry modulus in [1/2, 2]."""

    matrix: np.ndarray
    log_scale: float
    convention: str = "M"

    def reconstruct(self) -> np.ndarray:
        return math.exp(self.log_scale) * self.matrix

    def log_norm(self) -> float:
        """``log`` of the operator norm of the reconstructed product."""
        return float(np.log(np.linalg.norm(self.matrix, 2)) + self.log_scale)

    def log_abs_det(self) -> float:
        return float(np.log(abs(np.linalg.det(self.matrix))) + 2.0 * self.log_scale)


def cocycle_product(seq: VerblunskySequence, z, n: int, convention: str = "M", start: int = 0) -> CocycleProduct:
    """The cocycle ``n``-step product based at the point with coefficient index ``start``.

    ``n > 0``: ``F(alpha_{start+n-1}) ... F(alpha_start)``;
    ``n = 0``: identity;
    ``n < 0``: ``F(alpha_{start+n})^{-1} ... F(alpha_{start-1})^{-1}``.
    """
    z = _check_z(z)
    n = int(n)
    if n == 0:
        return CocycleProduct(np.eye(2, dtype=np.complex128), 0.0, convention)
    if n > 0:
        alpha = seq.slice(start, start + n - 1)
        m, ls = kernels.transfer_product(alpha, z, _mode(convention))
    else:
        alpha = seq.slice(start + n, start - 1)[::-1]
        m, ls = kernels.transfer_product(alpha, z, _mode(convention, inverse=True))
    return CocycleProduct(m, float(ls), convention)


@dataclass(frozen=True)
class LyapunovEstimate:
    gamma: float
    stderr: float
    samples: np.ndarray
    steps: int
    convention: str


def _estimate(values: np.ndarray, steps: int, convention: str) -> LyapunovEstimate:
    per_sample = values / steps
    k = per_sample.size
    stderr = float(np.std(per_sample, ddof=1) / math.sqrt(k)) if k > 1 else float("nan")
    return LyapunovEstimate(float(np.mean(per_sample)), stderr, per_sample, steps, convention)


def orbit_starts(system, samples: int, steps: int, seed=None) -> list:
    rng = np.random.default_rng(seed)
    return system.random_points(rng, samples, (0, steps - 1))


def lyapunov_exponent(system, f, z, steps: int = 10**5, samples: int = 4, convention: str = "A", seed=0) -> LyapunovEstimate:
    """Birkhoff-type estimate of the Lyapunov exponent at ``z``.

    Each of ``samples`` orbit starts contributes ``log ||T_steps(omega)|| / steps``;
    the estimate is their mean with the standard error of the mean.
    """
    z = _check_z(z)
    if f.bound >= 1.0:
        raise ValueError("sampling function must be bounded away from the circle")
    mode = _mode(convention)
    vals = np.empty(samples)
    for k, omega in enumerate(orbit_starts(system, samples, steps, seed)):
        alpha = orbit_values(system, omega, f, 0, steps - 1)
        vals[k] = kernels.transfer_log_norms(alpha, np.array([z]), mode)[0]
    if not np.all(np.isfinite(vals)):
        raise FloatingPointError("non-finite cocycle accumulation")
    return _estimate(vals, steps, convention)


@dataclass(frozen=True)
class GridRow:
    z: complex
    gamma: float
    stderr: float
    error: str = ""


def lyapunov_grid(system, f, zs, steps: int = 10**5, samples: int = 4, convention: str = "A", seed=0, threads: int = 1) -> list:
    """Lyapunov estimates on a grid of spectral parameters sharing the same orbit starts.

    Per-point failures are recorded in ``GridRow.error`` and do not abort the grid.
    """
    zs = np.asarray(zs, dtype=np.complex128).ravel()
    mode = _mode(convention)
    starts = orbit_starts(system, samples, steps, seed)
    good = zs != 0
    table = np.full((samples, zs.size), np.nan)
    errors = ["" if g else "spectral parameter must be nonzero" for g in good]

    def run(alpha, idx):
        try:
            return kernels.transfer_log_norms(alpha, zs[idx], mode)
        except FloatingPointError:
            out = np.full(idx.size, np.nan)
            for j, i in enumerate(idx):
                try:
                    out[j] = kernels.transfer_log_norms(alpha, zs[i : i + 1], mode)[0]
                except FloatingPointError as exc:
                    errors[i] = str(exc)
            return out

    idx_all = np.flatnonzero(good)
    chunks = np.array_split(idx_all, max(1, min(threads, idx_all.size))) if idx_all.size else []
    for k, omega in enumerate(starts):
        alpha = orbit_values(system, omega, f, 0, steps - 1)
        if threads > 1 and len(chunks) > 1:
            with ThreadPoolExecutor(max_workers=threads) as pool:
                parts = list(pool.map(lambda c: run(alpha, c), chunks))
        else:
            parts = [run(alpha, c) for c in chunks]
        for c, part in zip(chunks, parts):
            table[k, c] = part
    rows = []
    for i, z in enumerate(zs):
        col = table[:, i] / steps
        if errors[i] or not np.all(np.isfinite(col)):
            rows.append(GridRow(complex(z), float("nan"), float("nan"), errors[i] or "non-finite accumulation"))
            continue
        se = float(np.std(col, ddof=1) / math.sqrt(samples)) if samples > 1 else float("nan")
        rows.append(GridRow(complex(z), float(np.mean(col)), se))
    return rows


def period_one_gamma(a, z, convention: str = "A") -> float:
    """Exact Lyapunov exponent for the constant sequence ``alpha_n = a``.

    ``log`` of the spectral radius of the single transfer matrix.
    """
    z = _check_z(z)
    r = rho(a)
    # eigenvalues of A: roots of x^2 - (z + 1)/r x + z = 0 (|det A| = |z|)
    t = (z + 1.0) / r
    disc = cmath.sqrt(t * t - 4.0 * z)
    lam = max(abs((t + disc) / 2.0), abs((t - disc) / 2.0))
    g = math.log(lam)
    if convention == "M":
        g -= 0.5 * math.log(abs(z))
    elif convention != "A":
        raise ValueError(f"convention must be 'A' or 'M', got {convention!r}")
    return g
