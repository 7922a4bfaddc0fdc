"""Pure-Python transfer-matrix kernels.

Reference implementation of the routines in ``_kernels.pyx``.  Both modules
expose the same functions with the same semantics; :mod:`cmvlab.kernels`
picks one at import time.

Factor modes
------------
0  A^z(alpha)      = (1/rho) [[z, -conj(alpha)], [-alpha z, 1]]
1  M^z(alpha)      = (1/rho) [[s, -conj(alpha)/s], [-alpha s, 1/s]],  s = sqrt(z)
2  A^z(alpha)^{-1} = (1/(rho z)) [[1, conj(alpha)], [alpha z, z]]
3  M^z(alpha)^{-1} = (1/rho) [[1/s, conj(alpha)/s], [alpha s, s]]

Products are accumulated as ``P <- F(alpha[k]) P`` for k = 0, 1, ...; whenever
the largest entry modulus of ``P`` leaves [1/2, 2] the matrix is divided by
an exact power of two and the exponent is added to the log scale.
"""

import cmath
import math

import numpy as np

LOG2 = math.log(2.0)
MODES = (0, 1, 2, 3)


def _factor_scalars(mode, z):
    if mode not in MODES:
        raise ValueError(f"unknown factor mode {mode}")
    if mode in (1, 3):
        s = cmath.sqrt(z)
        return s, 1.0 / s
    return z, 1.0 / z


def _step(mode, a, r, p, q, m00, m01, m10, m11):
    """Return F(a) @ [[m00, m01], [m10, m11]]; (p, q) from _factor_scalars."""
    ac = a.conjugate()
    if mode == 0:
        f00, f01, f10, f11 = p, -ac, -a * p, 1.0
    elif mode == 1:
        f00, f01, f10, f11 = p, -ac * q, -a * p, q
    elif mode == 2:
        f00, f01, f10, f11 = q, ac * q, a, 1.0
    else:
        f00, f01, f10, f11 = q, ac * q, a * p, p
    return (
        (f00 * m00 + f01 * m10) * r,
        (f00 * m01 + f01 * m11) * r,
        (f10 * m00 + f11 * m10) * r,
        (f10 * m01 + f11 * m11) * r,
    )


def _rescale(m00, m01, m10, m11):
    big = max(abs(m00), abs(m01), abs(m10), abs(m11))
    if 0.5 <= big <= 2.0:
        return m00, m01, m10, m11, 0
    if big == 0.0 or not math.isfinite(big):
        raise FloatingPointError("transfer product degenerated (zero or non-finite)")
    e = math.frexp(big)[1]
    s = math.ldexp(1.0, -e)
    return m00 * s, m01 * s, m10 * s, m11 * s, e


def _product_scalar(alpha, z, mode):
    p, q = _factor_scalars(mode, complex(z))
    m00, m01, m10, m11 = 1 + 0j, 0j, 0j, 1 + 0j
    exponent = 0
    for a in alpha:
        a = complex(a)
        r = 1.0 / math.sqrt(1.0 - (a.real * a.real + a.imag * a.imag))
        m00, m01, m10, m11 = _step(mode, a, r, p, q, m00, m01, m10, m11)
        m00, m01, m10, m11, e = _rescale(m00, m01, m10, m11)
        exponent += e
    return (m00, m01, m10, m11), exponent


def transfer_product(alpha, z, mode):
    """Ordered product F(alpha[n-1]) ... F(alpha[0]) in log-scaled form.

    Returns ``(matrix, log_scale)`` with ``matrix`` a 2x2 complex array whose
    largest entry modulus lies in [1/2, 2] (or the identity for empty input)
    and ``log_scale`` the natural log of the extracted factor.
    """
    alpha = np.ascontiguousarray(alpha, dtype=np.complex128)
    (m00, m01, m10, m11), exponent = _product_scalar(alpha, z, mode)
    return np.array([[m00, m01], [m10, m11]]), exponent * LOG2


def _log_norm(m00, m01, m10, m11):
    s = abs(m00) ** 2 + abs(m01) ** 2 + abs(m10) ** 2 + abs(m11) ** 2
    d = abs(m00 * m11 - m01 * m10)
    disc = max(s * s - 4.0 * d * d, 0.0)
    return 0.5 * math.log(0.5 * (s + math.sqrt(disc)))


def transfer_log_norms(alpha, zs, mode):
    """log of the operator norm of the full product, one value per z in ``zs``."""
    alpha = np.ascontiguousarray(alpha, dtype=np.complex128)
    zs = np.ascontiguousarray(zs, dtype=np.complex128).ravel()
    if zs.size < 16:
        out = np.empty(zs.size)
        for i, z in enumerate(zs):
            m, exponent = _product_scalar(alpha, z, mode)
            out[i] = _log_norm(*m) + exponent * LOG2
        return out
    return _log_norms_vectorized(alpha, zs, mode)


def _log_norms_vectorized(alpha, zs, mode):
    if mode not in MODES:
        raise ValueError(f"unknown factor mode {mode}")
    if mode in (1, 3):
        p = np.sqrt(zs)
        q = 1.0 / p
    else:
        p = zs.copy()
        q = 1.0 / zs
    m00 = np.ones_like(zs)
    m01 = np.zeros_like(zs)
    m10 = np.zeros_like(zs)
    m11 = np.ones_like(zs)
    exponent = np.zeros(zs.size, dtype=np.int64)
    for a in alpha.tolist():
        r = 1.0 / math.sqrt(1.0 - (a.real * a.real + a.imag * a.imag))
        m00, m01, m10, m11 = _step(mode, a, r, p, q, m00, m01, m10, m11)
        big = np.maximum(
            np.maximum(np.abs(m00), np.abs(m01)), np.maximum(np.abs(m10), np.abs(m11))
        )
        out = (big > 2.0) | (big < 0.5)
        if out.any():
            if not np.all(np.isfinite(big)) or np.any(big == 0.0):
                raise FloatingPointError("transfer product degenerated (zero or non-finite)")
            e = np.where(out, np.frexp(big)[1], 0)
            s = np.ldexp(1.0, -e)
            m00, m01, m10, m11 = m00 * s, m01 * s, m10 * s, m11 * s
            exponent += e
    s = np.abs(m00) ** 2 + np.abs(m01) ** 2 + np.abs(m10) ** 2 + np.abs(m11) ** 2
    d = np.abs(m00 * m11 - m01 * m10)
    disc = np.maximum(s * s - 4.0 * d * d, 0.0)
    return 0.5 * np.log(0.5 * (s + np.sqrt(disc))) + exponent * LOG2
