# cython: boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled transfer-matrix kernels; see ``_kernels_py`` for the reference semantics."""

import numpy as np

cimport numpy as cnp
from libc.math cimport sqrt, log, frexp, ldexp, isfinite

cnp.import_array()

cdef double LOG2 = log(2.0)

cdef extern from "complex.h" nogil:
    double complex csqrt(double complex)
    double creal(double complex)
    double cimag(double complex)
    double complex conj(double complex)


cdef inline double abs2(double complex c) noexcept nogil:
    return creal(c) * creal(c) + cimag(c) * cimag(c)


cdef int _product(const double complex[::1] alpha, double complex z, int mode,
                  double complex* out, long* exponent) noexcept nogil:
    """Accumulate the ordered product into out[0..3]; return 0 or -1 on degeneration."""
    cdef double complex p, q, a, ac, f00, f01, f10, f11
    cdef double complex m00 = 1.0, m01 = 0.0, m10 = 0.0, m11 = 1.0
    cdef double complex t00, t01, t10, t11
    cdef double r, big, s
    cdef int e
    cdef Py_ssize_t k, n = alpha.shape[0]
    cdef long expo = 0

    if mode == 1 or mode == 3:
        p = csqrt(z)
        q = 1.0 / p
    else:
        p = z
        q = 1.0 / z

    for k in range(n):
        a = alpha[k]
        ac = conj(a)
        r = 1.0 / sqrt(1.0 - abs2(a))
        if mode == 0:
            f00 = p; f01 = -ac; f10 = -a * p; f11 = 1.0
        elif mode == 1:
            f00 = p; f01 = -ac * q; f10 = -a * p; f11 = q
        elif mode == 2:
            f00 = q; f01 = ac * q; f10 = a; f11 = 1.0
        else:
            f00 = q; f01 = ac * q; f10 = a * p; f11 = p
        t00 = (f00 * m00 + f01 * m10) * r
        t01 = (f00 * m01 + f01 * m11) * r
        t10 = (f10 * m00 + f11 * m10) * r
        t11 = (f10 * m01 + f11 * m11) * r
        m00 = t00; m01 = t01; m10 = t10; m11 = t11
        big = abs2(m00)
        if abs2(m01) > big: big = abs2(m01)
        if abs2(m10) > big: big = abs2(m10)
        if abs2(m11) > big: big = abs2(m11)
        if big > 4.0 or big < 0.25:
            if big == 0.0 or not isfinite(big):
                return -1
            frexp(sqrt(big), &e)
            s = ldexp(1.0, -e)
            m00 = m00 * s; m01 = m01 * s; m10 = m10 * s; m11 = m11 * s
            expo += e
    out[0] = m00; out[1] = m01; out[2] = m10; out[3] = m11
    exponent[0] = expo
    return 0


cdef inline double _log_norm(double complex* m) noexcept nogil:
    cdef double s = abs2(m[0]) + abs2(m[1]) + abs2(m[2]) + abs2(m[3])
    cdef double complex det = m[0] * m[3] - m[1] * m[2]
    cdef double d2 = abs2(det)
    cdef double disc = s * s - 4.0 * d2
    if disc < 0.0:
        disc = 0.0
    return 0.5 * log(0.5 * (s + sqrt(disc)))


def transfer_product(alpha, z, int mode):
    if mode < 0 or mode > 3:
        raise ValueError(f"unknown factor mode {mode}")
    cdef const double complex[::1] a = np.ascontiguousarray(alpha, dtype=np.complex128)
    cdef double complex zz = complex(z)
    cdef double complex out[4]
    cdef long expo = 0
    cdef int status
    with nogil:
        status = _product(a, zz, mode, out, &expo)
    if status != 0:
        raise FloatingPointError("transfer product degenerated (zero or non-finite)")
    m = np.array([[out[0], out[1]], [out[2], out[3]]])
    return m, expo * LOG2


def transfer_log_norms(alpha, zs, int mode):
    if mode < 0 or mode > 3:
        raise ValueError(f"unknown factor mode {mode}")
    cdef const double complex[::1] a = np.ascontiguousarray(alpha, dtype=np.complex128)
    cdef const double complex[::1] zv = np.ascontiguousarray(zs, dtype=np.complex128).ravel()
    cdef Py_ssize_t i, g = zv.shape[0]
    result = np.empty(g)
    cdef double[::1] res = result
    cdef double complex out[4]
    cdef long expo = 0
    cdef int status = 0
    with nogil:
        for i in range(g):
            status = _product(a, zv[i], mode, out, &expo)
            if status != 0:
                break
            res[i] = _log_norm(out) + expo * LOG2
    if status != 0:
        raise FloatingPointError("transfer product degenerated (zero or non-finite)")
    return result
