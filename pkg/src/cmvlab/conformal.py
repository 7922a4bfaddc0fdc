"""Conformal maps from the disk onto a triangle-shaped region touching an arc.

``Phi1`` is the Schwarz-Christoffel map of the unit disk onto the open
equilateral triangle with vertices ``-l/2, l/2, (sqrt 3 / 2) l i``,

    Phi1(zeta) = C1 + C2 int_0^zeta prod_k (1 - xi / zeta_k)^{-2/3} dxi,

with prevertices the cube roots of unity ``zeta_1 = e^{2 pi i/3}``,
``zeta_2 = e^{4 pi i/3}``, ``zeta_3 = 1`` (so the product is ``1 - xi^3``).
``Phi2(w) = e^{i theta'} (w - i) / (w + i)`` sends the real axis to the unit
circle and the base ``A1 A2`` onto an arc ``I``.  ``Phi = Phi2 o Phi1``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.integrate import quad_vec
from scipy.optimize import brentq
from scipy.special import gamma as gamma_fn

TWO_PI = 2.0 * math.pi
SQRT3 = math.sqrt(3.0)
PREVERTICES = np.exp(2j * np.pi * np.array([1.0, 2.0, 0.0]) / 3.0)
PREVERTEX_ANGLES = (TWO_PI / 3.0, 2.0 * TWO_PI / 3.0, TWO_PI)
# int_0^1 (1 - t^3)^{-2/3} dt = B(1/3, 1/3) / 3
SC_UNIT = gamma_fn(1.0 / 3.0) ** 2 / (3.0 * gamma_fn(2.0 / 3.0))
QUAD_TOL = 1e-9


class QuadratureError(RuntimeError):
    pass


def arc_length_of_side(ell: float) -> float:
    """Length of ``Phi2([-l/2, l/2])``: ``2 (pi - 2 arctan(2 / l))``."""
    return 2.0 * (math.pi - 2.0 * math.atan(2.0 / ell))


@dataclass(frozen=True)
class TriangleMapParams:
    ell: float
    theta_prime: float = 0.0

    def __post_init__(self):
        if not 0.0 < self.ell <= 1.0:
            raise ValueError("side length must lie in (0, 1]")

    @property
    def vertices(self) -> np.ndarray:
        l = self.ell
        return np.array([-l / 2, l / 2, 0.5 * SQRT3 * l * 1j])

    @property
    def prevertices(self) -> np.ndarray:
        return PREVERTICES.copy()

    @property
    def c1(self) -> complex:
        """Image of 0: the centroid ``i l / (2 sqrt 3)``."""
        return 1j * self.ell / (2.0 * SQRT3)

    @property
    def c2(self) -> complex:
        return 1j * self.ell / (SQRT3 * SC_UNIT)

    @property
    def arc(self) -> tuple[float, float]:
        """``(start, end)`` of the arc ``I = Phi2(A1 A2)``, counterclockwise."""
        half = arc_length_of_side(self.ell) / 2.0
        mid = (self.theta_prime + math.pi) % TWO_PI
        return (mid - half, mid + half)


def _sc_integral(zeta: np.ndarray, tol: float = QUAD_TOL) -> np.ndarray:
    """``int_0^zeta (1 - xi^3)^{-2/3} dxi`` for points of the closed disk.

    Points within 1/2 of a prevertex ``zeta_k`` are integrated from ``zeta_k``
    along the chord with ``xi = zeta_k + (zeta - zeta_k) u^3``, which removes the
    ``-2/3`` singularity; the rest are integrated along the ray from 0.
    """
    zeta = np.asarray(zeta, dtype=np.complex128)
    flat = zeta.ravel()
    out = np.empty(flat.size, dtype=np.complex128)
    dist = np.abs(flat[:, None] - PREVERTICES[None, :])
    k = np.argmin(dist, axis=1)
    near = dist[np.arange(flat.size), k] < 0.5

    def run(fun, size):
        val, err = quad_vec(fun, 0.0, 1.0, epsabs=1e-13, epsrel=1e-12, limit=2000)
        if not np.all(np.isfinite(val)) or err > tol * max(1.0, math.sqrt(size)):
            raise QuadratureError(f"quadrature error estimate {err:.3e}")
        return val

    far = np.flatnonzero(~near)
    if far.size:
        z = flat[far]
        out[far] = run(lambda t: z * (1.0 - (t * z) ** 3) ** (-2.0 / 3.0), far.size)
    for j in range(3):
        idx = np.flatnonzero(near & (k == j))
        if not idx.size:
            continue
        zk = PREVERTICES[j]
        others = [PREVERTICES[i] for i in range(3) if i != j]
        d = flat[idx] - zk
        c = -d / zk  # 1 - xi / zk = c u^3
        cpow = np.zeros(idx.size, dtype=np.complex128)
        nz = c != 0
        cpow[nz] = c[nz] ** (-2.0 / 3.0)
        pref = 3.0 * d * cpow

        def fun(u, d=d, pref=pref, zk=zk, others=others):
            xi = zk + d * u**3
            return pref * ((1.0 - xi / others[0]) * (1.0 - xi / others[1])) ** (-2.0 / 3.0)

        out[idx] = zk * SC_UNIT + run(fun, idx.size)
    return out.reshape(zeta.shape)


def _check_disk(zeta) -> np.ndarray:
    zeta = np.asarray(zeta, dtype=np.complex128)
    if np.any(np.abs(zeta) > 1.0 + 1e-12):
        raise ValueError("points must lie in the closed unit disk")
    return zeta


def sc_triangle_map(zeta, params: TriangleMapParams):
    """``Phi1(zeta)`` for ``|zeta| <= 1`` (scalar or array)."""
    z = _check_disk(zeta)
    w = params.c1 + params.c2 * _sc_integral(z)
    return complex(w) if w.ndim == 0 else w


def sc_derivative(zeta, params: TriangleMapParams):
    z = np.asarray(zeta, dtype=np.complex128)
    return params.c2 * (1.0 - z**3) ** (-2.0 / 3.0)


def moebius(w, theta_prime: float):
    """``e^{i theta'} (w - i) / (w + i)``."""
    w = np.asarray(w, dtype=np.complex128)
    if np.any(w == -1j):
        raise ZeroDivisionError("pole at w = -i")
    z = np.exp(1j * theta_prime) * (w - 1j) / (w + 1j)
    return complex(z) if z.ndim == 0 else z


def moebius_inverse(z, theta_prime: float):
    u = np.asarray(z, dtype=np.complex128) * np.exp(-1j * theta_prime)
    w = 1j * (1.0 + u) / (1.0 - u)
    return complex(w) if w.ndim == 0 else w


def full_map(zeta, params: TriangleMapParams):
    """``Phi = Phi2 o Phi1``."""
    return moebius(sc_triangle_map(zeta, params), params.theta_prime)


def full_derivative(zeta, params: TriangleMapParams):
    w = np.asarray(sc_triangle_map(zeta, params))
    return np.exp(1j * params.theta_prime) * 2j / (w + 1j) ** 2 * sc_derivative(zeta, params)


def fit_arc_params(arc) -> TriangleMapParams:
    """Parameters for which ``Phi2(A1 A2)`` is the arc ``(start, end)``.

    ``theta'`` rotates the midpoint of the arc to -1 and ``l`` solves
    ``arc_length_of_side(l) = |I|`` by bracketed root finding.
    """
    start, end = float(arc[0]), float(arc[1])
    length = end - start
    if length <= 0.0:
        raise ValueError("arc must have positive length")
    if length > math.pi / 2 + 1e-15:
        raise ValueError("arc length must not exceed pi/2")
    ell = brentq(lambda l: arc_length_of_side(l) - length, 1e-300, 1.0, xtol=1e-15, rtol=4 * np.finfo(float).eps)
    mid = 0.5 * (start + end)
    return TriangleMapParams(ell, (mid - math.pi) % TWO_PI)


def side_endpoints(params: TriangleMapParams) -> tuple[complex, complex]:
    """``Phi2(A1), Phi2(A2)``."""
    a1, a2, _ = params.vertices
    return moebius(a1, params.theta_prime), moebius(a2, params.theta_prime)


def in_triangle(w, params: TriangleMapParams, tol: float = 0.0) -> np.ndarray:
    """Whether ``w`` lies in the closed triangle (sign test on the three sides)."""
    w = np.asarray(w, dtype=np.complex128)
    v = params.vertices
    ok = np.ones(w.shape, dtype=bool)
    for a, b in ((v[0], v[1]), (v[1], v[2]), (v[2], v[0])):
        cross = ((b - a).conjugate() * (w - a)).imag / abs(b - a)
        ok &= cross >= -tol
    return ok


def origin_outside_closure(params: TriangleMapParams) -> bool:
    """``0 = Phi2(i)`` lies outside the closed image iff ``i`` is outside the closed triangle."""
    return not bool(in_triangle(1j, params))


# -- boundary quadrature ----------------------------------------------------


@dataclass(frozen=True)
class BoundaryRule:
    """Quadrature nodes on the circle, graded toward the prevertex angles.

    ``weights`` sum to 1 (normalized arc length); ``part`` labels nodes
    0 on the preimage of ``I`` (``theta_1 .. theta_2``), 1 on that of ``J``
    (``theta_2 .. theta_3``) and 2 on that of ``K`` (``0 .. theta_1``).
    """

    angles: np.ndarray
    weights: np.ndarray
    part: np.ndarray


def boundary_rule(points: int = 2048) -> BoundaryRule:
    """Gauss-Legendre on each prevertex arc with the grading
    ``theta = theta_a + L v^3 / (v^3 + (1 - v)^3)``, which makes the
    ``|theta - theta_k|^{1/3}`` corner behaviour of ``Phi`` smooth in ``v``."""
    per = max(2, points // 3)
    x, wx = np.polynomial.legendre.leggauss(per)
    v = 0.5 * (x + 1.0)
    wv = 0.5 * wx
    den = v**3 + (1.0 - v) ** 3
    g = v**3 / den
    dg = 3.0 * v**2 * (1.0 - v) ** 2 / den**2
    arcs = [(PREVERTEX_ANGLES[0], PREVERTEX_ANGLES[1], 0), (PREVERTEX_ANGLES[1], PREVERTEX_ANGLES[2], 1),
            (0.0, PREVERTEX_ANGLES[0], 2)]
    ang, wt, part = [], [], []
    for a, b, lab in arcs:
        L = b - a
        ang.append(a + L * g)
        wt.append(L * dg * wv / TWO_PI)
        part.append(np.full(per, lab))
    return BoundaryRule(np.concatenate(ang), np.concatenate(wt), np.concatenate(part))


@dataclass(frozen=True)
class MeanValueResult:
    center_value: float
    boundary_mean: float

    @property
    def residual(self) -> float:
        return abs(self.center_value - self.boundary_mean)


def _boundary_values(h, params: TriangleMapParams, rule: BoundaryRule) -> np.ndarray:
    z = full_map(np.exp(1j * rule.angles), params)
    vals = np.asarray(h(z), dtype=np.float64)
    if vals.shape != rule.angles.shape:
        raise ValueError("h must return one value per point")
    return vals


def mean_value_check(h, params: TriangleMapParams, points: int = 2048) -> MeanValueResult:
    """Compare ``h(Phi(0))`` with ``(1/2 pi) int h(Phi(e^{i theta})) d theta``.

    ``h`` takes an array of points of the closed image and returns real
    values; it should be harmonic on ``Phi(D)``.
    """
    if not origin_outside_closure(params):
        raise ValueError("0 lies in the closure of the image region")
    rule = boundary_rule(points)
    vals = _boundary_values(h, params, rule)
    centre = float(np.asarray(h(np.array([full_map(0.0, params)])), dtype=np.float64)[0])
    return MeanValueResult(centre, float(np.sum(rule.weights * vals)))


def split_boundary_integral(h, params: TriangleMapParams, points: int = 2048) -> tuple[float, float, float]:
    """The boundary mean split into the parts over the preimages of ``I``, ``J`` and ``K``."""
    rule = boundary_rule(points)
    vals = _boundary_values(h, params, rule)
    return tuple(float(np.sum((rule.weights * vals)[rule.part == p])) for p in range(3))


def boundary_preimage(phi, params: TriangleMapParams) -> np.ndarray:
    """Angles ``theta`` in ``(theta_1, theta_2)`` with ``Phi(e^{i theta}) = e^{i phi}`` for ``e^{i phi}`` in ``I``."""
    phi = np.atleast_1d(np.asarray(phi, dtype=np.float64))
    w = moebius_inverse(np.exp(1j * phi), params.theta_prime)
    w = np.real(np.atleast_1d(w))
    a, b = PREVERTEX_ANGLES[0], PREVERTEX_ANGLES[1]
    out = np.empty(phi.size)
    for i, target in enumerate(w):
        # Re Phi1 decreases from l/2 at theta_2 ... to -l/2 at theta_1 along this side
        fun = lambda t: float(np.real(sc_triangle_map(np.exp(1j * t), params))) - target
        out[i] = brentq(fun, a, b, xtol=1e-13)
    return out


def direct_arc_integral(g, params: TriangleMapParams, points: int = 64) -> float:
    """``(1/2 pi) int_I g(e^{i phi}) (d theta / d phi) d phi`` integrated in the arc variable.

    ``d theta / d phi = 1 / |Phi'(e^{i theta})|`` at the boundary preimage.
    The grading of :func:`boundary_rule` is reused on ``I`` since the density
    vanishes at the ends like ``(phi - phi_k)^2``.
    """
    start, end = params.arc
    x, wx = np.polynomial.legendre.leggauss(points)
    v = 0.5 * (x + 1.0)
    den = v**3 + (1.0 - v) ** 3
    L = end - start
    phi = start + L * v**3 / den
    wphi = L * 0.5 * wx * 3.0 * v**2 * (1.0 - v) ** 2 / den**2
    theta = boundary_preimage(phi, params)
    jac = 1.0 / np.abs(full_derivative(np.exp(1j * theta), params))
    vals = np.asarray(g(np.exp(1j * phi)), dtype=np.float64)
    return float(np.sum(wphi * jac * vals) / TWO_PI)


# -- geometric probes -------------------------------------------------------


def conformality_distortion(params: TriangleMapParams, centre, radius: float = 1e-4, probes: int = 64) -> float:
    """``max|Phi(c + r e^{it}) - Phi(c)| / min(...) - 1`` for a small circle."""
    t = np.linspace(0.0, TWO_PI, probes, endpoint=False)
    ring = complex(centre) + radius * np.exp(1j * t)
    d = np.abs(full_map(ring, params) - full_map(complex(centre), params))
    return float(d.max() / d.min() - 1.0)


def rotation_defect(params: TriangleMapParams, zeta) -> float:
    """``max |Phi1(omega zeta) - C1 - omega (Phi1(zeta) - C1)|`` with ``omega = e^{2 pi i / 3}``."""
    zeta = np.asarray(zeta, dtype=np.complex128)
    om = np.exp(2j * np.pi / 3)
    lhs = sc_triangle_map(om * zeta, params) - params.c1
    rhs = om * (sc_triangle_map(zeta, params) - params.c1)
    return float(np.max(np.abs(lhs - rhs)))


def map_table(params: TriangleMapParams, zeta) -> np.ndarray:
    """Rows ``(zeta, Phi1(zeta), Phi(zeta))`` as a complex array of shape (n, 3)."""
    zeta = np.asarray(zeta, dtype=np.complex128).ravel()
    w = np.asarray(sc_triangle_map(zeta, params))
    return np.column_stack([zeta, w, np.asarray(moebius(w, params.theta_prime))])


def map_table_csv(table: np.ndarray) -> str:
    lines = ["zeta_re,zeta_im,w_re,w_im,z_re,z_im"]
    for row in table:
        lines.append(",".join(f"{v!r}" for c in row for v in (float(c.real), float(c.imag))))
    return "\n".join(lines) + "\n"
