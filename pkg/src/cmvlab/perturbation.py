"""Operator-norm and Hausdorff-distance stability of CMV spectra.

The central inequality compared here is

    || E_alpha - E_alpha' ||  <=  6 sqrt(2) ||alpha - alpha'||_inf^{1/2}

on finite windows with shared boundary values, together with
``d_H(spec U, spec V) <= ||U - V||`` for unitary ``U, V``.
"""

from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass

import numpy as np
from scipy.sparse.linalg import ArpackNoConvergence, LinearOperator, eigsh

from .dynamics import SumSampling, orbit_values
from .spectral import ArcSet, chordal, eigenphases, orbit_window, spectrum_arcs, TWO_PI
from .verblunsky import VerblunskySequence, assemble_extended

BOUND_CONSTANT = 6.0 * math.sqrt(2.0)
POWER_TOL = 1e-10


class StagnationError(RuntimeError):
    """Power iteration did not reach the requested tolerance."""


def sqrt_bound(sup_distance: float) -> float:
    return BOUND_CONSTANT * math.sqrt(sup_distance)


def power_norm(d, tol: float = POWER_TOL, maxiter: int = 2000, seed: int = 0) -> float:
    """Largest singular value of the sparse matrix ``d`` by power iteration on ``d^H d``.

    Stops once the relative change of the Rayleigh quotient is below ``tol``.
    When the top two singular values are too close for that within
    ``maxiter`` steps, the iterate seeds a Lanczos run (ARPACK) on the same
    operator; :class:`StagnationError` is raised only if that also fails.
    """
    n = d.shape[1]
    if d.nnz == 0 or not np.any(d.data):
        return 0.0
    dh = d.conj().T.tocsr()
    rng = np.random.default_rng(seed)
    x = rng.standard_normal(n) + 1j * rng.standard_normal(n)
    x /= np.linalg.norm(x)
    lam_old = 0.0
    for _ in range(maxiter):
        y = dh @ (d @ x)
        lam = float(np.vdot(x, y).real)
        ny = np.linalg.norm(y)
        if ny == 0.0:
            return 0.0
        x = y / ny
        if abs(lam - lam_old) <= tol * abs(lam):
            return math.sqrt(max(lam, 0.0))
        lam_old = lam
    if n < 3:
        return float(np.linalg.norm(d.toarray(), 2))
    op = LinearOperator((n, n), matvec=lambda v: dh @ (d @ v), dtype=np.complex128)
    try:
        lam = eigsh(op, k=1, which="LA", v0=x, tol=tol, maxiter=50 * n, return_eigenvectors=False)[0]
    except ArpackNoConvergence:
        raise StagnationError(f"power iteration stagnated after {maxiter} steps") from None
    return math.sqrt(max(float(lam), lam_old, 0.0))


@dataclass(frozen=True)
class PerturbationReport:
    sup_distance: float
    op_norm: float
    bound: float
    hausdorff: float
    window: tuple = ()

    @property
    def holds(self) -> bool:
        return self.op_norm <= self.bound + 1e-9

    @property
    def spectral_holds(self) -> bool:
        """``d_H <= op_norm`` (finite unitary windows, no allowance)."""
        return math.isnan(self.hausdorff) or self.hausdorff <= self.op_norm + 1e-9

    def to_json(self) -> str:
        d = asdict(self)
        d["window"] = list(self.window)
        return json.dumps(d, sort_keys=True)


def op_norm_bound_check(seq_a: VerblunskySequence, seq_b: VerblunskySequence, window: tuple[int, int],
                        boundary=(1.0, 1.0), spectra: bool = False) -> PerturbationReport:
    """Compare ``||E_a - E_b||`` on ``window`` with the square-root bound.

    The sup distance runs over the coefficients entering the window (the
    interior ones, plus edges taken from the sequences when ``boundary`` has
    ``None`` entries).  With ``spectra`` the chordal Hausdorff distance of the
    two window spectra is included (needs unimodular boundary values).
    """
    a, b = int(window[0]), int(window[1])
    bl, br = boundary
    lo = a - 1 if bl is None else a
    hi = b if br is None else b - 1
    if hi >= lo:
        diff = seq_a.slice(lo, hi) - seq_b.slice(lo, hi)
        sup = float(np.max(np.abs(diff)))
    else:
        sup = 0.0
    wa = assemble_extended(seq_a, window, boundary)
    wb = assemble_extended(seq_b, window, boundary)
    d = (wa.to_sparse() - wb.to_sparse()).tocsr()
    d.eliminate_zeros()
    op = power_norm(d)
    hd = float("nan")
    if spectra:
        if sup == 0.0:
            hd = 0.0
        else:
            hd = hausdorff_distance(eigenphases(wa).phases, eigenphases(wb).phases)
    return PerturbationReport(sup, op, sqrt_bound(sup), hd, (a, b))


# -- Hausdorff distance -----------------------------------------------------


def _as_set(x):
    if isinstance(x, ArcSet):
        if not x.arcs:
            raise ValueError("Hausdorff distance of an empty set")
        return x
    ph = np.mod(np.asarray(x, dtype=np.float64).ravel(), TWO_PI)
    if ph.size == 0:
        raise ValueError("Hausdorff distance of an empty set")
    return np.sort(ph)


def _point_distance(points: np.ndarray, query: np.ndarray) -> np.ndarray:
    """Chordal distance from each query phase to the sorted phase array ``points``."""
    k = np.searchsorted(points, query)
    left = points[(k - 1) % points.size]
    right = points[k % points.size]
    return np.minimum(chordal(query, left), chordal(query, right))


def _distance_to(y, query: np.ndarray) -> np.ndarray:
    if isinstance(y, ArcSet):
        return y.distance(query)
    return _point_distance(y, query)


def _gap_midpoints(y) -> np.ndarray:
    if isinstance(y, ArcSet):
        g = y.gaps()
        return np.array([0.5 * (s + e) for s, e in g.arcs]) % TWO_PI
    nxt = np.append(y[1:], y[0] + TWO_PI)
    return (0.5 * (y + nxt)) % TWO_PI


def _candidates(x, y) -> np.ndarray:
    if not isinstance(x, ArcSet):
        return x
    ends = np.array([v for arc in x.arcs for v in arc]) % TWO_PI
    mids = _gap_midpoints(y)
    if mids.size:
        mids = mids[x.contains(mids)]
    return np.concatenate([ends, mids])


def directed_hausdorff(x, y) -> float:
    """``sup_{p in x} inf_{q in y} |e^{ip} - e^{iq}|``."""
    x, y = _as_set(x), _as_set(y)
    return float(np.max(_distance_to(y, _candidates(x, y))))


def hausdorff_distance(x, y) -> float:
    """Chordal Hausdorff distance between two phase arrays or arc sets (mixed allowed)."""
    return max(directed_hausdorff(x, y), directed_hausdorff(y, x))


# -- covering constants -----------------------------------------------------


@dataclass(frozen=True)
class SemicontinuityConstants:
    eps_prime: float
    eps_tilde: float
    eps: float


def semicontinuity_constants(leb_sigma: float, delta: float, m: int, arc_length_sum: float | None = None
                             ) -> SemicontinuityConstants:
    """``eps' = delta - Leb``, ``eps~ = eps' / (8 m)``, ``eps = (eps~ / (6 sqrt 2))^2``."""
    if not delta > leb_sigma:
        raise ValueError("delta must exceed the spectral measure")
    if m < 1:
        raise ValueError("cover needs at least one arc")
    ep = delta - leb_sigma
    if arc_length_sum is not None and not arc_length_sum < leb_sigma + ep / 2:
        raise ValueError("cover is too long for the requested delta")
    et = ep / (8 * m)
    return SemicontinuityConstants(ep, et, (et / BOUND_CONSTANT) ** 2)


@dataclass(frozen=True)
class CoveringProbe:
    leb_f: float
    delta: float
    arcs: int
    constants: SemicontinuityConstants
    perturbation: float
    leb_g: float

    @property
    def holds(self) -> bool:
        return self.leb_g < self.delta


def covering_probe(system, f, eta, n: int, margin: float = 0.3, samples: int = 1, seed=0) -> CoveringProbe:
    """Measure ``Leb`` of the approximate spectrum of ``f + eta_scaled`` against ``delta``.

    ``eta`` is a sampling function; it is rescaled so that its sup norm is
    nine tenths of the ``eps`` produced by :func:`semicontinuity_constants`
    for ``delta = Leb(f) + margin``.
    """
    sig_f = spectrum_arcs(system, f, n, samples, seed=seed)
    leb_f = sig_f.measure
    delta = leb_f + margin
    consts = semicontinuity_constants(leb_f, delta, max(1, len(sig_f.arcs)), leb_f)
    scale = 0.9 * consts.eps / eta.bound if eta.bound > 0 else 0.0
    g = SumSampling(f, eta.scaled(scale))
    leb_g = spectrum_arcs(system, g, n, samples, seed=seed).measure
    return CoveringProbe(leb_f, delta, len(sig_f.arcs), consts, eta.bound * scale, leb_g)


# -- stability of approximate spectra ---------------------------------------


@dataclass(frozen=True)
class StabilityReport:
    sup_distance: float
    hausdorff: float
    bound: float
    allowance: float

    @property
    def holds(self) -> bool:
        return self.hausdorff <= self.bound + self.allowance

    def to_json(self) -> str:
        return json.dumps(asdict(self), sort_keys=True)


def spectrum_stability_probe(system, f, g, n: int, samples: int = 1, seed=0) -> StabilityReport:
    """``d_H`` between window spectra for ``f`` and ``g`` on shared orbit starts.

    The right side is ``6 sqrt(2) ||f - g||^{1/2}`` (sup over the sampled
    coefficients) plus a discretization allowance ``10 / n``.
    """
    rng = np.random.default_rng(seed)
    points = system.random_points(rng, samples, (0, n))
    pa, pb, sup = [], [], 0.0
    for p in points:
        va = orbit_values(system, p, f, 0, n - 2)
        vb = orbit_values(system, p, g, 0, n - 2)
        sup = max(sup, float(np.max(np.abs(va - vb))) if va.size else 0.0)
        pa.append(eigenphases(orbit_window(system, p, f, n)).phases)
        pb.append(eigenphases(orbit_window(system, p, g, n)).phases)
    hd = hausdorff_distance(np.concatenate(pa), np.concatenate(pb))
    return StabilityReport(sup, hd, sqrt_bound(sup), 10.0 / n)


def random_pair(rng: np.random.Generator, n: int, max_delta: float = 0.5, radius: float = 0.99):
    """Two random coefficient arrays in the disk of ``radius`` with sup distance at most ``max_delta``."""
    a = radius * np.sqrt(rng.uniform(0, 1, n)) * np.exp(2j * np.pi * rng.uniform(0, 1, n))
    step = max_delta * rng.uniform(0, 1)
    d = step * np.sqrt(rng.uniform(0, 1, n)) * np.exp(2j * np.pi * rng.uniform(0, 1, n))
    b = a + d
    over = np.abs(b) >= radius
    # pull points back inside without increasing |b - a|
    b[over] = a[over] + d[over] * (radius - np.abs(a[over])) / (np.abs(d[over]) + 1e-300) * 0.5
    return a, b
