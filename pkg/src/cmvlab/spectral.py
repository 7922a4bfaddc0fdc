"""Spectra of finite CMV windows, density of states and Lyapunov zero sets.

Phases are angles in [0, 2 pi).  Distances between points of the circle are
chordal, ``|e^{ia} - e^{ib}| = 2 |sin((a - b)/2)|``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg as sla
from scipy.optimize import linear_sum_assignment

from .cocycle import lyapunov_exponent, lyapunov_grid
from .dynamics import orbit_values
from .verblunsky import BandedUnitaryWindow, VerblunskySequence, assemble_extended, assemble_window

TWO_PI = 2.0 * math.pi
RESIDUAL_TOL = 1e-8


class EigenSolverError(RuntimeError):
    def __init__(self, message, window=None):
        super().__init__(message)
        self.window = window


def chordal(a, b):
    """Chordal distance between phases ``a`` and ``b`` (broadcasting)."""
    return 2.0 * np.abs(np.sin((np.asarray(a) - np.asarray(b)) / 2.0))


# -- arcs -------------------------------------------------------------------


@dataclass(frozen=True)
class ArcSet:
    """A finite union of closed arcs, stored as disjoint ``(start, end)`` pairs.

    ``start`` lies in [0, 2 pi) and ``end - start`` is the arc length, so an arc
    may wrap past 2 pi.  After normalization arcs are sorted, pairwise
    disjoint and non-abutting; the full circle is ``[(0, 2 pi)]``.
    """

    arcs: tuple = ()

    @classmethod
    def from_pairs(cls, pairs) -> "ArcSet":
        """Normalize arbitrary ``(start, end)`` pairs (counterclockwise from start to end)."""
        items = []
        for s, e in pairs:
            s, e = float(s), float(e)
            length = e - s
            if length < 0:
                length = (length % TWO_PI)
            if length >= TWO_PI:
                return cls(((0.0, TWO_PI),))
            s = s % TWO_PI
            items.append((s, s + length))
        return cls(_merge(items))

    @classmethod
    def full(cls) -> "ArcSet":
        return cls(((0.0, TWO_PI),))

    @classmethod
    def around(cls, phases, half_width: float) -> "ArcSet":
        """Union of arcs of angular half-width ``half_width`` centred at ``phases``."""
        phases = np.asarray(phases, dtype=np.float64).ravel()
        if half_width >= math.pi:
            return cls.full() if phases.size else cls()
        return cls.from_pairs(zip(phases - half_width, phases + half_width))

    @property
    def measure(self) -> float:
        return leb_measure(self)

    def __bool__(self) -> bool:
        return bool(self.arcs)

    def contains(self, phases) -> np.ndarray:
        ph = np.mod(np.asarray(phases, dtype=np.float64), TWO_PI)
        out = np.zeros(ph.shape, dtype=bool)
        for s, e in self.arcs:
            out |= ((ph >= s) & (ph <= e)) | ((ph + TWO_PI >= s) & (ph + TWO_PI <= e))
        return out

    def distance(self, phases) -> np.ndarray:
        """Chordal distance from each phase to the set."""
        ph = np.asarray(phases, dtype=np.float64)
        if not self.arcs:
            raise ValueError("distance to an empty set")
        ends = np.array([x for arc in self.arcs for x in arc])
        d = np.min(chordal(ph[..., None], ends), axis=-1)
        return np.where(self.contains(ph), 0.0, d)

    def gaps(self) -> "ArcSet":
        """Closure of the complement."""
        if not self.arcs:
            return ArcSet.full()
        if self.arcs == ((0.0, TWO_PI),):
            return ArcSet()
        pairs = []
        for k, (s, e) in enumerate(self.arcs):
            s_next = self.arcs[(k + 1) % len(self.arcs)][0]
            if k + 1 == len(self.arcs):
                s_next += TWO_PI
            pairs.append((e, s_next))
        return ArcSet.from_pairs(pairs)

    def to_csv(self) -> str:
        lines = ["start,end"]
        lines += [f"{s!r},{e!r}" for s, e in self.arcs]
        return "\n".join(lines) + "\n"


def _merge(items) -> tuple:
    if not items:
        return ()
    items = sorted(items)
    merged = [list(items[0])]
    for s, e in items[1:]:
        if s <= merged[-1][1]:
            merged[-1][1] = max(merged[-1][1], e)
        else:
            merged.append([s, e])
    # arcs running past 2 pi may swallow arcs near 0
    while len(merged) > 1 and merged[-1][1] - TWO_PI >= merged[0][0]:
        s0, e0 = merged.pop(0)
        merged[-1][1] = max(merged[-1][1], e0 + TWO_PI)
    if merged[-1][1] - merged[-1][0] >= TWO_PI or (len(merged) == 1 and merged[0][1] - TWO_PI >= merged[0][0]):
        return ((0.0, TWO_PI),)
    return tuple((float(s), float(e)) for s, e in merged)


def leb_measure(arcs: ArcSet) -> float:
    return float(sum(e - s for s, e in arcs.arcs))


# -- eigenphases ------------------------------------------------------------


@dataclass(frozen=True)
class EigenphaseList:
    phases: np.ndarray = field(repr=False)
    window_size: int
    max_residual: float
    vectors: np.ndarray = field(default=None, repr=False)

    def __len__(self):
        return self.phases.size

    @property
    def eigenvalues(self) -> np.ndarray:
        return np.exp(1j * self.phases)


def _solve_bands(window: BandedUnitaryWindow) -> np.ndarray:
    """The window in ``scipy.linalg.solve_banded`` layout with (l, u) = (2, 2)."""
    n = window.size
    ab = np.zeros((5, n), dtype=np.complex128)
    for d in range(-2, 3):
        m = n - abs(d)
        if m <= 0:
            continue
        if d >= 0:
            ab[2 - d, d:] = window.bands[d + 2][:m]
        else:
            ab[2 - d, :m] = window.bands[d + 2][:m]
    return ab


def _window_det(window: BandedUnitaryWindow) -> complex:
    bl, br = window.boundary
    if bl is None or br is None:
        raise ValueError("determinant formula needs a decoupled window")
    return (-1.0) ** (window.size - 1) * (-complex(bl)) * complex(br).conjugate()


def _symmetric_route(window: BandedUnitaryWindow) -> np.ndarray:
    """Eigenvalue guesses for a real orthogonal window from ``(E + E^T) / 2``."""
    n = window.size
    e = window.bands.real
    # lower banded storage: s[k, j] = S[j + k, j]
    s = np.zeros((3, n))
    s[0] = e[2]
    s[1, : n - 1] = 0.5 * (e[1][: n - 1] + e[3][: n - 1])
    s[2, : n - 2] = 0.5 * (e[0][: n - 2] + e[4][: n - 2])
    c = np.clip(np.sort(sla.eigvals_banded(s, lower=True)), -1.0, 1.0)
    det = _window_det(window).real
    n_minus = 1 if det < 0 else 0
    n_plus = (n - n_minus) % 2
    phases = []
    lo, hi = 0, n
    if n_minus:
        phases.append(math.pi)
        lo = 1
    if n_plus:
        phases.append(0.0)
        hi = n - 1
    mid = c[lo:hi]
    for k in range(0, mid.size - 1, 2):
        t = math.acos(0.5 * (mid[k] + mid[k + 1]))
        phases.extend((t, TWO_PI - t))
    return np.exp(1j * np.array(phases))


def _clusters(lam: np.ndarray, tol: float):
    """Index groups of eigenvalue guesses closer than ``tol`` (chained, around the circle)."""
    order = np.argsort(np.mod(np.angle(lam), TWO_PI))
    if order.size == 0:
        return []
    groups = [[order[0]]]
    for a, b in zip(order[:-1], order[1:]):
        if abs(lam[b] - lam[a]) < tol:
            groups[-1].append(b)
        else:
            groups.append([b])
    if len(groups) > 1 and abs(lam[groups[0][0]] - lam[groups[-1][-1]]) < tol:
        groups[0] = groups.pop() + groups[0]
    return groups


DENSE_MAX = 8


def _shifted_solve(ab, x):
    with np.errstate(divide="ignore", invalid="ignore"):
        try:
            y = sla.solve_banded((2, 2), ab, x, check_finite=False)
        except np.linalg.LinAlgError:
            y = None
    if y is None or not np.all(np.isfinite(y)):
        # shift is an exact eigenvalue: move it off by a rounding-level amount
        ab = ab.copy()
        ab[2] -= 1e-14 * (1 + 1j)
        y = sla.solve_banded((2, 2), ab, x, check_finite=False)
    return y


def _refine_dense(window: BandedUnitaryWindow, guesses: np.ndarray, keep_vectors: bool):
    d = window.to_dense()
    mu, v = np.linalg.eig(d)
    _, cols = linear_sum_assignment(np.abs(guesses[:, None] - mu[None, :]))
    mu, v = mu[cols] / np.abs(mu[cols]), v[:, cols]
    v = v / np.linalg.norm(v, axis=0)
    res = np.linalg.norm(d @ v - v * mu, axis=0)
    return mu, res, v if keep_vectors else None


def _refine(window: BandedUnitaryWindow, guesses: np.ndarray, max_iter: int = 8, cluster_tol: float = 1e-6,
            guard: int = 2, keep_vectors: bool = False):
    """Block inverse iteration and Rayleigh-Ritz on each cluster of guesses.

    Each cluster of ``k`` nearby guesses gets a block of ``k + guard``
    vectors, so near-degenerate eigenvalues are resolved inside a nearly
    invariant subspace.  Ritz values are matched to the guesses by a minimum
    cost assignment.
    """
    n = window.size
    if n <= DENSE_MAX:
        return _refine_dense(window, guesses, keep_vectors)
    ab0 = _solve_bands(window)
    e = window.to_sparse()
    rng = np.random.default_rng(12345)
    lam_out = np.empty(guesses.size, dtype=np.complex128)
    res = np.empty(guesses.size)
    vecs = np.empty((n, guesses.size), dtype=np.complex128) if keep_vectors else None
    for group in _clusters(guesses, cluster_tol):
        k = len(group)
        m = min(n, k + guard)
        g = guesses[group]
        shift = np.mean(g)
        ab = ab0.copy()
        ab[2] -= shift
        x = rng.standard_normal((n, m)) + 1j * rng.standard_normal((n, m))
        for it in range(max_iter):
            x = _shifted_solve(ab, x)
            x, _ = np.linalg.qr(x)
            if it < 1:
                continue
            ex = e @ x
            mu, y = np.linalg.eig(x.conj().T @ ex)
            rows, cols = linear_sum_assignment(np.abs(g[:, None] - mu[None, :]))
            v = x @ y[:, cols]
            v /= np.linalg.norm(v, axis=0)
            mu = mu[cols] / np.abs(mu[cols])
            r = np.linalg.norm(e @ v - v * mu, axis=0)
            if r.max() <= 0.01 * RESIDUAL_TOL:
                break
        idx = np.asarray(group)[rows]
        lam_out[idx] = mu
        res[idx] = r
        if keep_vectors:
            vecs[:, idx] = v
    return lam_out, res, vecs


def eigenphases(window: BandedUnitaryWindow, method: str = "auto", check: bool = True,
                vectors: bool = False) -> EigenphaseList:
    """Eigenphases of a decoupled (unitary) window.

    ``method`` is ``"symmetric"`` (real windows only), ``"dense"`` or ``"auto"``.
    With ``check`` every eigenpair is refined by inverse iteration and its
    residual ``||E v - e^{i theta} v||`` must not exceed ``1e-8``.
    ``vectors`` keeps the refined unit eigenvectors (columns, in phase order).
    """
    if vectors and not check:
        raise ValueError("eigenvectors come from the refinement step")
    if not window.decoupled:
        raise ValueError("eigenphases need a window with unimodular boundary values")
    if method == "auto":
        method = "symmetric" if window.is_real() else "dense"
    if method == "symmetric":
        if not window.is_real():
            raise ValueError("symmetric route needs a real window")
        lam = _symmetric_route(window)
    elif method == "dense":
        lam = sla.eigvals(window.to_dense(), check_finite=False)
        lam = lam / np.abs(lam)
    else:
        raise ValueError(f"unknown method {method!r}")
    max_res = float("nan")
    vecs = None
    if check:
        lam, res, vecs = _refine(window, lam, keep_vectors=vectors)
        max_res = float(res.max()) if res.size else 0.0
        if max_res > RESIDUAL_TOL:
            raise EigenSolverError(
                f"eigenpair residual {max_res:.3e} exceeds {RESIDUAL_TOL:g} on window {window.sites}",
                window,
            )
    phases = np.mod(np.angle(lam), TWO_PI)
    # angles a rounding step below 2 pi belong to the eigenvalue 1
    phases[phases > TWO_PI - 1e-12] = 0.0
    order = np.argsort(phases, kind="stable")
    return EigenphaseList(phases[order], window.size, max_res, None if vecs is None else vecs[:, order])


def truncation_spectrum(seq: VerblunskySequence, window: tuple[int, int], boundary=(1.0, 1.0),
                        method: str = "auto", check: bool = True) -> EigenphaseList:
    """Eigenphases of the boundary-decoupled extended window on the sites ``window``."""
    return eigenphases(assemble_extended(seq, window, boundary), method, check)


def weyl_residuals(seq: VerblunskySequence, window: tuple[int, int], eig: EigenphaseList) -> np.ndarray:
    """``||(E - e^{i theta}) v||`` for each window eigenvector padded by zeros, with ``E``
    the extended CMV matrix of ``seq``.

    Since ``E`` is unitary this bounds the distance from ``e^{i theta}`` to its
    spectrum; eigenvalues of states living at the cut have large residuals.
    ``seq`` must cover ``window[0] - 3 .. window[1] + 2``.
    """
    if eig.vectors is None:
        raise ValueError("eigenvectors are required")
    a, b = int(window[0]), int(window[1])
    # rows a-2 .. b+2 of E applied to vectors supported on a..b do not see the
    # edge values of this padded window
    big = assemble_extended(seq, (a - 2, b + 2), (1.0, 1.0)).to_sparse()
    n = b - a + 1
    v = np.zeros((n + 4, eig.vectors.shape[1]), dtype=np.complex128)
    v[2 : n + 2] = eig.vectors
    r = big @ v - v * eig.eigenvalues[None, :]
    return np.linalg.norm(r, axis=0)


def orbit_window(system, omega, f, n: int, boundary=(1.0, 1.0)) -> BandedUnitaryWindow:
    """The decoupled window on sites ``0..n-1`` for the orbit of ``omega``."""
    interior = orbit_values(system, omega, f, 0, n - 2) if n > 1 else np.empty(0, np.complex128)
    return assemble_window(interior, 0, boundary[0], boundary[1], tuple(boundary))


def sample_spectra(system, f, n: int, samples: int = 1, seed=0, boundary=(1.0, 1.0), method="auto") -> list:
    rng = np.random.default_rng(seed)
    points = system.random_points(rng, samples, (0, n))
    return [eigenphases(orbit_window(system, p, f, n, boundary), method) for p in points]


# -- density of states ------------------------------------------------------


@dataclass(frozen=True)
class DOSHistogram:
    edges: np.ndarray = field(repr=False)
    masses: np.ndarray = field(repr=False)
    count: int

    @property
    def centers(self) -> np.ndarray:
        return 0.5 * (self.edges[:-1] + self.edges[1:])

    @property
    def bin_width(self) -> float:
        return float(np.max(np.diff(self.edges)))

    def to_csv(self) -> str:
        lines = ["left,right,mass"]
        lines += [f"{a!r},{b!r},{m!r}" for a, b, m in zip(self.edges[:-1].tolist(), self.edges[1:].tolist(), self.masses.tolist())]
        return "\n".join(lines) + "\n"


def histogram(phases, bins: int) -> DOSHistogram:
    phases = np.mod(np.asarray(phases, dtype=np.float64).ravel(), TWO_PI)
    edges = np.linspace(0.0, TWO_PI, bins + 1)
    # integer binning so phases 2 pi k / bins land exactly in bin k
    idx = np.floor(phases / TWO_PI * bins + 1e-9).astype(np.int64) % bins
    counts = np.bincount(idx, minlength=bins).astype(np.float64)
    return DOSHistogram(edges, counts / phases.size, int(phases.size))


@dataclass(frozen=True)
class DOSEstimate:
    histogram: DOSHistogram
    rho_inf: float
    phases: np.ndarray = field(repr=False)


def dos_estimate(system, f, n: int, samples: int = 1, bins: int = 256, seed=0, boundary=(1.0, 1.0)) -> DOSEstimate:
    """Pooled eigenphase histogram over ``samples`` orbit windows of size ``n``.

    The geometric mean ``rho_inf`` of the ``rho_n`` is taken over the same
    coefficients.
    """
    rng = np.random.default_rng(seed)
    points = system.random_points(rng, samples, (0, n))
    pooled, logs = [], []
    for p in points:
        interior = orbit_values(system, p, f, 0, n - 2)
        w = assemble_window(interior, 0, boundary[0], boundary[1], tuple(boundary))
        pooled.append(eigenphases(w).phases)
        logs.append(np.log(np.sqrt(1.0 - np.abs(interior) ** 2)))
    phases = np.concatenate(pooled)
    logs = np.concatenate(logs)
    rho_inf = math.exp(math.fsum(logs.tolist()) / logs.size) if logs.size else 1.0
    return DOSEstimate(histogram(phases, bins), rho_inf, phases)


def thouless_rhs(dos: DOSHistogram, rho_inf: float, z) -> float:
    """``-log(rho_inf) + sum_bins mass * log|z - e^{i theta_bin}|``."""
    z = complex(z)
    if abs(abs(z) - 1.0) <= dos.bin_width:
        raise ValueError("z is within one bin width of the unit circle")
    pot = float(np.sum(dos.masses * np.log(np.abs(z - np.exp(1j * dos.centers)))))
    return -math.log(rho_inf) + pot


@dataclass(frozen=True)
class ThoulessCheck:
    gamma: float
    gamma_stderr: float
    rhs: float

    @property
    def residual(self) -> float:
        return abs(self.gamma - self.rhs)


def thouless_check(system, f, z, n_dos: int, n_cocycle: int, dos_samples: int = 1,
                   cocycle_samples: int = 4, bins: int = 4096, seed=0) -> ThoulessCheck:
    dos = dos_estimate(system, f, n_dos, dos_samples, bins, seed)
    gam = lyapunov_exponent(system, f, z, n_cocycle, cocycle_samples, "A", seed + 1 if isinstance(seed, int) else seed)
    return ThoulessCheck(gam.gamma, gam.stderr, thouless_rhs(dos.histogram, dos.rho_inf, z))


def thouless_residual(system, f, z, n_dos: int, n_cocycle: int, **kwargs) -> float:
    """``|gamma_A(z) - thouless_rhs|`` from independent DOS and cocycle estimates."""
    return thouless_check(system, f, z, n_dos, n_cocycle, **kwargs).residual


# -- spectrum approximation and zero sets -----------------------------------


def spectrum_arcs(system, f, n: int, samples: int = 1, eps: float | None = None, seed=0) -> ArcSet:
    """Union over orbit windows of eigenphases inflated by ``eps`` (default ``10 / n``)."""
    if eps is None:
        eps = 10.0 / n
    if eps < 0:
        raise ValueError("inflation must be non-negative")
    phases = np.concatenate([s.phases for s in sample_spectra(system, f, n, samples, seed)])
    return ArcSet.around(phases, eps)


@dataclass(frozen=True)
class ZeroSetEstimate:
    measure: float
    tau: float
    angles: np.ndarray = field(repr=False)
    widths: np.ndarray = field(repr=False)
    gammas: np.ndarray = field(repr=False)
    stderrs: np.ndarray = field(repr=False)

    @property
    def mask(self) -> np.ndarray:
        return self.gammas < self.tau


def arc_grid(arc: ArcSet, points: int):
    """Cell centres and widths of a uniform grid of ``points`` cells over ``arc``."""
    total = arc.measure
    if total <= 0:
        return np.empty(0), np.empty(0)
    centres, widths = [], []
    for s, e in arc.arcs:
        k = max(1, int(round(points * (e - s) / total)))
        edges = np.linspace(s, e, k + 1)
        centres.append(0.5 * (edges[:-1] + edges[1:]))
        widths.append(np.diff(edges))
    return np.mod(np.concatenate(centres), TWO_PI), np.concatenate(widths)


def kotani_zero_measure(system, f, arc: ArcSet, grid_points: int, steps: int, tau: float | None = None,
                        samples: int = 2, seed=0, threads: int = 1) -> ZeroSetEstimate:
    """Measure of the grid cells in ``arc`` on which the Lyapunov estimate is below ``tau``.

    ``tau`` defaults to ``max(1e-2, 3 * median stderr)``.
    """
    angles, widths = arc_grid(arc, grid_points)
    rows = lyapunov_grid(system, f, np.exp(1j * angles), steps, samples, "A", seed, threads)
    gam = np.array([r.gamma for r in rows])
    se = np.array([r.stderr for r in rows])
    if tau is None:
        med = float(np.nanmedian(se)) if np.any(np.isfinite(se)) else 0.0
        tau = max(1e-2, 3.0 * med)
    if tau <= 0:
        raise ValueError("threshold must be positive")
    mask = gam < tau
    return ZeroSetEstimate(float(np.sum(widths[mask])), float(tau), angles, widths, gam, se)


# -- singular part ----------------------------------------------------------


@dataclass(frozen=True)
class CircleMeasure:
    """Atoms ``(phase, mass)`` plus a piecewise constant density on bins ``edges``."""

    atoms: tuple = ()
    edges: np.ndarray = None
    density: np.ndarray = None

    def density_mass(self, lo: float, hi: float) -> float:
        """Density mass on ``[lo, hi]`` with ``0 <= lo <= hi <= 2 pi``."""
        if self.edges is None:
            return 0.0
        e = np.asarray(self.edges)
        d = np.asarray(self.density)
        left = np.clip(e[:-1], lo, hi)
        right = np.clip(e[1:], lo, hi)
        return float(np.sum(d * (right - left)))


def _cell_masses(measure: CircleMeasure, B: ArcSet, grid: np.ndarray):
    """Masses of the open cells between consecutive grid points, restricted to ``B``,
    plus masses of atoms sitting exactly on grid points."""
    k = grid.size
    cell = np.zeros(k)
    node = np.zeros(k)
    for i in range(k):
        lo = grid[i]
        hi = grid[i + 1] if i + 1 < k else grid[0] + TWO_PI
        for s, e in B.arcs:
            for shift in (-TWO_PI, 0.0, TWO_PI):
                a, b = max(lo, s + shift), min(hi, e + shift)
                if b > a:
                    for a2, b2 in _unwrap(a, b):
                        cell[i] += measure.density_mass(a2, b2)
    for ph, m in measure.atoms:
        ph = float(ph) % TWO_PI
        if not B.contains(ph):
            continue
        j = np.searchsorted(grid, ph, side="right") - 1
        if j >= 0 and abs(grid[j] - ph) < 1e-15:
            node[j] += m
        else:
            cell[j % k] += m
    return cell, node


def _unwrap(a: float, b: float):
    """Split ``[a, b]`` into pieces inside [0, 2 pi]."""
    out = []
    while a < 0:
        a += TWO_PI
        b += TWO_PI
    while a >= TWO_PI:
        a -= TWO_PI
        b -= TWO_PI
    if b <= TWO_PI:
        out.append((a, b))
    else:
        out.append((a, TWO_PI))
        out.append((0.0, b - TWO_PI))
    return out


def _best_union(cell: np.ndarray, node: np.ndarray, budget: int) -> float:
    """Max mass of at most ``budget`` chosen cells; a node atom counts when both
    neighbouring cells are chosen (it is then interior to one open arc)."""
    k = cell.size
    if budget <= 0:
        return 0.0
    if budget >= k:
        return float(cell.sum() + node.sum())
    neg = -np.inf
    best = 0.0
    # fix whether cell 0 is chosen to break the circle
    for first in (0, 1):
        # dp[c][s]: best mass using c cells among 0..i, s = whether cell i chosen
        dp = np.full((budget + 1, 2), neg)
        if first:
            dp[1, 1] = cell[0]
        else:
            dp[0, 0] = 0.0
        for i in range(1, k):
            new = np.full((budget + 1, 2), neg)
            new[:, 0] = np.maximum(dp[:, 0], dp[:, 1])
            # choose cell i; node i (between cell i-1 and i) gains if cell i-1 chosen
            new[1:, 1] = np.maximum(dp[:-1, 0] + cell[i], dp[:-1, 1] + cell[i] + node[i])
            dp = new
        val = np.max(dp[:, 0])
        val1 = dp[:, 1] + (node[0] if first else 0.0)
        best = max(best, float(val), float(np.max(val1)))
    return best


@dataclass(frozen=True)
class SingularPartEstimate:
    estimate: float
    eps: np.ndarray = field(repr=False)
    lengths: np.ndarray = field(repr=False)
    sups: np.ndarray = field(repr=False)


def singular_part_estimate(measure: CircleMeasure, B: ArcSet, grid, eps_seq) -> SingularPartEstimate:
    """Estimate ``mu_s(B)`` as the small-``eps`` limit of ``sup mu(B cap J)``.

    ``J`` ranges over finite unions of open arcs with endpoints in ``grid`` of
    total length ``< eps``.  The sups are extrapolated linearly in the achieved
    length ``Leb(J)`` to zero length.
    """
    grid = np.sort(np.mod(np.asarray(grid, dtype=np.float64), TWO_PI))
    if grid.size < 3:
        raise ValueError("grid must have at least three points")
    eps_seq = np.asarray(eps_seq, dtype=np.float64)
    if np.any(np.diff(eps_seq) >= 0):
        raise ValueError("eps sequence must be strictly decreasing")
    widths = np.diff(np.append(grid, grid[0] + TWO_PI))
    h = float(widths.max())
    if not np.allclose(widths, h, rtol=1e-9):
        raise ValueError("grid must be uniform")
    if h * 2 >= eps_seq[-1]:
        raise ValueError("grid too coarse for the smallest eps: cannot isolate atoms")
    cell, node = _cell_masses(measure, B, grid)
    lengths, sups = [], []
    for eps in eps_seq:
        budget = int(math.ceil(eps / h)) - 1
        lengths.append(budget * h)
        sups.append(_best_union(cell, node, budget))
    lengths, sups = np.array(lengths), np.array(sups)
    if lengths.size >= 2 and lengths[-2] > lengths[-1]:
        slope = (sups[-2] - sups[-1]) / (lengths[-2] - lengths[-1])
        est = sups[-1] - slope * lengths[-1]
    else:
        est = sups[-1]
    return SingularPartEstimate(float(max(est, 0.0)), eps_seq, lengths, sups)
