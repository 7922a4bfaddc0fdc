"""Verblunsky sequences and finite windows of standard and extended CMV matrices.

Index conventions follow the CMV displays: the matrix is ``L M`` where ``L``
places the block ``Theta(alpha_j)`` on coordinates ``(j, j+1)`` for every
even ``j`` and ``M`` does so for every odd ``j``, with

    Theta(alpha) = [[conj(alpha), rho], [rho, -alpha]].

A window on the sites ``a..b`` uses the interior coefficients
``alpha_a .. alpha_{b-1}`` and the two *edge* coefficients ``alpha_{a-1}``
and ``alpha_b``.  Edge values of modulus one decouple the window from the
rest of the matrix; edge values inside the disk give the plain principal
submatrix.  The standard matrix is the extended one with ``alpha_{-1} = -1``.
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
import scipy.sparse as sp

UNIT_TOL = 1e-12


class DomainError(ValueError):
    """A coefficient lies outside the open unit disk or is not finite."""


def _check_coefficient(alpha) -> complex:
    a = complex(alpha)
    if not (math.isfinite(a.real) and math.isfinite(a.imag)):
        raise DomainError(f"Verblunsky coefficient {alpha!r} is not finite")
    if abs(a) >= 1.0:
        raise DomainError(f"Verblunsky coefficient {alpha!r} is not in the open unit disk")
    return a


def rho(alpha) -> float:
    """Return ``(1 - |alpha|^2)^(1/2)`` for a coefficient in the open disk."""
    a = _check_coefficient(alpha)
    return math.sqrt(1.0 - (a.real * a.real + a.imag * a.imag))


def theta_block(alpha) -> np.ndarray:
    """The 2x2 unitary block ``[[conj(alpha), rho], [rho, -alpha]]``."""
    a = _check_coefficient(alpha)
    r = rho(a)
    return np.array([[a.conjugate(), r], [r, -a]], dtype=np.complex128)


def _edge_block(beta) -> np.ndarray:
    """Theta for an edge value: the usual block inside the disk, diagonal on the circle."""
    b = complex(beta)
    if abs(abs(b) - 1.0) <= UNIT_TOL:
        return np.array([[b.conjugate(), 0.0], [0.0, -b]], dtype=np.complex128)
    return theta_block(b)


def _check_unimodular(beta) -> complex:
    b = complex(beta)
    if not (math.isfinite(b.real) and math.isfinite(b.imag)) or abs(abs(b) - 1.0) > UNIT_TOL:
        raise DomainError(f"boundary value {beta!r} is not on the unit circle")
    return b


@dataclass(frozen=True)
class VerblunskySequence:
    """Coefficients ``alpha_n`` for ``n`` in the integer window ``[start, start + len - 1]``."""

    start: int
    values: np.ndarray = field(repr=False)

    def __post_init__(self):
        v = np.array(self.values, dtype=np.complex128).ravel()
        if not np.all(np.isfinite(v)):
            raise DomainError("sequence contains non-finite coefficients")
        if v.size and np.max(np.abs(v)) >= 1.0:
            raise DomainError("sequence contains coefficients outside the open unit disk")
        v.setflags(write=False)
        object.__setattr__(self, "start", int(self.start))
        object.__setattr__(self, "values", v)

    @classmethod
    def from_mapping(cls, coeffs: dict) -> "VerblunskySequence":
        keys = sorted(coeffs)
        if not keys:
            raise ValueError("empty coefficient mapping")
        if keys != list(range(keys[0], keys[-1] + 1)):
            raise ValueError("coefficient indices must form a contiguous window")
        return cls(keys[0], np.array([coeffs[k] for k in keys], dtype=np.complex128))

    @property
    def stop(self) -> int:
        """Last index (inclusive)."""
        return self.start + self.values.size - 1

    @property
    def window(self) -> tuple[int, int]:
        return (self.start, self.stop)

    def __len__(self) -> int:
        return self.values.size

    def __getitem__(self, n: int) -> complex:
        if not self.start <= n <= self.stop:
            raise IndexError(f"index {n} outside [{self.start}, {self.stop}]")
        return complex(self.values[n - self.start])

    def slice(self, lo: int, hi: int) -> np.ndarray:
        """Coefficients for indices ``lo..hi`` inclusive (empty if ``hi < lo``)."""
        if hi < lo:
            return np.empty(0, dtype=np.complex128)
        if lo < self.start or hi > self.stop:
            raise IndexError(f"indices [{lo}, {hi}] exceed support [{self.start}, {self.stop}]")
        return self.values[lo - self.start : hi - self.start + 1]

    def rhos(self) -> np.ndarray:
        return np.sqrt(1.0 - np.abs(self.values) ** 2)

    def shifted(self, k: int) -> "VerblunskySequence":
        """The sequence ``n -> alpha_{n+k}``."""
        return VerblunskySequence(self.start - k, self.values)

    def scaled(self, lam) -> "VerblunskySequence":
        """Coefficients multiplied by ``lam`` (``lam = -1`` gives the second-kind sequence)."""
        return VerblunskySequence(self.start, complex(lam) * self.values)

    # CSV: header "index,re,im", one row per coefficient.
    def to_csv(self, path=None) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["index", "re", "im"])
        for k, a in enumerate(self.values):
            w.writerow([self.start + k, repr(float(a.real)), repr(float(a.imag))])
        text = buf.getvalue()
        if path is not None:
            Path(path).write_text(text, encoding="utf-8")
        return text

    @classmethod
    def from_csv(cls, source) -> "VerblunskySequence":
        """Read from a path, an open text stream, or CSV text (anything containing a newline)."""
        if hasattr(source, "read"):
            source = source.read()
        if isinstance(source, Path) or (isinstance(source, str) and "\n" not in source):
            text = Path(source).read_text(encoding="utf-8")
        else:
            text = source
        rows = list(csv.reader(io.StringIO(text)))
        if not rows or [c.strip() for c in rows[0]] != ["index", "re", "im"]:
            raise ValueError("CSV header must be: index,re,im")
        coeffs = {}
        for lineno, row in enumerate(rows[1:], start=2):
            if not row:
                continue
            if len(row) != 3:
                raise ValueError(f"line {lineno}: expected 3 columns, got {len(row)}")
            n = int(row[0])
            if n in coeffs:
                raise ValueError(f"line {lineno}: duplicate index {n}")
            coeffs[n] = complex(float(row[1]), float(row[2]))
        return cls.from_mapping(coeffs)


@dataclass(frozen=True)
class BandedUnitaryWindow:
    """A finite CMV window stored by diagonals.

    ``bands[k]`` holds the diagonal with offset ``k - 2`` (so ``bands[2]`` is the
    main diagonal); entry ``(i, j)`` with ``|i - j| <= 2`` is
    ``bands[j - i + 2][min(i, j)]`` and the unused tail of each off-diagonal is zero.
    """

    first: int
    bands: np.ndarray = field(repr=False)
    boundary: tuple = (None, None)

    def __post_init__(self):
        b = np.array(self.bands, dtype=np.complex128)
        if b.ndim != 2 or b.shape[0] != 5:
            raise ValueError("bands must have shape (5, N)")
        b.setflags(write=False)
        object.__setattr__(self, "bands", b)

    @property
    def size(self) -> int:
        return self.bands.shape[1]

    @property
    def sites(self) -> tuple[int, int]:
        return (self.first, self.first + self.size - 1)

    @property
    def decoupled(self) -> bool:
        return self.boundary[0] is not None and self.boundary[1] is not None

    def entry(self, i: int, j: int) -> complex:
        """Entry at local position ``(i, j)``."""
        d = j - i
        if abs(d) > 2:
            return 0j
        return complex(self.bands[d + 2][min(i, j)])

    def to_dense(self) -> np.ndarray:
        n = self.size
        out = np.zeros((n, n), dtype=np.complex128)
        for d in range(-2, 3):
            m = n - abs(d)
            if m <= 0:
                continue
            idx = np.arange(m)
            if d >= 0:
                out[idx, idx + d] = self.bands[d + 2][:m]
            else:
                out[idx - d, idx] = self.bands[d + 2][:m]
        return out

    def to_sparse(self) -> sp.csr_matrix:
        n = self.size
        diags, offsets = [], []
        for d in range(-2, 3):
            m = n - abs(d)
            if m > 0:
                diags.append(self.bands[d + 2][:m])
                offsets.append(d)
        return sp.diags(diags, offsets, shape=(n, n), format="csr", dtype=np.complex128)

    def is_real(self) -> bool:
        return bool(np.all(self.bands.imag == 0.0))

    def unitarity_defect(self) -> float:
        """max-norm of ``E* E - I``."""
        e = self.to_sparse()
        g = (e.conj().T @ e - sp.identity(self.size, format="csr")).tocoo()
        return float(np.max(np.abs(g.data))) if g.nnz else 0.0


def _entry_rows(a: np.ndarray, r: np.ndarray, first: int):
    """Direct pentadiagonal entries of the CMV window from the display pattern.

    ``a[k]`` and ``r[k]`` hold ``alpha`` and ``rho`` for index ``first - 1 + k``
    (so the left edge is ``k = 0`` and the right edge is ``k = N``).
    Even rows i:  (i, i-1) conj(a_i) r_{i-1},  (i, i) -conj(a_i) a_{i-1},
                  (i, i+1) r_i conj(a_{i+1}),  (i, i+2) r_i r_{i+1}.
    Odd rows i:   (i, i-2) r_{i-1} r_{i-2},    (i, i-1) -r_{i-1} a_{i-2},
                  (i, i) -a_{i-1} conj(a_i),   (i, i+1) -a_{i-1} r_i.
    """
    n = a.size - 1
    bands = np.zeros((5, n), dtype=np.complex128)
    ac = a.conj()

    def A(m):  # alpha_m, absolute index m
        return a[m - first + 1]

    def Ac(m):
        return ac[m - first + 1]

    def R(m):
        return r[m - first + 1]

    for li in range(n):
        i = first + li
        if i % 2 == 0:
            entries = {
                -1: Ac(i) * R(i - 1),
                0: -Ac(i) * A(i - 1),
                1: R(i) * Ac(i + 1) if li + 1 < n else None,
                2: R(i) * R(i + 1) if li + 2 < n else None,
            }
        else:
            entries = {
                -2: R(i - 1) * R(i - 2) if li >= 2 else None,
                -1: -R(i - 1) * A(i - 2),
                0: -A(i - 1) * Ac(i),
                1: -A(i - 1) * R(i) if li + 1 < n else None,
            }
        for d, v in entries.items():
            lj = li + d
            if v is None or lj < 0 or lj >= n:
                continue
            bands[d + 2][min(li, lj)] = v
    return bands


def _edge_rho(beta) -> float:
    b = complex(beta)
    if abs(abs(b) - 1.0) <= UNIT_TOL:
        return 0.0
    return rho(b)


def assemble_window(interior: np.ndarray, first: int, left_edge, right_edge, boundary=(None, None)):
    interior = np.asarray(interior, dtype=np.complex128)
    a = np.concatenate(([complex(left_edge)], interior, [complex(right_edge)]))
    r = np.concatenate(([_edge_rho(left_edge)], np.sqrt(1.0 - np.abs(interior) ** 2), [_edge_rho(right_edge)]))
    return BandedUnitaryWindow(first, _entry_rows(a, r, first), tuple(boundary))


def assemble_extended(seq: VerblunskySequence, window: tuple[int, int], boundary=(1.0, 1.0)) -> BandedUnitaryWindow:
    """Finite window of the extended CMV matrix on the sites ``window = (a, b)``.

    ``boundary`` is a pair of edge values for ``alpha_{a-1}`` and ``alpha_b``;
    each must be unimodular, or ``None`` to take the edge from ``seq`` (giving
    the principal submatrix).  With both edges unimodular the result is
    unitary.
    """
    a, b = int(window[0]), int(window[1])
    if b < a:
        raise ValueError("empty window")
    bl, br = boundary if boundary is not None else (None, None)
    left = _check_unimodular(bl) if bl is not None else seq[a - 1]
    right = _check_unimodular(br) if br is not None else seq[b]
    interior = seq.slice(a, b - 1)
    return assemble_window(interior, a, left, right, (bl, br))


def assemble_standard(seq: VerblunskySequence, n: int, boundary=None) -> BandedUnitaryWindow:
    """Top-left ``n x n`` block of the standard CMV matrix of ``alpha_0, alpha_1, ...``.

    ``boundary`` replaces ``alpha_{n-1}`` by a unimodular value (paraorthogonal
    truncation); with ``None`` the plain truncation is returned.
    """
    if n < 1:
        raise ValueError("size must be positive")
    br = _check_unimodular(boundary) if boundary is not None else None
    right = br if br is not None else seq[n - 1]
    interior = seq.slice(0, n - 2)
    return assemble_window(interior, 0, -1.0, right, (-1.0, br))


def lm_factors(interior: np.ndarray, first: int, left_edge, right_edge):
    """Dense ``L`` and ``M`` factors of a window built from shifted theta blocks."""
    interior = np.asarray(interior, dtype=np.complex128)
    n = interior.size + 1
    coeffs = np.concatenate(([complex(left_edge)], interior, [complex(right_edge)]))
    L = np.zeros((n, n), dtype=np.complex128)
    M = np.zeros((n, n), dtype=np.complex128)
    for k, c in enumerate(coeffs):
        j = first - 1 + k
        block = _edge_block(c) if k in (0, n) else theta_block(c)
        F = L if j % 2 == 0 else M
        for di in range(2):
            for dj in range(2):
                ii, jj = j + di - first, j + dj - first
                if 0 <= ii < n and 0 <= jj < n:
                    F[ii, jj] = block[di, dj]
    return L, M


def lm_product(seq: VerblunskySequence, window: tuple[int, int], boundary=(1.0, 1.0)) -> np.ndarray:
    """The extended window computed as the product ``L @ M`` (dense)."""
    a, b = int(window[0]), int(window[1])
    bl, br = boundary if boundary is not None else (None, None)
    left = _check_unimodular(bl) if bl is not None else seq[a - 1]
    right = _check_unimodular(br) if br is not None else seq[b]
    L, M = lm_factors(seq.slice(a, b - 1), a, left, right)
    return L @ M
