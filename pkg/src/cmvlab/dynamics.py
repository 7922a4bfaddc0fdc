"""Base dynamics, sampling functions and orbit sampling.

Three base systems are provided:

* :class:`TorusRotation` -- ``omega -> omega + angle (mod 1)`` on [0, 1).
* :class:`SubstitutionSubshift` -- the subshift generated by a primitive
  substitution.  Points are positions in a long legal word.
* :class:`BernoulliShift` -- the full shift with an i.i.d. product measure.
  Points are positions in a word drawn from that measure.

Points of the symbolic systems are :class:`SymbolicPoint` objects; the shift
acts by moving the position.  Ergodic averages are Birkhoff averages along
such points.
"""

from __future__ import annotations

import math
from collections import Counter
from dataclasses import dataclass, field
from typing import Mapping

import numpy as np

from .verblunsky import DomainError, VerblunskySequence

GOLDEN = (math.sqrt(5.0) - 1.0) / 2.0  # fractional part of the golden ratio


# -- words ------------------------------------------------------------------


def substitute(word: str, rules: Mapping[str, str], times: int = 1) -> str:
    for _ in range(times):
        word = "".join(rules[c] for c in word)
    return word


def fibonacci_word(k: int) -> str:
    """``k``-fold application of a -> ab, b -> a to ``"a"``."""
    if k < 0:
        raise ValueError("iteration count must be non-negative")
    return substitute("a", {"a": "ab", "b": "a"}, k)


def factors(word, n: int) -> Counter:
    """Counts of all length-``n`` factors of ``word`` (a string or code array)."""
    if n < 1:
        raise ValueError("factor length must be positive")
    if n > len(word):
        raise ValueError("factor length exceeds word length")
    if isinstance(word, str):
        return Counter(word[i : i + n] for i in range(len(word) - n + 1))
    codes = np.asarray(word)
    base = int(codes.max()) + 1 if codes.size else 1
    keys = _window_codes(codes, 0, n, base)
    vals, counts = np.unique(keys, return_counts=True)
    return Counter(dict(zip(vals.tolist(), counts.tolist())))


def _window_codes(codes: np.ndarray, left: int, width: int, base: int, centers=None) -> np.ndarray:
    """Integer keys of the windows ``codes[c - left : c - left + width]``."""
    codes = np.asarray(codes, dtype=np.int64)
    if centers is None:
        centers = np.arange(left, codes.size - width + left + 1)
    centers = np.asarray(centers, dtype=np.int64)
    out = np.zeros(centers.size, dtype=np.int64)
    for j in range(width):
        out = out * base + codes[centers - left + j]
    return out


def aperiodicity_check(word, p_max: int) -> bool:
    """True iff no period ``p <= p_max`` fits the whole word."""
    n = len(word)
    if n <= 2 * p_max:
        raise ValueError("word must be longer than 2 * p_max")
    arr = np.frombuffer(word.encode(), dtype=np.uint8) if isinstance(word, str) else np.asarray(word)
    for p in range(1, p_max + 1):
        if np.array_equal(arr[p:], arr[:-p]):
            return False
    return True


def incidence_matrix(alphabet, rules) -> np.ndarray:
    """``m[i, j]`` = occurrences of ``alphabet[i]`` in ``rules[alphabet[j]]``."""
    idx = {c: i for i, c in enumerate(alphabet)}
    m = np.zeros((len(alphabet), len(alphabet)), dtype=np.int64)
    for j, c in enumerate(alphabet):
        for s in rules[c]:
            m[idx[s], j] += 1
    return m


def is_primitive(m: np.ndarray) -> bool:
    k = m.shape[0]
    p = (m > 0).astype(np.int64)
    q = p.copy()
    # Wielandt bound on the primitivity exponent
    for _ in range((k - 1) ** 2 + 1):
        if np.all(q > 0):
            return True
        q = ((q @ p) > 0).astype(np.int64)
    return bool(np.all(q > 0))


# -- systems ----------------------------------------------------------------


@dataclass(frozen=True)
class SymbolicPoint:
    """The sequence ``word[position + n]`` viewed as a point of a subshift."""

    codes: np.ndarray = field(repr=False)
    position: int

    def shift(self, k: int = 1) -> "SymbolicPoint":
        return SymbolicPoint(self.codes, self.position + k)

    def symbols(self, indices) -> np.ndarray:
        idx = self.position + np.asarray(indices, dtype=np.int64)
        if idx.size and (idx.min() < 0 or idx.max() >= self.codes.size):
            raise IndexError("orbit window exceeds the generated word")
        return self.codes[idx]


@dataclass(frozen=True)
class TorusRotation:
    angle: float = GOLDEN
    rational: bool = False

    def __post_init__(self):
        a = float(self.angle) % 1.0
        object.__setattr__(self, "angle", a)

    def states(self, omega: float, indices) -> np.ndarray:
        n = np.asarray(indices, dtype=np.float64)
        return np.mod(float(omega) + n * self.angle, 1.0)

    def shift(self, omega: float, k: int = 1) -> float:
        return (float(omega) + k * self.angle) % 1.0

    def random_points(self, rng: np.random.Generator, count: int, span=(0, 0)) -> list:
        return list(rng.random(count))


@dataclass(frozen=True)
class SubstitutionSubshift:
    alphabet: tuple
    rules: Mapping[str, str]
    seed_symbol: str

    def __post_init__(self):
        object.__setattr__(self, "alphabet", tuple(self.alphabet))
        object.__setattr__(self, "rules", dict(self.rules))
        if set(self.rules) != set(self.alphabet):
            raise ValueError("rules must be given for exactly the alphabet symbols")
        if self.seed_symbol not in self.alphabet:
            raise ValueError("seed symbol not in alphabet")
        for w in self.rules.values():
            if not w or any(c not in self.alphabet for c in w):
                raise ValueError(f"rule image {w!r} is empty or uses unknown symbols")
        if not is_primitive(incidence_matrix(self.alphabet, self.rules)):
            raise ValueError("substitution is not primitive")

    @classmethod
    def fibonacci(cls) -> "SubstitutionSubshift":
        return cls(("a", "b"), {"a": "ab", "b": "a"}, "a")

    def word(self, length: int) -> str:
        """A legal word of exactly ``length`` symbols (prefix of an iterate)."""
        w = self.seed_symbol
        while len(w) < length:
            nxt = substitute(w, self.rules)
            if len(nxt) <= len(w):
                raise ValueError("substitution does not grow the seed word")
            w = nxt
        return w[:length]

    def encode(self, word: str) -> np.ndarray:
        idx = {c: i for i, c in enumerate(self.alphabet)}
        return np.fromiter((idx[c] for c in word), dtype=np.int8, count=len(word))

    def decode(self, codes) -> str:
        return "".join(self.alphabet[int(c)] for c in codes)

    def point(self, position: int, length: int) -> SymbolicPoint:
        return SymbolicPoint(self.encode(self.word(length)), int(position))

    def random_points(self, rng: np.random.Generator, count: int, span=(0, 0)) -> list:
        """Points whose orbit window ``span`` (plus a margin) fits in one long word."""
        lo, hi = span
        margin = 64
        length = (hi - lo + 1) + 2 * margin + 16 * count
        length = max(length, 4 * (hi - lo + 1))
        codes = self.encode(self.word(length))
        first = margin - lo
        last = codes.size - 1 - margin - hi
        positions = rng.integers(first, last + 1, size=count)
        return [SymbolicPoint(codes, int(p)) for p in positions]


@dataclass(frozen=True)
class BernoulliShift:
    alphabet: tuple
    probabilities: tuple = None

    def __post_init__(self):
        object.__setattr__(self, "alphabet", tuple(self.alphabet))
        p = self.probabilities
        if p is None:
            p = tuple([1.0 / len(self.alphabet)] * len(self.alphabet))
        p = tuple(float(x) for x in p)
        if len(p) != len(self.alphabet) or any(x < 0 for x in p) or abs(sum(p) - 1.0) > 1e-12:
            raise ValueError("probabilities must be non-negative, one per symbol, summing to 1")
        object.__setattr__(self, "probabilities", p)

    def sample_codes(self, rng: np.random.Generator, length: int) -> np.ndarray:
        return rng.choice(len(self.alphabet), size=length, p=self.probabilities).astype(np.int8)

    def word(self, length: int, rng: np.random.Generator) -> str:
        return "".join(self.alphabet[c] for c in self.sample_codes(rng, length))

    def random_points(self, rng: np.random.Generator, count: int, span=(0, 0)) -> list:
        lo, hi = span
        margin = 64
        length = (hi - lo + 1) + 2 * margin
        return [SymbolicPoint(self.sample_codes(rng, length), margin - lo) for _ in range(count)]


def alphabet_of(system):
    return getattr(system, "alphabet", None)


# -- sampling functions -----------------------------------------------------


@dataclass(frozen=True)
class ConstantSampling:
    value: complex

    def __post_init__(self):
        v = complex(self.value)
        if not abs(v) < 1.0:
            raise DomainError("constant sampling value must lie in the open unit disk")
        object.__setattr__(self, "value", v)

    @property
    def bound(self) -> float:
        return abs(self.value)

    @property
    def finitely_valued(self) -> bool:
        return True

    def sample(self, system, omega, indices) -> np.ndarray:
        return np.full(np.asarray(indices).size, self.value, dtype=np.complex128)

    def scaled(self, lam) -> "ConstantSampling":
        return ConstantSampling(complex(lam) * self.value)


@dataclass(frozen=True)
class LocallyConstantSampling:
    """``f(omega)`` determined by ``omega_{-radius} .. omega_{radius}`` through ``table``.

    ``table`` maps words of length ``2 * radius + 1`` to disk values; windows
    not in the table evaluate to ``default`` (an error if ``default`` is None).
    """

    radius: int
    table: Mapping[str, complex]
    default: complex = None

    def __post_init__(self):
        t = {str(k): complex(v) for k, v in dict(self.table).items()}
        width = 2 * int(self.radius) + 1
        for k, v in t.items():
            if len(k) != width:
                raise ValueError(f"table word {k!r} does not have length {width}")
            if not abs(v) < 1.0:
                raise DomainError(f"table value {v} is not in the open unit disk")
        if self.default is not None and not abs(complex(self.default)) < 1.0:
            raise DomainError("default value is not in the open unit disk")
        object.__setattr__(self, "table", t)
        object.__setattr__(self, "radius", int(self.radius))

    @property
    def bound(self) -> float:
        vals = [abs(v) for v in self.table.values()]
        if self.default is not None:
            vals.append(abs(complex(self.default)))
        return max(vals)

    @property
    def finitely_valued(self) -> bool:
        return True

    def sample(self, system, omega: SymbolicPoint, indices) -> np.ndarray:
        alphabet = alphabet_of(system)
        if alphabet is None or not isinstance(omega, SymbolicPoint):
            raise TypeError("locally constant sampling needs a symbolic system and point")
        base = len(alphabet)
        idx = {c: i for i, c in enumerate(alphabet)}
        width = 2 * self.radius + 1
        lookup = {}
        for word, v in self.table.items():
            key = 0
            for c in word:
                key = key * base + idx[c]
            lookup[key] = v
        centers = omega.position + np.asarray(indices, dtype=np.int64)
        if centers.size and (centers.min() - self.radius < 0 or centers.max() + self.radius >= omega.codes.size):
            raise IndexError("orbit window exceeds the generated word")
        keys = _window_codes(omega.codes, self.radius, width, base, centers)
        uniq, inv = np.unique(keys, return_inverse=True)
        vals = np.empty(uniq.size, dtype=np.complex128)
        for i, k in enumerate(uniq.tolist()):
            if k in lookup:
                vals[i] = lookup[k]
            elif self.default is not None:
                vals[i] = complex(self.default)
            else:
                raise KeyError(f"window code {k} has no table entry")
        return vals[inv]

    def scaled(self, lam) -> "LocallyConstantSampling":
        lam = complex(lam)
        d = None if self.default is None else lam * complex(self.default)
        return LocallyConstantSampling(self.radius, {k: lam * v for k, v in self.table.items()}, d)


@dataclass(frozen=True)
class RotationSampling:
    """``f(omega) = amplitude * exp(2 pi i (frequency * omega + phase))`` on the circle."""

    amplitude: float
    frequency: int = 1
    phase: float = 0.0

    def __post_init__(self):
        if not 0.0 <= abs(self.amplitude) < 1.0:
            raise DomainError("amplitude must be below one in modulus")

    @property
    def bound(self) -> float:
        return abs(self.amplitude)

    @property
    def finitely_valued(self) -> bool:
        return False

    def sample(self, system, omega, indices) -> np.ndarray:
        if not isinstance(system, TorusRotation):
            raise TypeError("rotation-formula sampling needs a TorusRotation system")
        x = system.states(omega, indices)
        return self.amplitude * np.exp(2j * np.pi * (self.frequency * x + self.phase))

    def scaled(self, lam) -> "RotationSampling":
        lam = complex(lam)
        return RotationSampling(self.amplitude * abs(lam), self.frequency, self.phase + np.angle(lam) / (2 * np.pi))


@dataclass(frozen=True)
class SumSampling:
    """Pointwise sum ``first + second``; values are checked to stay in the disk."""

    first: object
    second: object

    @property
    def bound(self) -> float:
        return self.first.bound + self.second.bound

    @property
    def finitely_valued(self) -> bool:
        return self.first.finitely_valued and self.second.finitely_valued

    def sample(self, system, omega, indices) -> np.ndarray:
        v = self.first.sample(system, omega, indices) + self.second.sample(system, omega, indices)
        if v.size and np.max(np.abs(v)) >= 1.0:
            raise DomainError("sum of sampling functions left the open unit disk")
        return v

    def scaled(self, lam) -> "SumSampling":
        return SumSampling(self.first.scaled(lam), self.second.scaled(lam))


def orbit_sample(system, omega, f, window: tuple[int, int]) -> VerblunskySequence:
    """Verblunsky coefficients ``alpha_n = f(T^n omega)`` for ``n`` in ``window``."""
    lo, hi = int(window[0]), int(window[1])
    if hi < lo:
        raise ValueError("empty window")
    values = f.sample(system, omega, np.arange(lo, hi + 1))
    if values.size and np.max(np.abs(values)) >= 1.0:
        raise DomainError("sampling function produced a value outside the open unit disk")
    return VerblunskySequence(lo, values)


def orbit_values(system, omega, f, lo: int, hi: int) -> np.ndarray:
    """Raw coefficient array for ``lo..hi`` (no sequence wrapper)."""
    return orbit_sample(system, omega, f, (lo, hi)).values


# -- frequencies ------------------------------------------------------------


def cylinder_frequencies(source, n: int, length: int, rng: np.random.Generator | None = None) -> dict:
    """Empirical frequencies of the length-``n`` factors of a length-``length`` word.

    ``source`` is a :class:`SubstitutionSubshift`, a :class:`BernoulliShift`
    (needs ``rng``) or an explicit word.
    """
    if n > length:
        raise ValueError("factor length exceeds sample length")
    if isinstance(source, SubstitutionSubshift):
        word = source.word(length)
    elif isinstance(source, BernoulliShift):
        if rng is None:
            raise ValueError("a random generator is required for the Bernoulli shift")
        word = source.word(length, rng)
    else:
        word = str(source)[:length]
    counts = factors(word, n)
    total = sum(counts.values())
    return {w: c / total for w, c in sorted(counts.items())}


def boshernitzan_index(source, n: int, length: int | None = None, rng=None) -> float:
    """``n * min_w freq(w)`` over the length-``n`` factors of a long sample word."""
    if length is None:
        length = max(200 * n, 10**5)
    freqs = cylinder_frequencies(source, n, length, rng)
    if not freqs:
        raise ValueError("no factors found")
    return n * min(freqs.values())
