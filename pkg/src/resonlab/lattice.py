"""Exact integer lattice primitives.

Frequency vectors are plain tuples of Python ints, so every quadratic
quantity below is computed exactly.  This module owns:

* the resonance level of an interaction tuple (signed sum of squared
  norms),
* the fixed linear order on ``Z^d`` (norm first, lexicographic on ties)
  used to rank tuple entries,
* the classifier that assigns an interaction tuple to the exceptional
  near-pairing classes or to their complement,
* weighted sequence norms and dyadic shell projections of finitely
  supported spectral fields.

All functions are pure; values are immutable.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from typing import Iterable, Mapping, Sequence

from .errors import (
    ArityError,
    DimensionError,
    ParameterError,
    UnsupportedCaseError,
)

Vec = tuple[int, ...]
ResonanceLevel = int

# Coordinates are capped so that signed sums of squared norms stay far
# inside the signed 64-bit range used by the vectorized engines.
COORD_BOUND = 1 << 23

MAX_DIM = 4


def check_vector(v: Sequence[int], dim: int | None = None) -> Vec:
    """Validate and normalize a lattice vector to a tuple of ints."""
    t = tuple(int(c) for c in v)
    if not 1 <= len(t) <= MAX_DIM:
        raise DimensionError(f"dimension {len(t)} outside 1..{MAX_DIM}")
    if dim is not None and len(t) != dim:
        raise DimensionError(f"expected dimension {dim}, got {len(t)}")
    for c in t:
        if abs(c) > COORD_BOUND:
            raise OverflowError(f"coordinate {c} exceeds bound {COORD_BOUND}")
    return t


def norm2(v: Vec) -> int:
    """Squared Euclidean norm, exact."""
    return sum(c * c for c in v)


def bracket2(v: Vec) -> int:
    """Squared Japanese bracket 1 + |v|^2, exact."""
    return 1 + norm2(v)


def japanese_bracket(v: Vec) -> float:
    return math.sqrt(bracket2(v))


def signed_sum(entries: Sequence[Vec]) -> Vec:
    """Alternating sum e_1 - e_2 + e_3 - ... of an odd-length tuple."""
    if len(entries) % 2 == 0:
        raise ArityError(f"tuple length {len(entries)} is even")
    d = len(entries[0])
    acc = [0] * d
    sign = 1
    for e in entries:
        if len(e) != d:
            raise DimensionError("mixed dimensions in tuple")
        for i in range(d):
            acc[i] += sign * e[i]
        sign = -sign
    return tuple(acc)


def phi(n: Vec, entries: Sequence[Vec]) -> ResonanceLevel:
    """Resonance level |n|^2 - |n_1|^2 + |n_2|^2 - ... - |n_{2k+1}|^2."""
    if len(entries) % 2 == 0:
        raise ArityError(f"tuple length {len(entries)} is even")
    d = len(n)
    out = norm2(n)
    sign = -1
    for e in entries:
        if len(e) != d:
            raise DimensionError("entry dimension differs from output")
        out += sign * norm2(e)
        sign = -sign
    return out


def order_key(v: Vec) -> tuple:
    """Sort key realizing the fixed order: squared norm, then coordinates."""
    return (norm2(v), v)


def order_compare(a: Vec, b: Vec) -> int:
    """Total order on Z^d: +1 / 0 / -1 for a above / equal to / below b.

    Vectors compare first by exact squared norm, ties broken
    lexicographically on raw signed coordinates, so equality holds only
    for identical vectors.
    """
    if len(a) != len(b):
        raise DimensionError("compared vectors differ in dimension")
    ka, kb = order_key(a), order_key(b)
    if ka > kb:
        return 1
    if ka < kb:
        return -1
    return 0


class TupleClass(enum.Enum):
    """Outcome of classifying an interaction tuple."""

    NOT_IN_A = "NotInA"
    IN_A1 = "InA1"
    IN_A2 = "InA2"
    IN_A3 = "InA3"
    IN_A_CUBIC = "InA_cubic"


@dataclass(frozen=True)
class RankProfile:
    """Ranking of a tuple's entries under the fixed order, plus its class.

    ``order[m]`` is the original index (0-based) of the (m+1)-th largest
    entry; ties between identical vectors keep ascending original index.
    """

    order: tuple[int, ...]
    label: TupleClass

    def ranked(self, entries: Sequence[Vec]) -> tuple[Vec, ...]:
        return tuple(entries[i] for i in self.order)


def _exceptional_regime(d: int, k: int) -> str:
    if (d, k) == (1, 1):
        raise UnsupportedCaseError("classifier undefined for d = k = 1")
    if d * k >= 2 * k + 2:  # d >= 2 + 2/k: the exceptional set is empty
        return "empty"
    if k == 1:  # d in {2, 3}
        return "cubic"
    return "ranked"  # k >= 2, d in {1, 2}


def rank_and_classify(entries: Sequence[Vec], d: int, k: int) -> RankProfile:
    """Rank a (2k+1)-tuple under the fixed order and classify it.

    Classes are checked in the order: largest two entries equal, second
    and third equal, then (only for k = 2, d = 2) third and fourth equal
    together with the bracket comparison <n_[2]> <= <n_[3]>^{3/2},
    evaluated exactly as (1+|n_[2]|^2)^2 <= (1+|n_[3]|^2)^3.  For k = 1,
    d in {2, 3} the tuple is exceptional iff two of its entries
    coincide, so membership depends only on the multiset of entries in
    every regime.
    """
    regime = _exceptional_regime(d, k)
    if len(entries) != 2 * k + 1:
        raise ArityError(f"expected {2 * k + 1} entries, got {len(entries)}")
    entries = tuple(check_vector(e, d) for e in entries)

    # Stable descending sort: equal vectors keep ascending original index.
    order = tuple(sorted(range(len(entries)),
                         key=lambda i: order_key(entries[i]), reverse=True))
    ranked = [entries[i] for i in order]

    if regime == "empty":
        label = TupleClass.NOT_IN_A
    elif regime == "cubic":
        # symmetrized near-pairing: some two entries coincide (equal
        # vectors rank adjacently, so adjacency captures every repeat)
        label = (TupleClass.IN_A_CUBIC
                 if ranked[0] == ranked[1] or ranked[1] == ranked[2]
                 else TupleClass.NOT_IN_A)
    else:
        if ranked[0] == ranked[1]:
            label = TupleClass.IN_A1
        elif ranked[1] == ranked[2]:
            label = TupleClass.IN_A2
        elif (k, d) == (2, 2) and ranked[2] == ranked[3] \
                and bracket2(ranked[1]) ** 2 <= bracket2(ranked[2]) ** 3:
            label = TupleClass.IN_A3
        else:
            label = TupleClass.NOT_IN_A
    return RankProfile(order=order, label=label)


def in_exceptional_set(entries: Sequence[Vec], d: int, k: int) -> bool:
    return rank_and_classify(entries, d, k).label is not TupleClass.NOT_IN_A


@dataclass
class SpectralField:
    """Finitely supported map Z^d -> C with a declared support box.

    Every stored key lies in {|n|_inf <= box_radius}; amplitudes are
    finite complex numbers.  Exact-zero amplitudes are dropped.
    """

    dim: int
    box_radius: int
    amps: dict[Vec, complex] = field(default_factory=dict)

    def __post_init__(self):
        if self.box_radius < 0:
            raise ParameterError("box_radius must be nonnegative")
        clean: dict[Vec, complex] = {}
        for key, val in self.amps.items():
            key = check_vector(key, self.dim)
            val = complex(val)
            if not (math.isfinite(val.real) and math.isfinite(val.imag)):
                raise ParameterError(f"non-finite amplitude at {key}")
            if max(abs(c) for c in key) > self.box_radius:
                raise ParameterError(f"support point {key} outside box "
                                     f"radius {self.box_radius}")
            if val != 0:
                clean[key] = val
        self.amps = clean

    @classmethod
    def from_items(cls, dim: int,
                   items: Mapping[Sequence[int], complex] | Iterable,
                   box_radius: int | None = None) -> "SpectralField":
        pairs = items.items() if isinstance(items, Mapping) else list(items)
        keys = [check_vector(key, dim) for key, _ in pairs]
        if box_radius is None:
            box_radius = max((max(abs(c) for c in key) for key in keys),
                             default=0)
        return cls(dim, box_radius, {key: complex(val)
                                     for key, (_, val) in zip(keys, pairs)})

    @classmethod
    def delta(cls, dim: int, at: Sequence[int] | None = None,
              amp: complex = 1.0) -> "SpectralField":
        key = check_vector(at if at is not None else (0,) * dim, dim)
        return cls(dim, max((abs(c) for c in key), default=0) or 0,
                   {key: complex(amp)})

    @classmethod
    def indicator(cls, dim: int, points: Iterable[Sequence[int]],
                  box_radius: int | None = None) -> "SpectralField":
        return cls.from_items(dim, [(p, 1.0) for p in points], box_radius)

    def __call__(self, n: Sequence[int]) -> complex:
        return self.amps.get(tuple(int(c) for c in n), 0j)

    @property
    def support(self) -> list[Vec]:
        return sorted(self.amps)

    def copy(self) -> "SpectralField":
        return SpectralField(self.dim, self.box_radius, dict(self.amps))

    def scaled(self, c: complex) -> "SpectralField":
        return SpectralField(self.dim, self.box_radius,
                             {k: c * v for k, v in self.amps.items()})

    def conjugated(self) -> "SpectralField":
        return SpectralField(self.dim, self.box_radius,
                             {k: v.conjugate() for k, v in self.amps.items()})

    def reflected(self) -> "SpectralField":
        """Pullback under n -> -n."""
        return SpectralField(self.dim, self.box_radius,
                             {tuple(-c for c in k): v
                              for k, v in self.amps.items()})

    def plus(self, other: "SpectralField") -> "SpectralField":
        if other.dim != self.dim:
            raise DimensionError("field dimensions differ")
        out = dict(self.amps)
        for k, v in other.amps.items():
            out[k] = out.get(k, 0j) + v
        return SpectralField(self.dim,
                             max(self.box_radius, other.box_radius), out)

    def minus(self, other: "SpectralField") -> "SpectralField":
        return self.plus(other.scaled(-1.0))

    def max_abs_diff(self, other: "SpectralField") -> float:
        keys = set(self.amps) | set(other.amps)
        return max((abs(self(k) - other(k)) for k in keys), default=0.0)


def weighted_norm(f: SpectralField, p: float, s: float) -> float:
    """Weighted sequence norm (sum <n>^{ps} |f(n)|^p)^{1/p}, sup for p=inf."""
    if p < 1:
        raise ParameterError(f"p = {p} below 1")
    if math.isinf(p):
        return max((bracket2(k) ** (s / 2) * abs(v)
                    for k, v in f.amps.items()), default=0.0)
    total = sum(bracket2(k) ** (p * s / 2) * abs(v) ** p
                for k, v in f.amps.items())
    return total ** (1.0 / p)


def dyadic_shell(v: Vec) -> int:
    """The unique dyadic N = 2^j with N <= <v> < 2N (exact integer test)."""
    b2 = bracket2(v)
    j = 0
    while 4 ** (j + 1) <= b2:
        j += 1
    return 2 ** j


def dyadic_project(f: SpectralField, N: int) -> SpectralField:
    """Restrict a field to the shell N <= <n> < 2N."""
    if N < 1 or N & (N - 1):
        raise ParameterError(f"N = {N} is not a power of two")
    kept = {k: v for k, v in f.amps.items()
            if N * N <= bracket2(k) < 4 * N * N}
    return SpectralField(f.dim, f.box_radius, kept)
