"""Constrained multilinear convolutions and weighted-norm estimate ratios.

The central object is the alternating (2k+1)-linear sum

    n  |->  sum over n = n_1 - n_2 + ... + n_{2k+1} of  prod_l w_l(n_l),

optionally restricted to a fixed resonance level (the signed sum of
squared norms) and/or to the exceptional tuple classes of
:mod:`resonlab.lattice` or their complement.  Sums are evaluated by a
meet-in-the-middle split: the tuple slots are divided into halves of
sizes (k, k+1), each half is aggregated by its signed vector sum and
signed quadratic sum, and the two tables are joined, so that a
resonance-level constraint becomes an equation on the join keys.  A
fully naive per-tuple path is kept as the oracle.

Ratios of the left and right sides of the supported weighted-norm
estimates, a randomized extremizer search for those ratios, the dyadic
shell-block check, and the explicit indicator family that makes the
sup-norm estimate fail at low regularity all live here.
"""

from __future__ import annotations

import enum
import itertools
import math
from dataclasses import dataclass

import numpy as np

from .errors import (
    ArityError,
    BudgetError,
    DegenerateInputError,
    DimensionError,
    ParameterError,
    PreconditionError,
    UnsupportedCaseError,
)
from .lattice import (
    SpectralField,
    Vec,
    _exceptional_regime,
    bracket2,
    dyadic_shell,
    in_exceptional_set,
    phi,
    signed_sum,
    weighted_norm,
)

# Budgets for the vectorized enumeration paths.
_MAX_JOIN_ROWS = 40_000_000
_MAX_TUPLE_ROWS = 4_000_000


def critical_exponent(d: int, k: int) -> float:
    """Scaling-critical regularity d/2 - 1/k."""
    return d / 2 - 1 / k


def embedding_exponent(d: int, k: int) -> float:
    """Least regularity embedding into L^{2k+1}: d(2k-1)/(2(2k+1))."""
    return d * (2 * k - 1) / (2 * (2 * k + 1))


def eps_slack(k: int) -> float:
    """Positive slack available in the sup-norm estimate for k >= 2."""
    if k < 2:
        raise ParameterError("the slack constant is defined for k >= 2")
    return 0.5 * min(1 / (k * (2 * k + 1)), 3 / 5 - 9 / 16,
                     (2 * k + 3) / (4 * k * (2 * k + 1)), 3 / 10 - 1 / 6)


class EstimateTag(enum.Enum):
    B1 = "B1"                    # sup over levels, l2_{s1} both sides
    B1_PRIME = "B1prime"         # unconstrained, l2_{s2}
    REMAINDER = "R_est"          # exceptional part, l2_s
    B2 = "B2"                    # complement + level, l^r_sigma vs mixed
    B2_PRIME = "B2prime"         # complement, l^r_sigma vs mixed (s2)
    B3 = "B3"                    # complement, l^r_sigma vs product l2_s
    DYADIC_BLOCK = "DyadicBlock"  # (2k+2)-linear shell block
    LINF_BLOCK = "LinfBlock"     # complement + level, sup norm


class Restriction(enum.Enum):
    NONE = "None"
    ON_A = "OnA"
    ON_AC = "OnAc"


_TAG_RESTRICTION = {
    EstimateTag.B1: Restriction.NONE,
    EstimateTag.B1_PRIME: Restriction.NONE,
    EstimateTag.REMAINDER: Restriction.ON_A,
    EstimateTag.B2: Restriction.ON_AC,
    EstimateTag.B2_PRIME: Restriction.ON_AC,
    EstimateTag.B3: Restriction.ON_AC,
    EstimateTag.DYADIC_BLOCK: Restriction.NONE,
    EstimateTag.LINF_BLOCK: Restriction.ON_AC,
}

# Tags whose left side carries a resonance-level constraint (sup over
# attainable levels unless the spec pins one).
_LEVEL_TAGS = (EstimateTag.B1, EstimateTag.B2, EstimateTag.LINF_BLOCK)


def _derived_parameters(d: int, k: int, s: float) -> tuple[float, float, float, float]:
    """The (s1, s2, r, sigma) tuple attached to (d, k, s) by regime."""
    if (d, k) == (1, 1):
        raise UnsupportedCaseError("no estimate parameters for d = k = 1")
    s_c = critical_exponent(d, k)
    if d * k >= 2 * k + 2:
        s1, r, sigma = (s + s_c) / 2, 2.0, -s_c
    elif k >= 2:
        s1 = max((s + s_c) / 2, embedding_exponent(d, k) - eps_slack(k) / 2)
        r, sigma = math.inf, 0.0
    else:
        s1 = (s + (3 * d - 2) / 10) / 2
        r = 10 / (2 * d - 3)
        sigma = -(2 * d - 3) * (d - 2) / 10
    s2 = max(d / 2, s) + 1
    return s1, s2, r, sigma


@dataclass(frozen=True)
class EstimateSpec:
    """One estimate instance; (s1, s2, r, sigma) are derived from (d, k, s)."""

    tag: EstimateTag
    d: int
    k: int
    s: float
    s1: float
    s2: float
    r: float
    sigma: float
    q: int | None = None
    mu: int | None = None
    restriction: Restriction = Restriction.NONE

    def __post_init__(self):
        if self.k < 1 or not 1 <= self.d <= 4:
            raise ParameterError("need k >= 1 and 1 <= d <= 4")
        s1, s2, r, sigma = _derived_parameters(self.d, self.k, self.s)
        for name, got, want in (("s1", self.s1, s1), ("s2", self.s2, s2),
                                ("r", self.r, r), ("sigma", self.sigma, sigma)):
            if math.isinf(want) and math.isinf(got):
                continue
            if abs(got - want) > 1e-9:
                raise ParameterError(
                    f"{name} = {got} inconsistent with derived {want}")
        if self.restriction is not _TAG_RESTRICTION[self.tag]:
            raise ParameterError(f"{self.tag.value} requires restriction "
                                 f"{_TAG_RESTRICTION[self.tag].value}")
        if self.q is not None and not 1 <= self.q <= 2 * self.k + 1:
            raise ParameterError(f"q = {self.q} outside 1..{2 * self.k + 1}")
        if self.mu is not None and self.tag not in (
                *_LEVEL_TAGS, EstimateTag.DYADIC_BLOCK):
            raise ParameterError(f"{self.tag.value} carries no level constraint")

    @classmethod
    def derive(cls, tag: EstimateTag | str, d: int, k: int, s: float,
               q: int | None = None, mu: int | None = None) -> "EstimateSpec":
        tag = EstimateTag(tag) if not isinstance(tag, EstimateTag) else tag
        s1, s2, r, sigma = _derived_parameters(d, k, s)
        return cls(tag=tag, d=d, k=k, s=s, s1=s1, s2=s2, r=r, sigma=sigma,
                   q=q, mu=mu, restriction=_TAG_RESTRICTION[tag])

    @property
    def arity(self) -> int:
        return 2 * self.k + 2 if self.tag is EstimateTag.DYADIC_BLOCK \
            else 2 * self.k + 1


# ---------------------------------------------------------------------------
# array plumbing


def _support_arrays(f: SpectralField) -> tuple[np.ndarray, np.ndarray]:
    keys = sorted(f.amps)
    coords = np.asarray(keys, dtype=np.int64).reshape(len(keys), f.dim)
    amps = np.asarray([f.amps[k] for k in keys], dtype=np.complex128)
    return coords, amps


def _sqn(a: np.ndarray) -> np.ndarray:
    return (a * a).sum(axis=-1)


def _pack_columns(cols: list[np.ndarray]) -> np.ndarray:
    """Injective mixed-radix packing of integer columns into int64."""
    code = np.zeros(len(cols[0]), dtype=np.int64)
    span_total = 1
    for col in cols:
        lo = int(col.min())
        span = int(col.max()) - lo + 1
        span_total *= span
        if span_total > 1 << 62:
            raise BudgetError("key space too large to pack into 64 bits")
        code = code * span + (col - lo)
    return code


def _group_reduce(codes: np.ndarray, values: np.ndarray,
                  *columns: np.ndarray):
    """Sum values over equal codes; returns reduced columns alongside."""
    order = np.argsort(codes, kind="stable")
    codes = codes[order]
    starts = np.flatnonzero(np.r_[True, codes[1:] != codes[:-1]])
    sums = np.add.reduceat(values[order], starts)
    reps = order[starts]
    return sums, [col[reps] for col in columns]


def _check_fields(fields, odd=True) -> tuple[int, int]:
    if len(fields) == 0:
        raise ArityError("no fields given")
    if odd and len(fields) % 2 == 0:
        raise ArityError(f"{len(fields)} fields; an odd count is required")
    if not odd and len(fields) % 2 == 1:
        raise ArityError(f"{len(fields)} fields; an even count is required")
    d = fields[0].dim
    for f in fields:
        if f.dim != d:
            raise DimensionError("field dimensions differ")
    return d, (len(fields) - 1) // 2


def _slot_signs(count: int, first: int = 1) -> list[int]:
    return [first * (-1) ** i for i in range(count)]


def _combo_table(fields, signs, aggregate=True):
    """Signed sums over the product of supports, optionally aggregated.

    Returns (vecs, quads, prods): the signed vector sum, signed squared
    norm sum, and amplitude product for every combination, with
    combinations sharing a (vector, quadratic) key merged when
    ``aggregate`` is set.
    """
    d = fields[0].dim
    vecs = np.zeros((1, d), dtype=np.int64)
    quads = np.zeros(1, dtype=np.int64)
    prods = np.ones(1, dtype=np.complex128)
    for f, sign in zip(fields, signs):
        coords, amps = _support_arrays(f)
        if len(coords) == 0:
            return (np.zeros((0, d), dtype=np.int64),
                    np.zeros(0, dtype=np.int64),
                    np.zeros(0, dtype=np.complex128))
        if len(vecs) * len(coords) > _MAX_JOIN_ROWS:
            raise BudgetError("half-product table exceeds the size budget")
        vecs = (vecs[:, None, :] + sign * coords[None, :, :]).reshape(-1, d)
        quads = (quads[:, None] + sign * _sqn(coords)[None, :]).reshape(-1)
        prods = (prods[:, None] * amps[None, :]).reshape(-1)
        if aggregate and len(vecs) > 4096:
            codes = _pack_columns([vecs[:, i] for i in range(d)] + [quads])
            prods, (vecs, quads) = _group_reduce(codes, prods, vecs, quads)
    if aggregate and len(vecs) > 1:
        codes = _pack_columns([vecs[:, i] for i in range(d)] + [quads])
        prods, (vecs, quads) = _group_reduce(codes, prods, vecs, quads)
    return vecs, quads, prods


def _all_tuples(fields):
    """Raw product of supports: coords (T, L, d), amplitude products (T,)."""
    d = fields[0].dim
    sizes = [len(f.amps) for f in fields]
    total = math.prod(sizes)
    if total > _MAX_TUPLE_ROWS:
        raise BudgetError(f"{total} tuples exceed the per-tuple budget")
    if total == 0:
        return (np.zeros((0, len(fields), d), dtype=np.int64),
                np.zeros(0, dtype=np.complex128))
    coord_list, amp_list = zip(*(_support_arrays(f) for f in fields))
    coords = np.empty((total, len(fields), d), dtype=np.int64)
    prods = np.ones(total, dtype=np.complex128)
    reps_after = total
    for slot, (c, a) in enumerate(zip(coord_list, amp_list)):
        reps_after //= sizes[slot]
        reps_before = total // (sizes[slot] * reps_after)
        idx = np.tile(np.repeat(np.arange(sizes[slot]), reps_after),
                      reps_before)
        coords[:, slot, :] = c[idx]
        prods *= a[idx]
    return coords, prods


def _classify_batch(coords: np.ndarray, d: int, k: int) -> np.ndarray:
    """Vectorized exceptional-set membership for k >= 2 tuples."""
    T = coords.shape[0]
    if T == 0:
        return np.zeros(0, dtype=bool)
    norms = _sqn(coords)
    B = int(np.abs(coords).max(initial=0))
    stride = 2 * B + 1
    lex = np.zeros(coords.shape[:2], dtype=np.int64)
    for i in range(d):
        lex = lex * stride + (coords[:, :, i] + B)
    place = stride ** d
    if int(norms.max(initial=0)) >= (1 << 62) // max(place, 1):
        raise BudgetError("coordinates too large for packed ranking")
    keys = norms * place + lex
    ranked = np.sort(keys, axis=1)[:, ::-1]
    in_a = ranked[:, 0] == ranked[:, 1]
    in_a |= ranked[:, 1] == ranked[:, 2]
    if (k, d) == (2, 2):
        cand = ranked[:, 2] == ranked[:, 3]
        b1 = ranked[:, 1] // place + 1
        b2 = ranked[:, 2] // place + 1
        if max(int(b1.max(initial=0)), int(b2.max(initial=0))) < 2_000_000:
            cand &= b1 * b1 <= b2 * b2 * b2
        else:  # exact comparison outside the int64-safe range
            cand &= np.asarray([int(x) ** 2 <= int(y) ** 3
                                for x, y in zip(b1, b2)], dtype=bool)
        in_a |= cand
    return in_a


def _levels_arrays(fields, restriction: Restriction, mu_filter: int | None = None):
    """Reduced rows (n, level, value) of the restricted multilinear sum."""
    d, k = _check_fields(fields)
    regime = None
    if restriction is not Restriction.NONE:
        regime = _exceptional_regime(d, k)  # validates (d, k) != (1, 1)

    empty = (np.zeros((0, d), dtype=np.int64), np.zeros(0, dtype=np.int64),
             np.zeros(0, dtype=np.complex128))

    if restriction is Restriction.ON_A and regime == "empty":
        return empty

    if restriction is Restriction.ON_A and regime == "cubic":
        n, mu, vals = _cubic_exceptional_rows(fields)
        if mu_filter is not None:
            keep = mu == mu_filter
            n, mu, vals = n[keep], mu[keep], vals[keep]
        return n, mu, vals

    if restriction is not Restriction.NONE and regime == "ranked":
        # k >= 2 in low dimension: membership depends on the whole tuple
        coords, prods = _all_tuples(fields)
        if len(prods) == 0:
            return empty
        signs = np.asarray(_slot_signs(2 * k + 1), dtype=np.int64)
        n = (coords * signs[None, :, None]).sum(axis=1)
        quad = (_sqn(coords) * signs[None, :]).sum(axis=1)
        mu = _sqn(n) - quad
        keep = _classify_batch(coords, d, k)
        if restriction is Restriction.ON_AC:
            keep = ~keep
        if mu_filter is not None:
            keep &= mu == mu_filter
        n, mu, prods = n[keep], mu[keep], prods[keep]
        if len(prods) == 0:
            return empty
        codes = _pack_columns([n[:, i] for i in range(d)] + [mu])
        vals, (n, mu) = _group_reduce(codes, prods, n, mu)
        return n, mu, vals

    # unrestricted rows via the half tables
    signs = _slot_signs(2 * k + 1)
    t1 = _combo_table(fields[:k], signs[:k])
    t2 = _combo_table(fields[k:], signs[k:])
    if len(t1[2]) * len(t2[2]) > _MAX_JOIN_ROWS:
        raise BudgetError("join exceeds the size budget")
    parts_n, parts_mu, parts_val = [], [], []
    v2, q2, p2 = t2
    for v1, q1, p1 in zip(*t1):
        if len(v2) == 0:
            break
        n = v1[None, :] + v2
        mu = _sqn(n) - (int(q1) + q2)
        val = p1 * p2
        if mu_filter is not None:
            keep = mu == mu_filter
            n, mu, val = n[keep], mu[keep], val[keep]
        parts_n.append(n)
        parts_mu.append(mu)
        parts_val.append(val)
    if not parts_n:
        n_all = np.zeros((0, d), dtype=np.int64)
        mu_all = np.zeros(0, dtype=np.int64)
        val_all = np.zeros(0, dtype=np.complex128)
    else:
        n_all = np.concatenate(parts_n)
        mu_all = np.concatenate(parts_mu)
        val_all = np.concatenate(parts_val)
    if len(val_all) == 0:
        n_red, mu_red, vals = n_all, mu_all, val_all
    else:
        codes = _pack_columns([n_all[:, i] for i in range(d)] + [mu_all])
        vals, (n_red, mu_red) = _group_reduce(codes, val_all, n_all, mu_all)

    if restriction is Restriction.NONE or regime == "empty":
        return n_red, mu_red, vals

    # complement in the cubic regime: subtract the paired contributions
    exc_n, exc_mu, exc_vals = _cubic_exceptional_rows(fields)
    if mu_filter is not None:
        keep = exc_mu == mu_filter
        exc_n, exc_mu, exc_vals = exc_n[keep], exc_mu[keep], exc_vals[keep]
    exc = {(tuple(int(c) for c in row), int(m)): v
           for row, m, v in zip(exc_n, exc_mu, exc_vals)}
    vals = vals.copy()
    for idx in range(len(vals)):
        key = (tuple(int(c) for c in n_red[idx]), int(mu_red[idx]))
        if key in exc:
            vals[idx] -= exc.pop(key)
    if exc:  # every paired tuple is one of the raw tuples
        raise AssertionError("exceptional rows missing from the full sum")
    return n_red, mu_red, vals


def _cubic_exceptional_rows(fields):
    """Rows of the k = 1 exceptional sum: tuples with a repeated entry.

    The three pair-events overlap exactly on constant tuples, so the sum
    is (n2 = n1) + (n2 = n3) + (n1 = n3) minus twice the constant part.
    The first two branches sit on level zero; the pairing n1 = n3 sits
    on level 2 |n1 - n2|^2.
    """
    f1, f2, f3 = fields
    d = f1.dim
    rows_n: list[tuple[int, ...]] = []
    rows_mu: list[int] = []
    rows_val: list[complex] = []

    s12 = sum(f1.amps[key] * f2.amps[key]
              for key in f1.amps.keys() & f2.amps.keys())
    s23 = sum(f2.amps[key] * f3.amps[key]
              for key in f2.amps.keys() & f3.amps.keys())
    if s12 != 0:
        for key, val in f3.amps.items():
            rows_n.append(key)
            rows_mu.append(0)
            rows_val.append(s12 * val)
    if s23 != 0:
        for key, val in f1.amps.items():
            rows_n.append(key)
            rows_mu.append(0)
            rows_val.append(s23 * val)
    for a in f1.amps.keys() & f3.amps.keys():
        outer = f1.amps[a] * f3.amps[a]
        for b, val in f2.amps.items():
            rows_n.append(tuple(2 * x - y for x, y in zip(a, b)))
            rows_mu.append(2 * sum((x - y) ** 2 for x, y in zip(a, b)))
            rows_val.append(outer * val)
    for a in f1.amps.keys() & f2.amps.keys() & f3.amps.keys():
        rows_n.append(a)
        rows_mu.append(0)
        rows_val.append(-2.0 * f1.amps[a] * f2.amps[a] * f3.amps[a])

    if not rows_n:
        return (np.zeros((0, d), dtype=np.int64),
                np.zeros(0, dtype=np.int64),
                np.zeros(0, dtype=np.complex128))
    n = np.asarray(rows_n, dtype=np.int64).reshape(-1, d)
    mu = np.asarray(rows_mu, dtype=np.int64)
    vals = np.asarray(rows_val, dtype=np.complex128)
    codes = _pack_columns([n[:, i] for i in range(d)] + [mu])
    vals, (n, mu) = _group_reduce(codes, vals, n, mu)
    return n, mu, vals


def _rows_to_field(n: np.ndarray, vals: np.ndarray, dim: int,
                   box_radius: int) -> SpectralField:
    amps: dict[Vec, complex] = {}
    for row, val in zip(n, vals):
        if val != 0:
            amps[tuple(int(c) for c in row)] = complex(val)
    return SpectralField(dim, box_radius, amps)


def _output_box(fields) -> int:
    return sum(f.box_radius for f in fields)


# ---------------------------------------------------------------------------
# public operations


def signed_convolution(fields) -> SpectralField:
    """The unconstrained alternating multilinear sum, no conjugations."""
    d, k = _check_fields(fields)
    signs = _slot_signs(2 * k + 1)
    t1 = _combo_table(fields[:k], signs[:k])
    t2 = _combo_table(fields[k:], signs[k:])
    parts_n, parts_val = [], []
    v2, p2 = t2[0], t2[2]
    for v1, p1 in zip(t1[0], t1[2]):
        if len(v2) == 0:
            break
        parts_n.append(v1[None, :] + v2)
        parts_val.append(p1 * p2)
    if not parts_n:
        return SpectralField(d, _output_box(fields), {})
    n_all = np.concatenate(parts_n)
    val_all = np.concatenate(parts_val)
    codes = _pack_columns([n_all[:, i] for i in range(d)])
    vals, (n_red,) = _group_reduce(codes, val_all, n_all)
    return _rows_to_field(n_red, vals, d, _output_box(fields))


def resonant_levels(fields) -> list[int]:
    """All attainable resonance levels for the given supports, sorted."""
    n, mu, _ = _levels_arrays(fields, Restriction.NONE)
    return sorted(int(m) for m in set(mu.tolist()))


def resonant_sum_by_level(fields, restriction: Restriction = Restriction.NONE
                          ) -> dict[int, SpectralField]:
    """Level-by-level decomposition of the restricted multilinear sum."""
    d, _ = _check_fields(fields)
    n, mu, vals = _levels_arrays(fields, restriction)
    box = _output_box(fields)
    out: dict[int, SpectralField] = {}
    for level in sorted(set(int(m) for m in mu.tolist())):
        keep = mu == level
        fld = _rows_to_field(n[keep], vals[keep], d, box)
        if fld.amps:
            out[level] = fld
    return out


def resonant_sum(fields, mu: int | None = None,
                 restriction: Restriction = Restriction.NONE,
                 n_target: Vec | None = None,
                 method: str = "paired") -> SpectralField:
    """Alternating multilinear sum restricted by level and tuple class.

    With ``mu`` set, only tuples whose resonance level equals ``mu``
    contribute; with a restriction, tuples are kept according to their
    exceptional-set membership.  ``method="naive"`` switches to the
    per-tuple oracle enumeration.
    """
    d, k = _check_fields(fields)
    if method == "naive":
        return _naive_resonant_sum(fields, mu, restriction, n_target, d, k)
    if method != "paired":
        raise ParameterError(f"unknown method {method!r}")
    n, levels, vals = _levels_arrays(fields, restriction, mu_filter=mu)
    if n_target is not None:
        n_target = tuple(int(c) for c in n_target)
        keep = np.all(n == np.asarray(n_target, dtype=np.int64)[None, :],
                      axis=1)
        n, vals = n[keep], vals[keep]
    return _rows_to_field(n, vals, d, _output_box(fields))


def _naive_resonant_sum(fields, mu, restriction, n_target, d, k):
    if restriction is not Restriction.NONE:
        _exceptional_regime(d, k)
    out: dict[Vec, complex] = {}
    supports = [sorted(f.amps) for f in fields]
    for combo in itertools.product(*supports):
        n = signed_sum(combo)
        if n_target is not None and n != tuple(n_target):
            continue
        if mu is not None and phi(n, combo) != mu:
            continue
        if restriction is not Restriction.NONE:
            member = in_exceptional_set(combo, d, k)
            if member != (restriction is Restriction.ON_A):
                continue
        term = 1.0 + 0j
        for f, key in zip(fields, combo):
            term *= f.amps[key]
        out[n] = out.get(n, 0j) + term
    return SpectralField(d, _output_box(fields),
                         {key: val for key, val in out.items() if val != 0})


# ---------------------------------------------------------------------------
# estimate ratios


def _norm_arrays(n: np.ndarray, vals: np.ndarray, r: float, sigma: float) -> float:
    """Weighted l^r_sigma norm of rows (n, value)."""
    if len(vals) == 0:
        return 0.0
    w = (1.0 + _sqn(n).astype(float)) ** (sigma / 2)
    mags = w * np.abs(vals)
    if math.isinf(r):
        return float(mags.max())
    return float((mags ** r).sum() ** (1 / r))


def _sup_over_levels(fields, restriction, r, sigma, fixed_mu):
    n, mu, vals = _levels_arrays(fields, restriction, mu_filter=fixed_mu)
    if len(vals) == 0:
        return 0.0
    w = (1.0 + _sqn(n).astype(float)) ** (sigma / 2)
    mags = w * np.abs(vals)
    _, group = np.unique(mu, return_inverse=True)
    if math.isinf(r):
        peaks = np.zeros(group.max() + 1)
        np.maximum.at(peaks, group, mags)
        return float(peaks.max())
    sums = np.bincount(group, weights=mags ** r)
    return float(sums.max() ** (1 / r))


def _restricted_norm(fields, restriction, r, sigma):
    n, _, vals = _levels_arrays(fields, restriction)
    if len(vals) == 0:
        return 0.0
    codes = _pack_columns([n[:, i] for i in range(fields[0].dim)])
    vals, (n_red,) = _group_reduce(codes, vals, n)
    return _norm_arrays(n_red, vals, r, sigma)


def estimate_ratio(spec: EstimateSpec, fields) -> float:
    """Left-hand over right-hand side of the tagged estimate.

    The sup over resonance levels is realized exactly over the finite
    attainable set (or at ``spec.mu`` when pinned); the min over the
    distinguished index is realized by exact minimization unless
    ``spec.q`` pins it.
    """
    if len(fields) != spec.arity:
        raise ArityError(f"{spec.tag.value} expects {spec.arity} fields, "
                         f"got {len(fields)}")
    for f in fields:
        if f.dim != spec.d:
            raise DimensionError("field dimension differs from spec")

    if spec.tag is EstimateTag.DYADIC_BLOCK:
        shells = []
        for f in fields:
            if not f.amps:
                raise DegenerateInputError("empty field in a shell block")
            levels = {dyadic_shell(key) for key in f.amps}
            if len(levels) > 1:
                raise PreconditionError("field support spans several shells")
            shells.append(levels.pop())
        lhs, bound = dyadic_block_check(shells, spec.mu or 0, spec.s, fields)
        if bound == 0:
            raise DegenerateInputError("vanishing shell-block bound")
        return lhs / bound

    norms_l2_s = [weighted_norm(f, 2, spec.s) for f in fields]
    if spec.tag is EstimateTag.B1:
        rhs_norms = [weighted_norm(f, 2, spec.s1) for f in fields]
        rhs = math.prod(rhs_norms)
        lhs = _sup_over_levels(fields, Restriction.NONE, 2, spec.s1, spec.mu)
    elif spec.tag is EstimateTag.B1_PRIME:
        rhs = math.prod(weighted_norm(f, 2, spec.s2) for f in fields)
        lhs = weighted_norm(signed_convolution(fields), 2, spec.s2)
    elif spec.tag is EstimateTag.REMAINDER:
        rhs = math.prod(norms_l2_s)
        lhs = _restricted_norm(fields, Restriction.ON_A, 2, spec.s)
    elif spec.tag is EstimateTag.B3:
        rhs = math.prod(norms_l2_s)
        lhs = _restricted_norm(fields, Restriction.ON_AC, spec.r, spec.sigma)
    elif spec.tag in (EstimateTag.B2, EstimateTag.B2_PRIME):
        aux = spec.s1 if spec.tag is EstimateTag.B2 else spec.s2
        aux_norms = [weighted_norm(f, 2, aux) for f in fields]
        head = [weighted_norm(f, spec.r, spec.sigma) for f in fields]
        rhs = _min_over_q(head, aux_norms, spec.q)
        if spec.tag is EstimateTag.B2:
            lhs = _sup_over_levels(fields, Restriction.ON_AC, spec.r,
                                   spec.sigma, spec.mu)
        else:
            lhs = _restricted_norm(fields, Restriction.ON_AC, spec.r,
                                   spec.sigma)
    elif spec.tag is EstimateTag.LINF_BLOCK:
        head = [weighted_norm(f, math.inf, 0.0) for f in fields]
        rhs = _min_over_q(head, norms_l2_s, spec.q)
        lhs = _sup_over_levels(fields, Restriction.ON_AC, math.inf, 0.0,
                               spec.mu)
    else:  # pragma: no cover
        raise ParameterError(f"unhandled tag {spec.tag}")

    if rhs == 0:
        raise DegenerateInputError("estimate right-hand side vanishes")
    return lhs / rhs


def _min_over_q(head_norms, product_norms, q: int | None) -> float:
    candidates = range(len(head_norms)) if q is None else [q - 1]
    best = math.inf
    for i in candidates:
        value = head_norms[i]
        for j, other in enumerate(product_norms):
            if j != i:
                value *= other
        best = min(best, value)
    return best


# ---------------------------------------------------------------------------
# the explicit low-regularity family


@dataclass(frozen=True)
class CounterexampleFamily:
    """Axis/axis/square indicator triple driving the sup-norm ratio up."""

    fields: tuple[SpectralField, SpectralField, SpectralField]
    q: int
    mu: int
    n: Vec

    @property
    def N(self) -> int:
        return self.fields[0].box_radius


def counterexample_family(N: int) -> CounterexampleFamily:
    """Indicators of the two axes and the full square of side 2N + 1."""
    if N < 1:
        raise ParameterError("N must be at least 1")
    rng = range(-N, N + 1)
    w1 = SpectralField.indicator(2, [(a, 0) for a in rng], box_radius=N)
    w2 = SpectralField.indicator(2, [(a, b) for a in rng for b in rng],
                                 box_radius=N)
    w3 = SpectralField.indicator(2, [(0, b) for b in rng], box_radius=N)
    return CounterexampleFamily(fields=(w1, w2, w3), q=2, mu=0, n=(0, 0))


# ---------------------------------------------------------------------------
# dyadic shell blocks


def dyadic_block_check(shell_sizes, mu: int, s: float, trial_fields
                       ) -> tuple[float, float]:
    """Exact shell-block sum against its dyadic bound.

    ``trial_fields[l]`` must be nonnegative and supported in the shell
    of size ``shell_sizes[l]``; slot signs alternate starting with plus.
    Returns the exact (2k+2)-linear sum under the zero-sum and level
    constraints together with N_max^{-2s} prod_l N_l^s ||w_l||_2.
    """
    fields = list(trial_fields)
    d, _ = _check_fields(fields, odd=False)
    if len(shell_sizes) != len(fields):
        raise ArityError("one shell size per field is required")
    k = len(fields) // 2 - 1
    if k < 1:
        raise ArityError("at least four fields are required")
    if s <= critical_exponent(d, k):
        raise ParameterError(f"s = {s} is not above the critical exponent")
    for N, f in zip(shell_sizes, fields):
        if N < 1 or N & (N - 1):
            raise ParameterError(f"shell size {N} is not a power of two")
        for key, val in f.amps.items():
            if not N * N <= bracket2(key) < 4 * N * N:
                raise PreconditionError(f"support point {key} outside the "
                                        f"shell of size {N}")
            if val.imag != 0 or val.real < 0:
                raise PreconditionError("trial fields must be nonnegative")

    signs = _slot_signs(len(fields), first=1)
    half = len(fields) // 2
    v1, q1, p1 = _combo_table(fields[:half], signs[:half])
    v2, q2, p2 = _combo_table(fields[half:], signs[half:])
    lhs = 0.0
    if len(p1) and len(p2):
        # join on v1 = -v2 and q1 = mu - q2 via packed keys
        all_v = np.concatenate([v1, -v2])
        all_q = np.concatenate([q1, mu - q2])
        codes = _pack_columns([all_v[:, i] for i in range(d)] + [all_q])
        c1, c2 = codes[:len(p1)], codes[len(p1):]
        order = np.argsort(c1, kind="stable")
        c1s = c1[order]
        idx = np.searchsorted(c1s, c2)
        idx_clip = np.minimum(idx, len(c1s) - 1)
        hit = c1s[idx_clip] == c2
        # sum over matched key pairs of (sum of p1 in group) * p2
        starts = np.flatnonzero(np.r_[True, c1s[1:] != c1s[:-1]])
        group_sum = np.add.reduceat(p1[order], starts)
        group_of = np.searchsorted(c1s[starts], c2[hit], side="right") - 1
        lhs = float((group_sum[group_of] * p2[hit]).sum().real)

    n_max = max(shell_sizes)
    bound = float(n_max) ** (-2 * s)
    for N, f in zip(shell_sizes, fields):
        bound *= float(N) ** s * weighted_norm(f, 2, 0.0)
    return lhs, bound


# ---------------------------------------------------------------------------
# extremizer search


def extremizer_search(spec: EstimateSpec, box_radius: int, iterations: int,
                      seed: int, initial_fields=None,
                      support_size: int = 24):
    """Randomized hill climb of the estimate ratio over nonnegative fields.

    Starts from seeded random sparse fields in the box (or from
    ``initial_fields``), proposes multiplicative single-site
    perturbations, and accepts only improvements.  Deterministic for a
    fixed seed; returns the best ratio seen with the fields realizing it.
    """
    if spec.tag is EstimateTag.DYADIC_BLOCK:
        raise ParameterError("shell blocks use dyadic_block_check directly")
    if iterations < 0:
        raise ParameterError("iterations must be nonnegative")
    if box_radius < 0:
        raise ParameterError("box_radius must be nonnegative")
    rng = np.random.default_rng(seed)
    arity = spec.arity
    d = spec.d

    if initial_fields is not None:
        if len(initial_fields) != arity:
            raise ArityError(f"expected {arity} initial fields")
        fields = []
        for f in initial_fields:
            for val in f.amps.values():
                if val.imag != 0 or val.real < 0:
                    raise ParameterError("initial fields must be nonnegative")
            fields.append(f.copy())
    else:
        side = range(-box_radius, box_radius + 1)
        points = [p for p in itertools.product(side, repeat=d)]
        fields = []
        for _ in range(arity):
            m = min(len(points), support_size)
            chosen = rng.choice(len(points), size=m, replace=False)
            amps = rng.uniform(0.5, 1.5, size=m)
            fields.append(SpectralField(
                d, box_radius,
                {points[int(i)]: float(a) for i, a in zip(chosen, amps)}))

    best = estimate_ratio(spec, fields)
    supports = [sorted(f.amps) for f in fields]
    for _ in range(iterations):
        slot = int(rng.integers(arity))
        if not supports[slot]:
            continue
        site = supports[slot][int(rng.integers(len(supports[slot])))]
        factor = math.exp(rng.normal(0.0, 0.7))
        trial = [f.copy() for f in fields]
        trial[slot].amps[site] *= factor
        ratio = estimate_ratio(spec, trial)
        if ratio > best:
            best = ratio
            fields = trial
    return best, fields
