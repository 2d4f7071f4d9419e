"""Exact lattice-point counters and their theoretical bound evaluators.

Each counting statement pairs a solution set defined by one linear and
one quadratic constraint (plus ball confinements and optional
inequations) with a closed-form bound ``C * (radius powers)``.  The
counters here enumerate the ball-confined variables, solve the linear
constraint for the remaining one, and check the quadratic constraint in
exact integer arithmetic.  A deliberately naive second path
(:func:`naive_count`) re-enumerates covering boxes in the opposite
variable order and re-checks every stated constraint, serving as the
oracle for equivalence tests.

Counts are exact integers end to end; only bound values and ratios are
floating point.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, replace
from typing import Callable, Sequence

import numpy as np

from .errors import ParameterError, PreconditionError, QueryError
from .lattice import COORD_BOUND, Vec, check_vector

# Cap on elements per vectorized chunk when scanning pair products.
_CHUNK_ELEMS = 1 << 21


class CountingLemma(enum.Enum):
    """Tags naming the supported counting statements."""

    SPHERE_COUNT = "NumberA"          # |n - n*|^2 = mu*, n in a ball
    SKEW_CIRCLE_COUNT = "NumberB"     # (p-p*)^2 + 3(q-q*)^2 = mu*
    TRIPLE_PLUS_1D = "C1plus"         # n1+n2+n3 = n*, squares sum to mu*
    PAIR_PLUS = "Cdplus"              # n1+n2 = n*, |n1|^2+|n2|^2 = mu*
    TRIPLE_PLUS = "Cdprimeplus"       # + signs, two radius constraints
    TRIPLE_MINUS_1D_13 = "L1minus1"   # alternating signs, |n1|+|n3| <= R
    TRIPLE_MINUS_1D_12 = "L1minus2"   # alternating signs, |n1|+|n2| <= R
    PAIR_MINUS = "Ldminus"            # n1-n2 = n* != 0
    TRIPLE_MINUS_13 = "Ldprime1"      # alternating, |n1|<=R1, |n3|<=R3
    TRIPLE_MINUS_12 = "Ldprime2"      # alternating, |n1|<=R1, |n2|<=R2
    TRIPLE_MINUS_FREE = "Ldprime"     # alternating, no inequations


@dataclass(frozen=True)
class CountQuery:
    """One counting request; fields not used by the tag are ignored."""

    lemma: CountingLemma
    d: int
    n_star: Vec | None = None
    n_sub: Vec | None = None
    mu_star: int | None = None
    R: float | None = None
    R1: float | None = None
    R2: float | None = None
    R3: float | None = None
    ball_center: Vec | None = None

    def __post_init__(self):
        if not 1 <= self.d <= 4:
            raise ParameterError(f"dimension {self.d} outside 1..4")
        for name in ("n_star", "n_sub", "ball_center"):
            v = getattr(self, name)
            if v is not None:
                object.__setattr__(self, name, check_vector(v, self.d))

    def radius(self, name: str) -> float:
        value = getattr(self, name)
        if value is None:
            raise QueryError(f"{self.lemma.value} needs radius {name}")
        if not value > 1:
            raise ParameterError(f"radius {name} = {value} must exceed 1")
        return float(value)

    def vector(self, name: str) -> Vec:
        value = getattr(self, name)
        if value is None:
            raise QueryError(f"{self.lemma.value} needs vector {name}")
        return value

    def level(self) -> int:
        if self.mu_star is None:
            raise QueryError(f"{self.lemma.value} needs mu_star")
        return int(self.mu_star)


@dataclass(frozen=True)
class CountReport:
    query: CountQuery
    exact_count: int
    bound_value: float
    ratio: float


@dataclass(frozen=True)
class ScanResult:
    """Worst counts per radius plus the fitted log-log growth slope."""

    reports: tuple[CountReport, ...]
    slope: float | None


# ---------------------------------------------------------------------------
# ball / box enumeration


def _box_axes(d: int, lo: Sequence[int], hi: Sequence[int]) -> np.ndarray:
    """All integer points of prod_i [lo_i, hi_i], rows lexicographic."""
    for a, b in zip(lo, hi):
        if max(abs(int(a)), abs(int(b))) > COORD_BOUND:
            raise OverflowError("box corner exceeds the coordinate bound")
    axes = [np.arange(int(a), int(b) + 1, dtype=np.int64)
            for a, b in zip(lo, hi)]
    grids = np.meshgrid(*axes, indexing="ij")
    return np.stack([g.ravel() for g in grids], axis=-1)


def ball_array(d: int, center: Sequence[int], R: float) -> np.ndarray:
    """Lattice points with |x - center| <= R as an (M, d) int64 array."""
    if R <= 0:
        raise ParameterError(f"radius {R} must be positive")
    center = check_vector(center, d)
    r = int(math.floor(R))
    pts = _box_axes(d, [c - r for c in center], [c + r for c in center])
    diff = pts - np.asarray(center, dtype=np.int64)
    keep = (diff * diff).sum(axis=1) <= R * R
    return pts[keep]


def enumerate_ball(d: int, center: Sequence[int], R: float) -> list[Vec]:
    """Exactly the lattice points of the closed ball, in lexicographic order."""
    return [tuple(int(c) for c in row) for row in ball_array(d, center, R)]


def _sq(a: np.ndarray) -> np.ndarray:
    return (a * a).sum(axis=-1)


def _pair_scan(A: np.ndarray, B: np.ndarray,
               count_block: Callable[[np.ndarray, np.ndarray], int]) -> int:
    """Accumulate count_block over chunks of the pair product A x B."""
    if len(A) == 0 or len(B) == 0:
        return 0
    rows = max(1, _CHUNK_ELEMS // len(B))
    total = 0
    for i in range(0, len(A), rows):
        total += count_block(A[i:i + rows], B)
    return total


# ---------------------------------------------------------------------------
# primary counters: enumerate confined variables, solve the linear relation


def _count_sphere(q: CountQuery) -> int:
    pts = ball_array(q.d, q.vector("ball_center"), q.radius("R"))
    diff = pts - np.asarray(q.vector("n_star"), dtype=np.int64)
    return int(np.count_nonzero(_sq(diff) == q.level()))


def _count_skew_circle(q: CountQuery) -> int:
    if q.d != 2:
        raise ParameterError("skew circle counts are two-dimensional")
    pts = ball_array(2, q.vector("ball_center"), q.radius("R"))
    p_star, q_star = q.vector("n_star")
    dp = pts[:, 0] - p_star
    dq = pts[:, 1] - q_star
    return int(np.count_nonzero(dp * dp + 3 * dq * dq == q.level()))


def _count_triple_plus_1d(q: CountQuery) -> int:
    R = q.radius("R")
    n_star = q.vector("n_star")[0]
    n_sub = q.vector("n_sub")[0]
    r = int(math.floor(R))
    n1 = np.arange(n_sub - r, n_sub + r + 1, dtype=np.int64)
    n2 = np.arange(-r, r + 1, dtype=np.int64)
    g1, g2 = np.meshgrid(n1, n2, indexing="ij")
    n3 = n_star - g1 - g2
    ok = np.abs(g1 - n_sub) + np.abs(g2) <= R
    ok &= g1 * g1 + g2 * g2 + n3 * n3 == q.level()
    return int(np.count_nonzero(ok))


def _count_pair_plus(q: CountQuery) -> int:
    n1 = ball_array(q.d, q.vector("n_sub"), q.radius("R"))
    n2 = np.asarray(q.vector("n_star"), dtype=np.int64) - n1
    return int(np.count_nonzero(_sq(n1) + _sq(n2) == q.level()))


def _count_triple_plus(q: CountQuery) -> int:
    zero = (0,) * q.d
    A = ball_array(q.d, zero, q.radius("R1"))
    B = ball_array(q.d, zero, q.radius("R2"))
    n_star = np.asarray(q.vector("n_star"), dtype=np.int64)
    mu = q.level()

    def block(a: np.ndarray, b: np.ndarray) -> int:
        n3 = n_star[None, None, :] - a[:, None, :] - b[None, :, :]
        quad = _sq(a)[:, None] + _sq(b)[None, :] + _sq(n3)
        return int(np.count_nonzero(quad == mu))

    return _pair_scan(A, B, block)


def _count_triple_minus_1d(q: CountQuery, bound_pair: str) -> int:
    R = q.radius("R")
    n_star = q.vector("n_star")[0]
    mu = q.level()
    r = int(math.floor(R))
    u = np.arange(-r, r + 1, dtype=np.int64)
    g1, gx = np.meshgrid(u, u, indexing="ij")
    if bound_pair == "13":
        n1, n3 = g1, gx
        n2 = n1 + n3 - n_star
        ok = np.abs(n1) + np.abs(n3) <= R
    else:
        n1, n2 = g1, gx
        n3 = n_star - n1 + n2
        ok = np.abs(n1) + np.abs(n2) <= R
    ok &= n1 * n1 - n2 * n2 + n3 * n3 == mu
    ok &= (n2 != n1) & (n2 != n3)
    return int(np.count_nonzero(ok))


def _count_pair_minus(q: CountQuery) -> int:
    n_star = q.vector("n_star")
    if all(c == 0 for c in n_star):
        raise PreconditionError("pair-difference count needs n_star != 0")
    n1 = ball_array(q.d, (0,) * q.d, q.radius("R"))
    n2 = n1 - np.asarray(n_star, dtype=np.int64)
    return int(np.count_nonzero(_sq(n1) - _sq(n2) == q.level()))


def _count_triple_minus(q: CountQuery, bound_pair: str,
                        exclude_pairings: bool) -> int:
    zero = (0,) * q.d
    n_star = np.asarray(q.vector("n_star"), dtype=np.int64)
    mu = q.level()
    if bound_pair == "13":
        A = ball_array(q.d, zero, q.radius("R1"))
        B = ball_array(q.d, zero, q.radius("R3"))
    else:
        A = ball_array(q.d, zero, q.radius("R1"))
        B = ball_array(q.d, zero, q.radius("R2"))

    def block(a: np.ndarray, b: np.ndarray) -> int:
        if bound_pair == "13":
            n1, n3 = a[:, None, :], b[None, :, :]
            n2 = n1 + n3 - n_star
        else:
            n1, n2 = a[:, None, :], b[None, :, :]
            n3 = n_star - n1 + n2
        ok = _sq(n1) - _sq(n2) + _sq(n3) == mu
        if exclude_pairings:
            ok &= np.any(n2 != n1, axis=-1) & np.any(n2 != n3, axis=-1)
        return int(np.count_nonzero(ok))

    return _pair_scan(A, B, block)


_COUNTERS: dict[CountingLemma, Callable[[CountQuery], int]] = {
    CountingLemma.SPHERE_COUNT: _count_sphere,
    CountingLemma.SKEW_CIRCLE_COUNT: _count_skew_circle,
    CountingLemma.TRIPLE_PLUS_1D: _count_triple_plus_1d,
    CountingLemma.PAIR_PLUS: _count_pair_plus,
    CountingLemma.TRIPLE_PLUS: _count_triple_plus,
    CountingLemma.TRIPLE_MINUS_1D_13:
        lambda q: _count_triple_minus_1d(q, "13"),
    CountingLemma.TRIPLE_MINUS_1D_12:
        lambda q: _count_triple_minus_1d(q, "12"),
    CountingLemma.PAIR_MINUS: _count_pair_minus,
    CountingLemma.TRIPLE_MINUS_13: lambda q: _count_triple_minus(q, "13", True),
    CountingLemma.TRIPLE_MINUS_12: lambda q: _count_triple_minus(q, "12", True),
    CountingLemma.TRIPLE_MINUS_FREE:
        lambda q: _count_triple_minus(q, "13", False),
}


def theoretical_bound(q: CountQuery, eta: float = 0.25, C: float = 1.0) -> float:
    """Closed-form right-hand side of the tagged statement, with C and eta."""
    if eta < 0:
        raise ParameterError("eta must be nonnegative")
    if C <= 0:
        raise ParameterError("C must be positive")
    tag, d = q.lemma, q.d
    if tag is CountingLemma.SPHERE_COUNT:
        return C * q.radius("R") ** (d - 2 + eta)
    if tag in (CountingLemma.SKEW_CIRCLE_COUNT, CountingLemma.TRIPLE_PLUS_1D,
               CountingLemma.TRIPLE_MINUS_1D_13,
               CountingLemma.TRIPLE_MINUS_1D_12):
        return C * q.radius("R") ** eta
    if tag is CountingLemma.PAIR_PLUS:
        return C * q.radius("R") ** (d - 2 + eta)
    if tag is CountingLemma.TRIPLE_PLUS:
        r1, r2 = q.radius("R1"), q.radius("R2")
        return C * max(r1, r2) ** (d - 2 + eta) * min(r1, r2) ** d
    if tag is CountingLemma.PAIR_MINUS:
        return C * q.radius("R") ** (d - 1)
    if tag is CountingLemma.TRIPLE_MINUS_13:
        r1, r3 = q.radius("R1"), q.radius("R3")
        return C * (r1 * r3) ** (d - 1) * max(r1, r3) ** eta
    if tag is CountingLemma.TRIPLE_MINUS_12:
        r1, r2 = q.radius("R1"), q.radius("R2")
        return C * (r1 * r2) ** (d - 1) * max(r1, r2) ** eta
    if tag is CountingLemma.TRIPLE_MINUS_FREE:
        r1, r3 = q.radius("R1"), q.radius("R3")
        return C * max(r1, r3) ** d * min(r1, r3) ** (d - 2 + eta)
    raise ParameterError(f"unknown tag {tag}")


def count_constrained(q: CountQuery, eta: float = 0.25,
                      C: float = 1.0) -> CountReport:
    """Exact count of the tagged solution set plus its theoretical bound."""
    count = _COUNTERS[q.lemma](q)
    bound = theoretical_bound(q, eta=eta, C=C)
    return CountReport(query=q, exact_count=count, bound_value=bound,
                       ratio=count / bound)


# ---------------------------------------------------------------------------
# naive oracle: covering boxes, reversed variable order, every constraint


def _cover(center: Vec, R: float) -> tuple[list[int], list[int]]:
    r = int(math.floor(R))
    return [c - r for c in center], [c + r for c in center]


def _interval_hull(chunks: list[tuple[int, int]]) -> tuple[int, int]:
    lo = sum(a for a, _ in chunks)
    hi = sum(b for _, b in chunks)
    return lo, hi


def naive_count(q: CountQuery) -> int:
    """Second, fully naive enumeration of the same solution set.

    Scans the covering boxes of the ball-confined variables in reversed
    order and evaluates every stated constraint per candidate,
    independently of the solving counters.  Intended as the oracle in
    equivalence tests; counts agree exactly with
    :func:`count_constrained`.
    """
    tag, d = q.lemma, q.d

    if tag in (CountingLemma.SPHERE_COUNT, CountingLemma.SKEW_CIRCLE_COUNT):
        center = q.vector("ball_center")
        R = q.radius("R")
        lo, hi = _cover(center, R)
        count = 0
        # reversed lexicographic walk over the covering box
        pts = _box_axes(d, lo, hi)[::-1]
        for row in pts:
            if sum((int(x) - c) ** 2 for x, c in zip(row, center)) > R * R:
                continue
            if tag is CountingLemma.SPHERE_COUNT:
                val = sum((int(x) - c) ** 2
                          for x, c in zip(row, q.vector("n_star")))
            else:
                p_star, q_star = q.vector("n_star")
                val = (int(row[0]) - p_star) ** 2 + 3 * (int(row[1]) - q_star) ** 2
            if val == q.level():
                count += 1
        return count

    if tag is CountingLemma.TRIPLE_PLUS_1D:
        R = q.radius("R")
        r = int(math.floor(R))
        n_star = q.vector("n_star")[0]
        n_sub = q.vector("n_sub")[0]
        lo3, hi3 = _interval_hull([(n_star, n_star),
                                   (-(n_sub + r), -(n_sub - r)), (-r, r)])
        count = 0
        for n3 in range(hi3, lo3 - 1, -1):
            for n2 in range(r, -r - 1, -1):
                n1 = n_star - n2 - n3
                if abs(n1 - n_sub) + abs(n2) > R:
                    continue
                if n1 + n2 + n3 != n_star:
                    continue
                if n1 * n1 + n2 * n2 + n3 * n3 == q.level():
                    count += 1
        return count

    if tag in (CountingLemma.TRIPLE_MINUS_1D_13,
               CountingLemma.TRIPLE_MINUS_1D_12):
        # solve for the opposite variable than the direct counter does
        R = q.radius("R")
        r = int(math.floor(R))
        n_star = q.vector("n_star")[0]
        count = 0
        if tag is CountingLemma.TRIPLE_MINUS_1D_13:
            for n2 in range(2 * r - n_star, -2 * r - n_star - 1, -1):
                for n1 in range(r, -r - 1, -1):
                    n3 = n_star - n1 + n2
                    if abs(n1) + abs(n3) > R:
                        continue
                    if n1 - n2 + n3 != n_star:
                        continue
                    if n2 == n1 or n2 == n3:
                        continue
                    if n1 * n1 - n2 * n2 + n3 * n3 == q.level():
                        count += 1
        else:
            for n3 in range(n_star + 2 * r, n_star - 2 * r - 1, -1):
                for n1 in range(r, -r - 1, -1):
                    n2 = n1 + n3 - n_star
                    if abs(n1) + abs(n2) > R:
                        continue
                    if n1 - n2 + n3 != n_star:
                        continue
                    if n2 == n1 or n2 == n3:
                        continue
                    if n1 * n1 - n2 * n2 + n3 * n3 == q.level():
                        count += 1
        return count

    if tag in (CountingLemma.PAIR_PLUS, CountingLemma.PAIR_MINUS):
        # role swap: walk the second variable's covering box, solve the first
        R = q.radius("R")
        n_star = np.asarray(q.vector("n_star"), dtype=np.int64)
        if tag is CountingLemma.PAIR_PLUS:
            n_sub = np.asarray(q.vector("n_sub"), dtype=np.int64)
            c2 = tuple(s - c for s, c in zip(q.vector("n_star"),
                                             q.vector("n_sub")))
            n2 = _box_axes(d, *_cover(c2, R))[::-1]
            n1 = n_star[None, :] - n2
            ok = _sq(n1 - n_sub) <= R * R
            ok &= _sq(n1) + _sq(n2) == q.level()
        else:
            if all(c == 0 for c in q.vector("n_star")):
                raise PreconditionError("pair-difference count needs n_star != 0")
            n2 = _box_axes(d, *_cover(tuple(-c for c in q.vector("n_star")),
                                      R))[::-1]
            n1 = n2 + n_star[None, :]
            ok = _sq(n1) <= R * R
            ok &= _sq(n1) - _sq(n2) == q.level()
        return int(np.count_nonzero(ok))

    # three-variable alternating/plus families over two covering boxes;
    # the remaining variable is fixed by the linear relation
    n_star = np.asarray(q.vector("n_star"), dtype=np.int64)
    mu = q.level()
    if tag in (CountingLemma.TRIPLE_PLUS, CountingLemma.TRIPLE_MINUS_12):
        Ra, Rb = q.radius("R1"), q.radius("R2")
    else:
        Ra, Rb = q.radius("R1"), q.radius("R3")
    A = _box_axes(d, *_cover((0,) * d, Ra))
    B = _box_axes(d, *_cover((0,) * d, Rb))
    a_ball = _sq(A) <= Ra * Ra
    b_ball = _sq(B) <= Rb * Rb
    a_norm = _sq(A)
    b_norm = _sq(B)

    def block3(b: np.ndarray, a: np.ndarray) -> int:
        i = block3.offset
        block3.offset += len(b)
        first = a[None, :, :]
        second = b[:, None, :]
        ok = a_ball[None, :] & b_ball[i:i + len(b), None]
        if tag is CountingLemma.TRIPLE_PLUS:
            n3 = n_star - first - second
            ok &= a_norm[None, :] + b_norm[i:i + len(b), None] + _sq(n3) == mu
        elif tag is CountingLemma.TRIPLE_MINUS_12:
            n3 = n_star - first + second
            ok &= a_norm[None, :] - b_norm[i:i + len(b), None] + _sq(n3) == mu
            ok &= np.any(second != first, axis=-1)
            ok &= np.any(second != n3, axis=-1)
        else:
            n2 = first + second - n_star
            quad = a_norm[None, :] - _sq(n2) + b_norm[i:i + len(b), None]
            ok &= quad == mu
            if tag is not CountingLemma.TRIPLE_MINUS_FREE:
                ok &= np.any(n2 != first, axis=-1)
                ok &= np.any(n2 != second, axis=-1)
        return int(np.count_nonzero(ok))

    block3.offset = 0
    return _pair_scan(B, A, block3)


# ---------------------------------------------------------------------------
# divisor counting and the lcm/gcd identity


def divisor_count(n: int) -> int:
    """Exact number of positive divisors of n."""
    n = int(n)
    if n <= 0:
        raise ParameterError("divisor counts need a positive integer")
    count = 0
    root = math.isqrt(n)
    for m in range(1, root + 1):
        if n % m == 0:
            count += 2
    if root * root == n:
        count -= 1
    return count


def lcm_gcd_identity_check(a: int, b: int, c: int) -> bool:
    """Exact check of lcm(a,b,c) gcd(a,b) gcd(a,c) gcd(b,c) = abc gcd(a,b,c)."""
    a, b, c = int(a), int(b), int(c)
    if min(a, b, c) < 1:
        raise ParameterError("the identity is stated for positive integers")
    lhs = math.lcm(a, b, c) * math.gcd(a, b) * math.gcd(a, c) * math.gcd(b, c)
    rhs = a * b * c * math.gcd(a, b, c)
    return lhs == rhs


# ---------------------------------------------------------------------------
# worst-case scans


def fit_loglog_slope(xs: Sequence[float], ys: Sequence[float]) -> float:
    """Least-squares slope of log(y) against log(x)."""
    if len(xs) != len(ys) or len(xs) < 2:
        raise ParameterError("need at least two points to fit a slope")
    lx = np.log(np.asarray(xs, dtype=float))
    ly = np.log(np.asarray(ys, dtype=float))
    return float(np.polyfit(lx, ly, 1)[0])


def _random_vec(rng: np.random.Generator, d: int, bound: int) -> Vec:
    return tuple(int(x) for x in rng.integers(-bound, bound + 1, size=d))


def _random_direction(rng: np.random.Generator, d: int) -> np.ndarray:
    while True:
        v = rng.normal(size=d)
        norm = float(np.linalg.norm(v))
        if norm > 1e-9:
            return v / norm


def _sample_query(lemma: CountingLemma, d: int, R: float,
                  rng: np.random.Generator, mu_mode: str) -> CountQuery:
    """Draw one random query; mu* mixes attainable values and raw integers."""
    tag = lemma
    bound = max(2, int(R))

    if mu_mode == "huge" and tag is CountingLemma.SPHERE_COUNT:
        # curvature-starved regime: the sphere radius dwarfs the ball
        n_star = _random_vec(rng, d, 4)
        rho = (10.0 * R) ** 3 * (1.02 + 0.4 * rng.random())
        m = np.rint(rho * _random_direction(rng, d)).astype(np.int64)
        mu = int((m * m).sum())
        center = tuple(int(c) + int(x) for c, x in zip(n_star, m))
        return CountQuery(tag, d, n_star=n_star, mu_star=mu, R=R,
                          ball_center=center)

    attainable = rng.random() < 0.7

    if tag is CountingLemma.SPHERE_COUNT:
        n_star = _random_vec(rng, d, bound)
        center = tuple(c + int(o) for c, o in
                       zip(n_star, rng.integers(-bound // 2, bound // 2 + 1,
                                                size=d)))
        if attainable:
            pts = ball_array(d, center, R)
            m = pts[int(rng.integers(0, len(pts)))]
            mu = int(sum((int(x) - c) ** 2 for x, c in zip(m, n_star)))
        else:
            mu = int(rng.integers(0, int(4 * d * R * R) + 2))
        return CountQuery(tag, d, n_star=n_star, mu_star=mu, R=R,
                          ball_center=center)

    if tag is CountingLemma.SKEW_CIRCLE_COUNT:
        n_star = _random_vec(rng, 2, bound)
        center = tuple(c + int(o) for c, o in
                       zip(n_star, rng.integers(-bound // 2, bound // 2 + 1,
                                                size=2)))
        if attainable:
            pts = ball_array(2, center, R)
            m = pts[int(rng.integers(0, len(pts)))]
            mu = int((int(m[0]) - n_star[0]) ** 2
                     + 3 * (int(m[1]) - n_star[1]) ** 2)
        else:
            mu = int(rng.integers(0, int(16 * R * R) + 2))
        return CountQuery(tag, 2, n_star=n_star, mu_star=mu, R=R,
                          ball_center=center)

    if tag is CountingLemma.TRIPLE_PLUS_1D:
        n_star = _random_vec(rng, 1, bound)
        n_sub = _random_vec(rng, 1, bound)
        if attainable:
            n1 = n_sub[0] + int(rng.integers(-int(R), int(R) + 1))
            room = int(R - abs(n1 - n_sub[0]))
            n2 = int(rng.integers(-room, room + 1)) if room >= 0 else 0
            n3 = n_star[0] - n1 - n2
            mu = n1 * n1 + n2 * n2 + n3 * n3
        else:
            mu = int(rng.integers(0, int(12 * R * R) + 2))
        return CountQuery(tag, 1, n_star=n_star, n_sub=n_sub, mu_star=mu, R=R)

    if tag is CountingLemma.PAIR_PLUS:
        n_star = _random_vec(rng, d, bound)
        n_sub = _random_vec(rng, d, bound)
        if attainable:
            pts = ball_array(d, n_sub, R)
            n1 = pts[int(rng.integers(0, len(pts)))]
            n2 = np.asarray(n_star, dtype=np.int64) - n1
            mu = int((n1 * n1).sum() + (n2 * n2).sum())
        else:
            mu = int(rng.integers(0, int(8 * d * R * R) + 2))
        return CountQuery(tag, d, n_star=n_star, n_sub=n_sub, mu_star=mu, R=R)

    if tag is CountingLemma.TRIPLE_PLUS:
        n_star = _random_vec(rng, d, bound)
        R2 = float(1.5 + (R - 1.5) * rng.random())
        if attainable:
            zero = (0,) * d
            p1 = ball_array(d, zero, R)
            p2 = ball_array(d, zero, R2)
            n1 = p1[int(rng.integers(0, len(p1)))]
            n2 = p2[int(rng.integers(0, len(p2)))]
            n3 = np.asarray(n_star, dtype=np.int64) - n1 - n2
            mu = int((n1 * n1).sum() + (n2 * n2).sum() + (n3 * n3).sum())
        else:
            mu = int(rng.integers(0, int(12 * d * R * R) + 2))
        return CountQuery(tag, d, n_star=n_star, mu_star=mu, R1=R, R2=R2)

    if tag in (CountingLemma.TRIPLE_MINUS_1D_13,
               CountingLemma.TRIPLE_MINUS_1D_12):
        n_star = _random_vec(rng, 1, bound)
        if attainable:
            r = int(R)
            for _ in range(32):
                a = int(rng.integers(-r, r + 1))
                room = int(R - abs(a))
                b = int(rng.integers(-room, room + 1)) if room >= 0 else 0
                if tag is CountingLemma.TRIPLE_MINUS_1D_13:
                    n1, n3 = a, b
                    n2 = n1 + n3 - n_star[0]
                else:
                    n1, n2 = a, b
                    n3 = n_star[0] - n1 + n2
                if n2 != n1 and n2 != n3:
                    break
            mu = n1 * n1 - n2 * n2 + n3 * n3
        else:
            mu = int(rng.integers(-int(6 * R * R), int(6 * R * R) + 2))
        return CountQuery(tag, 1, n_star=n_star, mu_star=mu, R=R)

    if tag is CountingLemma.PAIR_MINUS:
        while True:
            n_star = _random_vec(rng, d, bound)
            if any(c != 0 for c in n_star):
                break
        if attainable:
            pts = ball_array(d, (0,) * d, R)
            n1 = pts[int(rng.integers(0, len(pts)))]
            n2 = n1 - np.asarray(n_star, dtype=np.int64)
            mu = int((n1 * n1).sum() - (n2 * n2).sum())
        else:
            mu = int(rng.integers(-int(4 * d * R * R), int(4 * d * R * R) + 2))
        return CountQuery(tag, d, n_star=n_star, mu_star=mu, R=R)

    # alternating three-variable families in dimension >= 2
    n_star = _random_vec(rng, d, bound)
    Rb = float(1.5 + (R - 1.5) * rng.random())
    if attainable:
        zero = (0,) * d
        pa = ball_array(d, zero, R)
        pb = ball_array(d, zero, Rb)
        first = pa[int(rng.integers(0, len(pa)))]
        second = pb[int(rng.integers(0, len(pb)))]
        star = np.asarray(n_star, dtype=np.int64)
        if tag is CountingLemma.TRIPLE_MINUS_12:
            n1, n2 = first, second
            n3 = star - n1 + n2
        else:
            n1, n3 = first, second
            n2 = n1 + n3 - star
        mu = int((n1 * n1).sum() - (n2 * n2).sum() + (n3 * n3).sum())
    else:
        mu = int(rng.integers(-int(8 * d * R * R), int(8 * d * R * R) + 2))
    if tag is CountingLemma.TRIPLE_MINUS_12:
        return CountQuery(tag, d, n_star=n_star, mu_star=mu, R1=R, R2=Rb)
    return CountQuery(tag, d, n_star=n_star, mu_star=mu, R1=R, R3=Rb)


def scan_worst_case(lemma: CountingLemma, d: int, R_grid: Sequence[float],
                    sample_budget: int, seed: int, eta: float = 0.25,
                    C: float = 1.0, mu_mode: str = "mixed") -> ScanResult:
    """Probe the sharpness of one bound by random worst-case sampling.

    For each radius in the grid, draws ``sample_budget`` random queries,
    keeps the report with the largest exact count, and finally fits the
    log-log slope of the worst counts against the radius.  Deterministic
    for a fixed seed.
    """
    if len(R_grid) == 0:
        raise ParameterError("empty radius grid")
    if mu_mode not in ("mixed", "huge"):
        raise ParameterError(f"unknown mu_mode {mu_mode!r}")
    rng = np.random.default_rng(seed)
    reports: list[CountReport] = []
    for R in R_grid:
        best: CountReport | None = None
        for _ in range(sample_budget):
            query = _sample_query(lemma, d, float(R), rng, mu_mode)
            report = count_constrained(query, eta=eta, C=C)
            if best is None or report.exact_count > best.exact_count:
                best = report
        if best is not None:
            reports.append(best)
    xs = [r.query.R if r.query.R is not None else r.query.R1 for r in reports]
    ys = [r.exact_count for r in reports]
    pairs = [(x, y) for x, y in zip(xs, ys) if y >= 1]
    slope = (fit_loglog_slope([x for x, _ in pairs], [y for _, y in pairs])
             if len(pairs) >= 2 else None)
    return ScanResult(reports=tuple(reports), slope=slope)
