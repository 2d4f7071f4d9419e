import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from resonlab.counting import (
    CountingLemma,
    CountQuery,
    _sample_query,
    count_constrained,
    divisor_count,
    enumerate_ball,
    fit_loglog_slope,
    lcm_gcd_identity_check,
    naive_count,
    scan_worst_case,
    theoretical_bound,
)
from resonlab.errors import ParameterError, PreconditionError, QueryError

L = CountingLemma


# --- ball enumeration -------------------------------------------------------

def test_unit_ball_has_five_points():
    pts = enumerate_ball(2, (0, 0), 1)
    assert sorted(pts) == [(-1, 0), (0, -1), (0, 0), (0, 1), (1, 0)]


def test_small_ball_is_just_the_center():
    assert enumerate_ball(1, (7,), 0.5) == [(7,)]


def test_ball_radius_two_and_a_half():
    assert len(enumerate_ball(2, (0, 0), 2.5)) == 21


def test_ball_order_is_lexicographic():
    pts = enumerate_ball(2, (1, -1), 2)
    assert pts == sorted(pts)


def test_ball_overflow_guard():
    with pytest.raises(OverflowError):
        enumerate_ball(1, (2 ** 23,), 2)


# --- fixed counting fixtures -------------------------------------------------

def sphere_query(mu, R=6):
    return CountQuery(L.SPHERE_COUNT, 2, n_star=(0, 0), mu_star=mu, R=R,
                      ball_center=(0, 0))


def test_twelve_points_on_the_circle_of_radius_five():
    assert count_constrained(sphere_query(25)).exact_count == 12


def test_negative_level_is_empty():
    assert count_constrained(sphere_query(-1)).exact_count == 0


def test_skew_circle_count_six():
    q = CountQuery(L.SKEW_CIRCLE_COUNT, 2, n_star=(0, 0), mu_star=4, R=3,
                   ball_center=(0, 0))
    assert count_constrained(q).exact_count == 6
    assert naive_count(q) == 6


def test_pair_difference_hyperplane_count():
    q = CountQuery(L.PAIR_MINUS, 2, n_star=(1, 0), mu_star=1, R=5)
    assert count_constrained(q).exact_count == 9
    assert naive_count(q) == 9


def test_pair_difference_requires_nonzero_offset():
    q = CountQuery(L.PAIR_MINUS, 2, n_star=(0, 0), mu_star=1, R=5)
    with pytest.raises(PreconditionError):
        count_constrained(q)
    with pytest.raises(PreconditionError):
        naive_count(q)


def test_missing_radius_raises_query_error():
    q = CountQuery(L.SPHERE_COUNT, 2, n_star=(0, 0), mu_star=4,
                   ball_center=(0, 0))
    with pytest.raises(QueryError):
        count_constrained(q)


def test_small_radius_rejected():
    q = CountQuery(L.SPHERE_COUNT, 2, n_star=(0, 0), mu_star=4, R=0.5,
                   ball_center=(0, 0))
    with pytest.raises(ParameterError):
        count_constrained(q)


def test_sphere_count_translation_invariance():
    rng = np.random.default_rng(5)
    base = CountQuery(L.SPHERE_COUNT, 2, n_star=(1, 2), mu_star=13, R=5,
                      ball_center=(2, 2))
    reference = count_constrained(base).exact_count
    assert reference > 0
    for _ in range(10):
        shift = tuple(int(x) for x in rng.integers(-20, 21, size=2))
        moved = CountQuery(
            L.SPHERE_COUNT, 2,
            n_star=tuple(a + b for a, b in zip(base.n_star, shift)),
            mu_star=13, R=5,
            ball_center=tuple(a + b for a, b in zip(base.ball_center, shift)))
        assert count_constrained(moved).exact_count == reference


# --- theoretical bounds ------------------------------------------------------

def test_bound_sphere_two_dimensional():
    q = CountQuery(L.SPHERE_COUNT, 2, R=10)
    assert theoretical_bound(q, eta=0.25) == pytest.approx(10 ** 0.25)


def test_bound_pair_minus():
    q = CountQuery(L.PAIR_MINUS, 2, n_star=(1, 0), R=10)
    assert theoretical_bound(q, eta=0.25) == pytest.approx(10.0)


def test_bound_triple_minus_free():
    q = CountQuery(L.TRIPLE_MINUS_FREE, 2, R1=4, R3=4)
    assert theoretical_bound(q, eta=0.0) == pytest.approx(16.0)


def test_bound_parameter_validation():
    q = CountQuery(L.SPHERE_COUNT, 2, R=10)
    with pytest.raises(ParameterError):
        theoretical_bound(q, eta=-0.1)
    with pytest.raises(ParameterError):
        theoretical_bound(q, C=0.0)


def test_report_ratio_definition():
    report = count_constrained(sphere_query(25), eta=0.25)
    assert report.ratio == pytest.approx(report.exact_count
                                         / report.bound_value)


# --- divisors and the lcm/gcd identity --------------------------------------

@pytest.mark.parametrize("n,count", [(1, 1), (12, 6), (97, 2)])
def test_divisor_count_fixtures(n, count):
    assert divisor_count(n) == count


def test_divisor_count_brute_force_agreement():
    for n in range(1, 400):
        assert divisor_count(n) == sum(1 for m in range(1, n + 1)
                                       if n % m == 0)


def test_divisor_count_rejects_nonpositive():
    with pytest.raises(ParameterError):
        divisor_count(0)


@pytest.mark.parametrize("p,q", [(2, 3), (5, 11), (101, 997), (2, 7919)])
def test_semiprimes_have_four_divisors(p, q):
    assert divisor_count(p * q) == 4


@pytest.mark.parametrize("triple", [(1, 1, 1), (4, 6, 10), (7, 11, 13)])
def test_lcm_gcd_identity_fixtures(triple):
    assert lcm_gcd_identity_check(*triple)


def test_lcm_gcd_identity_random():
    rng = np.random.default_rng(17)
    for _ in range(1000):
        a, b, c = (int(x) for x in rng.integers(1, 10 ** 6, size=3))
        assert lcm_gcd_identity_check(a, b, c)


def test_lcm_gcd_identity_rejects_nonpositive():
    with pytest.raises(ParameterError):
        lcm_gcd_identity_check(0, 1, 1)


# --- oracle equivalence (smoke; the full sweep runs in acceptance) -----------

@pytest.mark.parametrize("lemma", list(CountingLemma))
def test_counts_match_naive_oracle(lemma):
    rng = np.random.default_rng(hash(lemma.value) % (2 ** 32))
    for _ in range(25):
        if lemma.value.startswith(("C1", "L1")):
            d = 1
        elif lemma is L.SKEW_CIRCLE_COUNT:
            d = 2
        else:
            d = int(rng.integers(2, 4))
        R = float(math.exp(rng.uniform(math.log(1.5), math.log(6.0))))
        q = _sample_query(lemma, d, R, rng, "mixed")
        assert count_constrained(q).exact_count == naive_count(q)


# --- worst-case scans ---------------------------------------------------------

def test_scan_is_deterministic():
    a = scan_worst_case(L.SKEW_CIRCLE_COUNT, 2, [4, 8], 40, seed=3)
    b = scan_worst_case(L.SKEW_CIRCLE_COUNT, 2, [4, 8], 40, seed=3)
    assert a == b


def test_scan_zero_budget_is_empty():
    result = scan_worst_case(L.SPHERE_COUNT, 2, [4, 8], 0, seed=3)
    assert result.reports == ()
    assert result.slope is None


def test_scan_rejects_empty_grid():
    with pytest.raises(ParameterError):
        scan_worst_case(L.SPHERE_COUNT, 2, [], 10, seed=3)


def test_skew_circle_worst_counts_grow_slowly():
    result = scan_worst_case(L.SKEW_CIRCLE_COUNT, 2, [4, 8, 16, 32], 60,
                             seed=11)
    assert all(r.exact_count >= 1 for r in result.reports)
    assert result.slope is not None and result.slope <= 0.6


def test_huge_level_regime_is_two_point_sparse():
    result = scan_worst_case(L.SPHERE_COUNT, 2, [4, 8], 25, seed=23,
                             mu_mode="huge")
    for report in result.reports:
        assert report.exact_count <= 2
        assert report.query.mu_star > (10 * report.query.R) ** 6


def test_loglog_slope_requires_two_points():
    with pytest.raises(ParameterError):
        fit_loglog_slope([2.0], [4.0])
    assert fit_loglog_slope([2, 4, 8], [4, 16, 64]) == pytest.approx(2.0)


# --- query sampling sanity ----------------------------------------------------

@given(st.integers(0, 2 ** 16))
@settings(max_examples=20, deadline=None)
def test_sampled_queries_are_well_formed(seed):
    rng = np.random.default_rng(seed)
    q = _sample_query(L.PAIR_PLUS, 2, 4.0, rng, "mixed")
    assert q.lemma is L.PAIR_PLUS
    assert q.mu_star is not None
    count_constrained(q)
