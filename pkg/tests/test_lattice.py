import itertools
import math

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from resonlab.errors import (
    ArityError,
    DimensionError,
    ParameterError,
    UnsupportedCaseError,
)
from resonlab.lattice import (
    SpectralField,
    TupleClass,
    dyadic_project,
    dyadic_shell,
    order_compare,
    phi,
    rank_and_classify,
    signed_sum,
    weighted_norm,
)

vectors_1d = st.tuples(st.integers(-6, 6))
vectors_2d = st.tuples(st.integers(-6, 6), st.integers(-6, 6))


# --- resonance level -------------------------------------------------------

@pytest.mark.parametrize("m", [-3, 0, 1, 7])
def test_phi_pairwise_cancellation(m):
    assert phi((3,), [(3,), (m,), (m,)]) == 0


def test_phi_hand_example_2d():
    assert phi((0, 0), [(1, 0), (1, 1), (0, 1)]) == 0


def test_phi_quintic_single_mode():
    assert phi((1,), [(1,), (0,), (0,), (0,), (0,)]) == 0


def test_phi_alternates_signs():
    assert phi((0,), [(2,), (1,), (0,)]) == 0 - 4 + 1 - 0


def test_phi_even_arity_rejected():
    with pytest.raises(ArityError):
        phi((0,), [(1,), (1,)])


def test_phi_dimension_mismatch():
    with pytest.raises(DimensionError):
        phi((0, 0), [(1,), (1, 0), (0, 1)])


@given(st.lists(vectors_2d, min_size=5, max_size=5), st.data())
@settings(max_examples=60)
def test_phi_invariant_under_same_parity_swaps(entries, data):
    n = data.draw(vectors_2d)
    base = phi(n, entries)
    i, j = data.draw(st.sampled_from([(0, 2), (0, 4), (2, 4), (1, 3)]))
    swapped = list(entries)
    swapped[i], swapped[j] = swapped[j], swapped[i]
    assert phi(n, swapped) == base


# --- the fixed order -------------------------------------------------------

def test_order_lexicographic_tie():
    assert order_compare((1, 0), (0, 1)) == 1


def test_order_norm_dominates():
    assert order_compare((2, 0), (1, 1)) == 1


@given(vectors_2d)
def test_order_reflexive(v):
    assert order_compare(v, v) == 0


@given(vectors_2d, vectors_2d)
def test_order_norm_compatible(a, b):
    if order_compare(a, b) >= 0:
        assert sum(x * x for x in a) >= sum(x * x for x in b)


@pytest.mark.parametrize("d", [1, 2])
def test_order_is_total_on_small_box(d):
    pts = list(itertools.product(range(-2, 3), repeat=d))
    for a in pts:
        for b in pts:
            ab, ba = order_compare(a, b), order_compare(b, a)
            assert ab == -ba
            assert (ab == 0) == (a == b)
    # transitivity, exhaustively
    for a in pts:
        for b in pts:
            if order_compare(a, b) < 0:
                continue
            for c in pts:
                if order_compare(b, c) >= 0:
                    assert order_compare(a, c) >= 0


def test_order_dimension_mismatch():
    with pytest.raises(DimensionError):
        order_compare((1,), (1, 0))


# --- classifier ------------------------------------------------------------

def test_classify_cubic_pairing():
    prof = rank_and_classify([(3, 0), (3, 0), (5, 5)], 2, 1)
    assert prof.label is TupleClass.IN_A_CUBIC


def test_classify_cubic_complement():
    prof = rank_and_classify([(3, 0), (2, 0), (5, 5)], 2, 1)
    assert prof.label is TupleClass.NOT_IN_A


def test_classify_empty_regime():
    entries = [(1, 1, 1), (2, 0, 1), (0, 0, 0), (2, 0, 1), (1, 1, 1)]
    assert rank_and_classify(entries, 3, 2).label is TupleClass.NOT_IN_A


def test_classify_bracket_pairing():
    entries = [(4, 0), (3, 0), (2, 0), (2, 0), (1, 0)]
    prof = rank_and_classify(entries, 2, 2)
    assert prof.label is TupleClass.IN_A3
    # (1+9)^2 = 100 <= (1+4)^3 = 125 makes the pairing exceptional
    assert prof.ranked(entries)[2] == (2, 0)


def test_classify_bracket_pairing_fails_when_gap_too_wide():
    entries = [(9, 0), (4, 0), (2, 0), (2, 0), (1, 0)]
    # (1+16)^2 = 289 > (1+4)^3 = 125: not exceptional
    assert rank_and_classify(entries, 2, 2).label is TupleClass.NOT_IN_A


def test_classify_rank_ties_keep_original_index():
    entries = [(1, 0), (1, 0), (0, 0), (2, 0), (1, 0)]
    prof = rank_and_classify(entries, 2, 2)
    assert prof.label is TupleClass.IN_A2
    assert prof.order == (3, 0, 1, 4, 2)


def test_classify_largest_pairing_wins():
    entries = [(2, 1), (2, 1), (1, 0), (1, 0), (0, 0)]
    assert rank_and_classify(entries, 2, 2).label is TupleClass.IN_A1


def test_classify_one_dimensional_quintic():
    assert rank_and_classify([(5,), (4,), (4,), (1,), (0,)], 1, 2).label \
        is TupleClass.IN_A2
    # the bracket class is never consulted in dimension one
    assert rank_and_classify([(4,), (-4,), (2,), (2,), (0,)], 1, 2).label \
        is TupleClass.NOT_IN_A


def test_classify_rejects_cubic_one_dimensional():
    with pytest.raises(UnsupportedCaseError):
        rank_and_classify([(1,), (1,), (0,)], 1, 1)


def test_classify_arity_checked():
    with pytest.raises(ArityError):
        rank_and_classify([(1, 0), (0, 1)], 2, 1)


@pytest.mark.parametrize("d,k", [(2, 1), (3, 2), (1, 2), (2, 2)])
def test_classify_depends_only_on_multiset(d, k, rng=None):
    import numpy as np
    rng = np.random.default_rng(1000 + 10 * d + k)
    for _ in range(25):
        entries = [tuple(int(x) for x in rng.integers(-3, 4, size=d))
                   for _ in range(2 * k + 1)]
        label = rank_and_classify(entries, d, k).label
        for perm in itertools.permutations(range(2 * k + 1)):
            shuffled = [entries[i] for i in perm]
            assert rank_and_classify(shuffled, d, k).label is label


# --- weighted norms and shells ---------------------------------------------

@pytest.mark.parametrize("p,s", [(1, 0.0), (2, 1.5), (math.inf, -0.5)])
def test_norm_of_unit_mass_at_origin(p, s):
    assert weighted_norm(SpectralField.delta(1), p, s) == 1.0


def test_norm_weights_by_bracket():
    f = SpectralField.from_items(1, [((1,), 1.0)])
    assert weighted_norm(f, 2, 1.0) == pytest.approx(math.sqrt(2.0))


def test_norm_sup_of_indicator():
    f = SpectralField.indicator(1, [(-1,), (0,), (1,)])
    assert weighted_norm(f, math.inf, 0.0) == 1.0


def test_norm_rejects_small_p():
    with pytest.raises(ParameterError):
        weighted_norm(SpectralField.delta(1), 0.5, 0.0)


def test_dyadic_projection_keeps_origin_shell():
    f = SpectralField.delta(1)
    assert dyadic_project(f, 1).amps == f.amps


def test_dyadic_projection_drops_outside():
    f = SpectralField.from_items(1, [((2,), 1.0)])
    assert dyadic_project(f, 1).amps == {}
    assert dyadic_project(f, 2).amps == f.amps


def test_dyadic_projection_rejects_non_powers():
    with pytest.raises(ParameterError):
        dyadic_project(SpectralField.delta(1), 3)


@given(vectors_2d)
def test_dyadic_shells_partition(v):
    shell = dyadic_shell(v)
    b2 = 1 + sum(c * c for c in v)
    assert shell * shell <= b2 < 4 * shell * shell
    others = [N for N in (1, 2, 4, 8, 16)
              if N != shell and N * N <= b2 < 4 * N * N]
    assert not others


def test_projection_partition_of_unity():
    items = [((i, j), complex(i, j)) for i in range(-5, 6)
             for j in range(-5, 6)]
    f = SpectralField.from_items(2, items)
    total = SpectralField(2, f.box_radius, {})
    N = 1
    while N <= 16:
        total = total.plus(dyadic_project(f, N))
        N *= 2
    assert total.max_abs_diff(f) == 0.0


# --- field container --------------------------------------------------------

def test_field_rejects_points_outside_box():
    with pytest.raises(ParameterError):
        SpectralField(2, 1, {(2, 0): 1.0})


def test_field_drops_exact_zeros():
    f = SpectralField(1, 1, {(0,): 0.0, (1,): 2.0})
    assert list(f.amps) == [(1,)]


def test_field_rejects_non_finite():
    with pytest.raises(ParameterError):
        SpectralField(1, 1, {(0,): complex("inf")})


def test_signed_sum_alternates():
    assert signed_sum([(1,), (2,), (3,)]) == (2,)
    assert signed_sum([(1, 1), (0, 1), (0, 0)]) == (1, 0)
