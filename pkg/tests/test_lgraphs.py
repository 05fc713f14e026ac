import itertools
import math
from fractions import Fraction

import numpy as np
import pytest

from kernelspectra.errors import ConfigError, SizeCapError
from kernelspectra.lgraphs import (
    MultiLabeling,
    SimpleLabeling,
    enumerate_multilabelings,
    enumerate_simplelabelings,
    exact_trace_moment,
    excess,
    first_order_matrix,
    label_simplifying_map,
    sample_trace_moment,
    verify_lemmas,
)

# a labeling with 3 distinct p-labels, tuple sizes (3,3,1,1), 4 distinct
# n-labels, and zero excess: a good pair carrying labels {1,2,3} plus two
# good singles sharing label 4
ZERO_EXCESS_EXAMPLE = MultiLabeling(
    p_labels=(1, 2, 1, 3),
    n_tuples=((1, 2, 3), (1, 2, 3), (4,), (4,)),
)


def naive_validate(ml: MultiLabeling, max_tuple_size=None) -> bool:
    """Independent condition-by-condition checker, written from scratch."""
    l = len(ml.p_labels)
    for s in range(l):
        if ml.p_labels[s] == ml.p_labels[(s + 1) % l]:
            return False
    for t in ml.n_tuples:
        if not 1 <= len(t) and len(set(t)) == len(t):
            return False
        if max_tuple_size is not None and len(t) > max_tuple_size:
            return False
    incidences = {}
    for s, t in enumerate(ml.n_tuples):
        for j in t:
            for i in (ml.p_labels[s], ml.p_labels[(s + 1) % l]):
                incidences[(i, j)] = incidences.get((i, j), 0) + 1
    return all(c % 2 == 0 for c in incidences.values())


# ---------------------------------------------------------------------------
# enumeration


def test_enumerate_l2_depth1():
    classes = enumerate_multilabelings(2, 1)
    assert len(classes) == 1
    only = classes[0]
    assert only.p_labels == (1, 2)
    assert only.n_tuples == ((1,), (1,))
    assert only.excess == 0


def test_enumerate_l2_depth2_tuples_match():
    for c in enumerate_multilabelings(2, 2):
        assert c.tuple_sizes[0] == c.tuple_sizes[1]
        assert c.n_tuples[0] == c.n_tuples[1]


def test_enumerate_l3_depth1():
    classes = enumerate_multilabelings(3, 1)
    assert len(classes) == 1
    assert classes[0].p_labels == (1, 2, 3)
    assert classes[0].n_tuples == ((1,), (1,), (1,))
    assert classes[0].excess == 0


def test_enumeration_is_complete_for_l2_brute_force():
    # oracle: enumerate every raw (p, n)-labeling with p = 3, n = 2 labels
    # at depth 2, keep the valid ones, and collapse by canonical key
    raw_keys = set()
    raw_count = 0
    tuples = [t for size in (1, 2) for t in itertools.permutations(range(1, 3), size)]
    for p1, p2 in itertools.permutations(range(1, 4), 2):
        for t1 in tuples:
            for t2 in tuples:
                ml = MultiLabeling(p_labels=(p1, p2), n_tuples=(t1, t2))
                if naive_validate(ml, 2):
                    raw_count += 1
                    raw_keys.add(ml.canonical_key())
    enumerated = {c.canonical_key() for c in enumerate_multilabelings(2, 2)}
    assert raw_keys == enumerated
    # orbit sizes: d=1 class has 3*2*2 = 12 raw labelings (ordered distinct
    # p-pair, one n-label); the d=2 class has 3*2 * (2*1) * 2 = 24 counting
    # both tuple orders of (1,2) on each vertex consistently
    assert raw_count == 12 + 24


def test_enumeration_respects_state_cap():
    with pytest.raises(SizeCapError):
        enumerate_multilabelings(4, 3, state_cap=10)
    with pytest.raises(SizeCapError):
        enumerate_multilabelings(7, 1)


def test_validation_matches_naive_checker_on_random_candidates():
    rng = np.random.default_rng(0)
    agree = 0
    for _ in range(10_000):
        l = int(rng.integers(2, 5))
        p_labels = tuple(int(x) for x in rng.integers(1, 4, size=l))
        n_tuples = []
        for _ in range(l):
            size = int(rng.integers(1, 4))
            labels = rng.choice(np.arange(1, 6), size=size, replace=False)
            n_tuples.append(tuple(int(j) for j in labels))
        ml = MultiLabeling(p_labels=p_labels, n_tuples=tuple(n_tuples))
        assert (not ml.validate(3)) == naive_validate(ml, 3)
        assert ml.validate(3) == ml.validate(3)  # idempotent
        agree += 1
    assert agree == 10_000


def test_canonicalization_idempotent():
    rng = np.random.default_rng(1)
    for c in enumerate_multilabelings(4, 2):
        once = c.canonical()
        assert once.canonical_key() == c.canonical_key()
        assert once.canonical() == once
        # applying label permutations must not change the key
        p_perm = {i: int(v) for i, v in zip(range(1, 9), rng.permutation(np.arange(10, 18)))}
        n_perm = {j: int(v) for j, v in zip(range(1, 15), rng.permutation(np.arange(20, 34)))}
        shuffled = MultiLabeling(
            p_labels=tuple(p_perm[i] for i in c.p_labels),
            n_tuples=tuple(tuple(reversed([n_perm[j] for j in t])) for t in c.n_tuples),
        )
        assert shuffled.canonical_key() == c.canonical_key()


# ---------------------------------------------------------------------------
# excess and lemma census


def test_excess_examples():
    assert excess(ZERO_EXCESS_EXAMPLE) == 0
    assert ZERO_EXCESS_EXAMPLE.m == 7
    assert excess(MultiLabeling(p_labels=(1, 2), n_tuples=((1,), (1,)))) == 0


def test_excess_half_integer_is_flagged_not_rejected():
    ml = MultiLabeling(p_labels=(1, 2, 3), n_tuples=((1, 2), (1, 2), (1, 2)))
    assert not ml.validate(2)  # valid labeling
    assert not ml.parity_ok
    assert excess(ml) == Fraction(1, 2)


def test_lemma_census_is_clean():
    for l in (2, 3, 4):
        for depth in (1, 2, 3):
            classes = enumerate_multilabelings(l, depth)
            assert verify_lemmas(classes, depth) == []


def test_every_enumerated_class_has_nonnegative_excess():
    for c in enumerate_multilabelings(4, 3):
        assert Fraction(c.excess) >= 0


def test_zero_excess_classes_have_flat_incidences():
    for c in enumerate_multilabelings(4, 3):
        if Fraction(c.excess) == 0:
            assert all(b in (0, 2) for b in c.edge_pair_counts().values())


def test_invalid_labeling_rejected_before_lemma_checks():
    # odd incidence count: label 1 appears once only
    bad = MultiLabeling(p_labels=(1, 2), n_tuples=((1,), (2,)))
    assert bad.validate(2)
    report = verify_lemmas([bad], 2)
    assert len(report) == 1 and report[0]["check"] == "validity"


# ---------------------------------------------------------------------------
# label-simplifying map


def test_map_zero_excess_example():
    image = label_simplifying_map(ZERO_EXCESS_EXAMPLE)
    assert image.p_labels == (1, 2, 1, 3)
    assert image.n_labels == (None, None, 4, 4)
    assert image.excess == 0
    assert image.filled == 2
    assert image.is_valid


def test_map_all_good_singles_is_identity_up_to_relabeling():
    ml = MultiLabeling(p_labels=(1, 2, 3), n_tuples=((1,), (1,), (1,)))
    image = label_simplifying_map(ml)
    assert image.p_labels == ml.p_labels
    assert image.n_labels == (1, 1, 1)


def test_map_reverses_improper_pairs():
    # pair members at positions 0 and 2 with parallel surroundings (1,2 / 1,2)
    ml = MultiLabeling(p_labels=(1, 2, 1, 2), n_tuples=((1, 2), (3,), (1, 2), (3,)))
    assert not ml.validate(2)
    image = label_simplifying_map(ml)
    assert image.is_valid
    assert image.distinct_p == ml.distinct_p
    assert sorted(image.n_labels, key=str) == sorted([None, None, 3, 3], key=str)


def test_map_preserves_p_count_and_bounds_excess():
    # the image excess is controlled linearly by the input excess
    for depth in (1, 2, 3):
        for c in enumerate_multilabelings(4, depth):
            image = label_simplifying_map(c)
            assert image.is_valid
            assert image.distinct_p == c.distinct_p
            assert Fraction(image.excess) <= 97 * depth * Fraction(c.excess)


def test_map_respects_equivalence():
    rng = np.random.default_rng(2)
    for c in enumerate_multilabelings(4, 2)[::5]:
        base_key = label_simplifying_map(c).canonical_key()
        p_perm = {i: int(v) for i, v in zip(range(1, 9), rng.permutation(np.arange(30, 38)))}
        n_perm = {j: int(v) for j, v in zip(range(1, 17), rng.permutation(np.arange(40, 56)))}
        twin = MultiLabeling(
            p_labels=tuple(p_perm[i] for i in c.p_labels),
            n_tuples=tuple(tuple(n_perm[j] for j in t) for t in c.n_tuples),
        )
        assert label_simplifying_map(twin).canonical_key() == base_key


def test_map_rejects_invalid_input():
    with pytest.raises(ConfigError):
        label_simplifying_map(MultiLabeling(p_labels=(1, 2), n_tuples=((1,), (2,))))


def test_simple_labeling_enumeration_and_validation():
    classes = enumerate_simplelabelings(4)
    assert classes  # nonempty
    for c in classes:
        assert c.is_valid
        assert Fraction(c.excess) >= 0
    # the all-empty labeling at l=4 needs matched reversals: (1,2,1,2) works
    keys = {c.canonical_key() for c in classes}
    alternating = SimpleLabeling(p_labels=(1, 2, 1, 2), n_labels=(None,) * 4)
    assert alternating.is_valid
    assert alternating.canonical_key() in keys


def test_simple_labeling_rejects_unbalanced_empty_runs():
    sl = SimpleLabeling(p_labels=(1, 2, 3), n_labels=(None, None, None))
    assert sl.validate()  # (1,-,2) occurs once but (2,-,1) never


# ---------------------------------------------------------------------------
# trace moments


def test_trace_moment_linear_kernel_closed_form():
    # E[Tr Q^2] = p(p-1)/n for the pure degree-1 kernel
    assert exact_trace_moment(2, 6, 6, [1.0]) == pytest.approx(5.0, abs=1e-12)
    for n, p in ((3, 4), (5, 2), (6, 3)):
        assert exact_trace_moment(2, n, p, [1.0]) == pytest.approx(p * (p - 1) / n, abs=1e-12)


def test_trace_moment_l3_linear_closed_form():
    # one fully-shared column index: p(p-1)(p-2)/n^2
    for n, p in ((4, 4), (6, 5)):
        assert exact_trace_moment(3, n, p, [1.0]) == pytest.approx(
            p * (p - 1) * (p - 2) / n**2, abs=1e-12
        )


def test_trace_moment_l2_general_closed_form():
    # E[e_d(z) e_{d'}(z)] = delta_{dd'} C(n, d) for unit-variance entry
    # products, so E[Tr Q^2] = p(p-1)/n * sum_d a_d^2 d! C(n,d) / n^d
    rng = np.random.default_rng(3)
    for _ in range(10):
        n, p = int(rng.integers(2, 7)), int(rng.integers(2, 7))
        coeffs = [float(c) for c in rng.standard_normal(3)]
        expected = (
            p
            * (p - 1)
            / n
            * sum(
                c**2 * math.factorial(d) * math.comb(n, d) / n**d
                for d, c in enumerate(coeffs, start=1)
            )
        )
        got = exact_trace_moment(2, n, p, coeffs)
        assert got == pytest.approx(expected, rel=1e-12)
        # only second moments of the entries enter at l = 2
        assert exact_trace_moment(2, n, p, coeffs, "symmetric_rademacher") == pytest.approx(
            expected, rel=1e-12
        )


def test_trace_moment_monte_carlo_agreement():
    mean, se = sample_trace_moment(2, 6, 6, [1.0], trials=30_000, seed=4)
    assert abs(mean - 5.0) <= 3 * se
    exact = exact_trace_moment(4, 4, 5, [1.0, 0.5], entry_law="symmetric_rademacher")
    mean, se = sample_trace_moment(
        4, 4, 5, [1.0, 0.5], entry_law="symmetric_rademacher", trials=30_000, seed=5
    )
    assert abs(mean - exact) <= 3 * se


def test_first_order_matrix_matches_decomposition_scale():
    # Q entries for the linear kernel are the off-diagonal Gram entries / n
    rng = np.random.default_rng(6)
    X = rng.standard_normal((5, 6))
    Q = first_order_matrix(X, [1.0])
    expected = X @ X.T / 6
    np.fill_diagonal(expected, 0.0)
    assert np.max(np.abs(Q - expected)) < 1e-12


def test_trace_moment_size_caps():
    with pytest.raises(SizeCapError):
        exact_trace_moment(5, 4, 4, [1.0])
    with pytest.raises(SizeCapError):
        exact_trace_moment(2, 7, 4, [1.0])
    with pytest.raises(SizeCapError):
        exact_trace_moment(2, 4, 7, [1.0])
    with pytest.raises(SizeCapError):
        exact_trace_moment(2, 4, 4, [1.0, 0.0, 0.0, 1.0])
