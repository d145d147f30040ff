import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from dckm.core import SampleWeights
from dckm.metrics import ari, contingency_table, correlation_amount, nmi

from util import ari_pair_oracle

labelings = st.lists(st.integers(min_value=0, max_value=3), min_size=2, max_size=30)


class TestContingency:
    def test_counts(self):
        counts = contingency_table([0, 0, 1, 1], [0, 1, 0, 1])
        assert np.array_equal(counts, [[1, 1], [1, 1]])
        assert counts.sum() == 4

    def test_length_mismatch(self):
        with pytest.raises(ValueError):
            contingency_table([0, 1], [0, 1, 2])


class TestNmi:
    def test_identical(self):
        assert nmi([0, 0, 1, 1], [0, 0, 1, 1]) == 1.0

    def test_relabeling_invariance(self):
        assert nmi([0, 0, 1, 1], [1, 1, 0, 0]) == 1.0

    def test_independent_alternation_is_zero(self):
        assert nmi([0, 0, 1, 1], [0, 1, 0, 1]) == 0.0

    def test_both_single_cluster(self):
        assert nmi([0, 0, 0], [0, 0, 0]) == 1.0

    def test_one_single_cluster(self):
        assert nmi([0, 0, 0, 0], [0, 1, 0, 1]) == 0.0

    @given(labelings, labelings)
    @settings(max_examples=60)
    def test_symmetric_and_bounded(self, a, b):
        m = min(len(a), len(b))
        a, b = a[:m], b[:m]
        value = nmi(a, b)
        assert 0.0 <= value <= 1.0
        assert value == pytest.approx(nmi(b, a), abs=1e-12)

    @given(labelings, st.permutations(range(4)))
    @settings(max_examples=40)
    def test_relabel_invariance_property(self, a, perm):
        b = [perm[x] for x in a]
        assert nmi(a, b) == pytest.approx(1.0)


class TestAri:
    def test_identical(self):
        assert ari([0, 1, 0, 2], [0, 1, 0, 2]) == 1.0

    def test_alternating_hand_value(self):
        assert ari([0, 0, 1, 1], [0, 1, 0, 1]) == pytest.approx(-0.5)

    def test_matches_pair_oracle(self):
        rng = np.random.default_rng(3)
        for _ in range(20):
            n = int(rng.integers(4, 15))
            a = rng.integers(0, 3, n)
            b = rng.integers(0, 3, n)
            assert ari(a, b) == pytest.approx(ari_pair_oracle(a, b), abs=1e-12)

    def test_random_labelings_centered_near_zero(self):
        rng = np.random.default_rng(0)
        values = []
        for _ in range(100):
            a = rng.integers(0, 4, 1000)
            b = rng.integers(0, 4, 1000)
            values.append(ari(a, b))
        assert abs(float(np.mean(values))) < 0.02

    def test_degenerate_all_singletons(self):
        assert ari([0, 1, 2], [2, 0, 1]) == 1.0

    def test_degenerate_both_single_cluster(self):
        assert ari([0, 0, 0], [1, 1, 1]) == 1.0

    def test_singletons_vs_one_cluster(self):
        assert ari([0, 1, 2], [0, 0, 0]) == 0.0

    def test_needs_two_samples(self):
        with pytest.raises(ValueError):
            ari([0], [0])

    @given(labelings, labelings)
    @settings(max_examples=60)
    def test_symmetry(self, a, b):
        m = min(len(a), len(b))
        a, b = a[:m], b[:m]
        assert ari(a, b) == pytest.approx(ari(b, a), abs=1e-12)


class TestCorrelationAmount:
    def test_zero_for_empirically_independent_columns(self):
        X = np.array([[1, 1], [1, 0], [0, 1], [0, 0]], dtype=float)
        assert correlation_amount(X) == pytest.approx(0.0, abs=1e-15)

    def test_identical_bernoulli_half_columns(self):
        X = np.array([[1.0, 1.0], [0.0, 0.0]])
        assert correlation_amount(X) == pytest.approx(np.sqrt(2) * 0.25)

    def test_weight_scale_invariance(self):
        rng = np.random.default_rng(1)
        X = (rng.random((30, 5)) < 0.4).astype(float)
        w = rng.uniform(0.1, 2.0, 30)
        base = correlation_amount(X, w)
        for c in (0.2, 5.0, 300.0):
            assert correlation_amount(X, c * w) == pytest.approx(base, rel=1e-12)

    def test_column_permutation_invariance(self):
        rng = np.random.default_rng(2)
        X = (rng.random((25, 6)) < 0.5).astype(float)
        perm = rng.permutation(6)
        assert correlation_amount(X[:, perm]) == pytest.approx(correlation_amount(X), rel=1e-12)

    def test_include_diagonal_flag(self):
        rng = np.random.default_rng(4)
        X = (rng.random((20, 4)) < 0.5).astype(float)
        assert correlation_amount(X, include_diagonal=True) >= correlation_amount(X)

    def test_accepts_sample_weights(self):
        X = np.array([[1.0, 1.0], [0.0, 0.0]])
        assert correlation_amount(X, SampleWeights.uniform(2)) == pytest.approx(
            correlation_amount(X)
        )

    def test_invalid_weights(self):
        X = np.eye(3)
        with pytest.raises(ValueError):
            correlation_amount(X, np.array([1.0, -1.0, 0.0]))
        with pytest.raises(ValueError):
            correlation_amount(X, np.zeros(3))
        with pytest.raises(ValueError):
            correlation_amount(X, np.ones(2))
