"""Tests for the rank-based AUC."""

import numpy as np
import pytest

from src.pipeline.metrics import SingleClassError, auc, auc_from_arrays, mean_std


def pairwise_auc(scores: np.ndarray, labels: np.ndarray) -> float:
    """O(P*N) reference: concordant pairs plus half the ties."""
    pos = scores[labels == 1]
    neg = scores[labels == 0]
    concordant = 0
    ties = 0
    for p in pos:
        for n in neg:
            if p > n:
                concordant += 1
            elif p == n:
                ties += 1
    return (concordant + 0.5 * ties) / (len(pos) * len(neg))


class TestAuc:
    """Mann-Whitney AUC."""

    def test_perfect_separation(self):
        assert auc([(0.9, 1), (0.8, 1), (0.3, 0), (0.2, 0)]) == 1.0

    def test_interleaved(self):
        assert auc([(0.9, 1), (0.3, 1), (0.8, 0), (0.2, 0)]) == 0.75

    def test_single_tie(self):
        assert auc([(0.5, 1), (0.5, 0)]) == 0.5

    def test_inverted(self):
        assert auc([(0.1, 1), (0.9, 0)]) == 0.0

    def test_matches_pairwise_oracle_exactly(self):
        rng = np.random.default_rng(0)
        for _ in range(1000):
            n = int(rng.integers(2, 201))
            labels = rng.integers(0, 2, n)
            labels[0], labels[1] = 0, 1
            # coarse grid to force ties
            scores = rng.integers(0, int(rng.integers(2, 50)), n) / 10.0
            assert auc_from_arrays(scores, labels) == pairwise_auc(scores, labels)

    def test_invariant_under_monotone_transform(self):
        rng = np.random.default_rng(1)
        for _ in range(50):
            scores = rng.uniform(0.01, 1.0, 60)
            labels = rng.integers(0, 2, 60)
            labels[:2] = [0, 1]
            base = auc_from_arrays(scores, labels)
            assert auc_from_arrays(np.log(scores), labels) == base
            assert auc_from_arrays(scores**3 + 7.0, labels) == base

    def test_single_class(self):
        with pytest.raises(SingleClassError):
            auc([(0.1, 1), (0.2, 1)])
        with pytest.raises(SingleClassError):
            auc_from_arrays([], [])

    def test_bounded(self):
        rng = np.random.default_rng(2)
        for _ in range(100):
            labels = rng.integers(0, 2, 30)
            labels[:2] = [1, 0]
            assert 0.0 <= auc_from_arrays(rng.standard_normal(30), labels) <= 1.0


class TestMeanStd:
    """Summary statistics for fold AUCs."""

    def test_population_std(self):
        mean, std = mean_std([0.8, 1.0])
        assert mean == pytest.approx(0.9)
        assert std == pytest.approx(0.1)

    def test_single_value(self):
        assert mean_std([0.7]) == (pytest.approx(0.7), 0.0)
