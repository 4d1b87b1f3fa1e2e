"""ROC-AUC as the Mann-Whitney rank statistic."""

from __future__ import annotations

from collections.abc import Iterable, Sequence

import numpy as np
from scipy.stats import rankdata

from src.errors import CoughScreenError


def auc(predictions: Iterable[tuple[float, int]]) -> float:
    """
    Area under the ROC curve for (score, label) pairs.

    Equals (#concordant pairs + 0.5 * #tied pairs) / (P * N), computed from
    average ranks in O(n log n).
    """
    pairs = list(predictions)
    scores = np.array([p[0] for p in pairs], dtype=np.float64)
    labels = np.array([p[1] for p in pairs], dtype=np.int64)
    return auc_from_arrays(scores, labels)


def auc_from_arrays(scores: np.ndarray | Sequence[float], labels: np.ndarray | Sequence[int]) -> float:
    scores = np.asarray(scores, dtype=np.float64)
    labels = np.asarray(labels)
    positives = int((labels == 1).sum())
    negatives = int((labels == 0).sum())
    if positives == 0 or negatives == 0:
        raise SingleClassError(f"AUC needs both classes, got {positives} positive and {negatives} negative")
    ranks = rankdata(scores, method="average")
    # average ranks are multiples of 0.5, so the doubled sums are exact integers
    doubled_u = 2.0 * ranks[labels == 1].sum() - positives * (positives + 1)
    return float(doubled_u / (2.0 * positives * negatives))


def mean_std(values: Sequence[float]) -> tuple[float, float]:
    """Mean and population standard deviation."""
    arr = np.asarray(values, dtype=np.float64)
    return float(arr.mean()), float(arr.std())


class SingleClassError(CoughScreenError):
    """Raised when AUC is requested with only one class present."""

    pass
