"""Label-stratified k-fold assignment."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from src.errors import CoughScreenError
from src.pipeline.manifest import Manifest
from src.pipeline.metrics import SingleClassError

DEFAULT_FOLDS = 5


@dataclass(frozen=True)
class FoldPlan:
    k: int
    assignments: dict[str, int]

    def fold(self, index: int) -> list[str]:
        """uuids held out in fold ``index``, in assignment order."""
        return [uuid for uuid, f in self.assignments.items() if f == index]

    def train_uuids(self, index: int) -> list[str]:
        return [uuid for uuid, f in self.assignments.items() if f != index]

    def sizes(self) -> list[int]:
        counts = [0] * self.k
        for f in self.assignments.values():
            counts[f] += 1
        return counts


def kfold_split(manifest: Manifest, k: int = DEFAULT_FOLDS, seed: int = 42) -> FoldPlan:
    """
    Assign every row to one of ``k`` folds.

    Rows are shuffled within each label and dealt round-robin; negatives
    continue the deal where positives stopped, so fold sizes also differ by
    at most one. A manifest whose rows all carry ``fold`` keeps that plan.
    """
    if k < 2:
        raise ValueError(f"k must be >= 2, got {k}")
    if manifest.has_folds:
        return _plan_from_column(manifest, k)

    rng = np.random.default_rng(seed)
    assignments: dict[str, int] = {}
    offset = 0
    for label in (1, 0):
        members = sorted(row.uuid for row in manifest if row.label == label)
        if len(members) < k:
            raise TooFewSamplesError(f"label {label} has {len(members)} rows; {k}-fold stratification needs >= {k}")
        for i, index in enumerate(rng.permutation(len(members))):
            assignments[members[index]] = (offset + i) % k
        offset = (offset + len(members)) % k

    # report in manifest order
    return FoldPlan(k=k, assignments={uuid: assignments[uuid] for uuid in manifest.uuids})


def _plan_from_column(manifest: Manifest, k: int) -> FoldPlan:
    assignments = {row.uuid: int(row.fold) for row in manifest if row.fold is not None}
    bad = sorted({f for f in assignments.values() if not 0 <= f < k})
    if bad:
        raise TooFewSamplesError(f"fold column holds indices {bad} outside [0, {k})")
    plan = FoldPlan(k=k, assignments=assignments)
    empty = [i for i, size in enumerate(plan.sizes()) if size == 0]
    if empty:
        raise TooFewSamplesError(f"fold column leaves folds {empty} empty")
    # every held-out fold needs both classes for its AUC
    for index in range(k):
        labels = {manifest.get(uuid).label for uuid in plan.fold(index)}
        if labels != {0, 1}:
            raise SingleClassError(f"fold column gives fold {index} only label {labels.pop()}")
    return plan


class TooFewSamplesError(CoughScreenError):
    """Raised when the manifest cannot fill every fold."""

    pass
