"""Seeded stratified partitioning shared by cross-validation, attribute
ranking and learning curves."""

from __future__ import annotations

import numpy as np

from .errors import BadParameter


def _class_order(y: np.ndarray, n_classes: int, seed: int) -> list[np.ndarray]:
    rng = np.random.default_rng(seed)
    out = []
    for c in range(n_classes):
        idx = np.flatnonzero(y == c)
        out.append(idx[rng.permutation(idx.size)])
    return out


def stratified_folds(y, k: int, seed: int = 1, n_classes: int | None = None) -> list[np.ndarray]:
    """Split instance indices into ``k`` stratified folds.

    Each class is shuffled, the classes are laid end to end and the
    sequence is dealt round-robin, so per-class fold counts differ by at
    most one and fold sizes depend only on the class counts.
    """
    y = np.asarray(y, dtype=np.int64)
    n = y.size
    if not 2 <= k <= n:
        raise BadParameter(f"folds must be between 2 and {n}, got {k}")
    n_classes = int(y.max()) + 1 if n_classes is None else n_classes
    dealt = np.concatenate(_class_order(y, n_classes, seed))
    folds = [np.sort(dealt[f::k]) for f in range(k)]
    return folds


def stratified_sample(y, size: int, seed: int = 1, n_classes: int | None = None) -> np.ndarray:
    """Sorted indices of a class-proportional sample of ``size`` instances.

    Uses the same shuffle as ``stratified_folds``; the first ``size``
    instances of the interleaved order are taken, so class counts are
    proportional to within one instance.
    """
    y = np.asarray(y, dtype=np.int64)
    if not 1 <= size <= y.size:
        raise BadParameter(f"sample size must be between 1 and {y.size}, got {size}")
    if size == y.size:
        return np.arange(y.size)
    n_classes = int(y.max()) + 1 if n_classes is None else n_classes
    keys, order = [], []
    for idx in _class_order(y, n_classes, seed):
        keys.append((np.arange(idx.size) + 0.5) / max(idx.size, 1))
        order.append(idx)
    keys, order = np.concatenate(keys), np.concatenate(order)
    picked = order[np.argsort(keys, kind="stable")[:size]]
    return np.sort(picked)
