"""Random forest of unpruned random-subspace trees with out-of-bag error."""

from __future__ import annotations

import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import ClassVar

import numpy as np

from ..dataset import Dataset
from ..errors import BadParameter
from .base import Model, require_rows
from .tree import Node, grow_random_tree


def default_k(n_attributes: int) -> int:
    return int(math.log2(n_attributes)) + 1 if n_attributes > 0 else 1


def tree_rng(seed: int, index: int) -> np.random.Generator:
    # counter-based stream per tree so the forest does not depend on scheduling
    return np.random.Generator(np.random.Philox(key=seed + index))


def _votes(trees: list[Node], X: np.ndarray, n_classes: int) -> np.ndarray:
    votes = np.zeros((X.shape[0], n_classes))
    for t in trees:
        pred = np.argmax(t.proba(X), axis=1)
        votes[np.arange(X.shape[0]), pred] += 1
    return votes


@dataclass
class ForestModel(Model):
    kind: ClassVar[str] = "forest"

    trees: list[Node] = field(default_factory=list)
    k_features: int = 0
    oob_error: float = float("nan")

    def predict_proba(self, X) -> np.ndarray:
        X = self._check(X)
        return _votes(self.trees, X, self.n_classes) / len(self.trees)

    def report(self) -> str:
        text = (
            f"Random forest of {len(self.trees)} trees, each constructed while "
            f"considering {self.k_features} random feature{'s' if self.k_features != 1 else ''}.\n"
        )
        if not math.isnan(self.oob_error):
            text += f"Out of bag error: {self.oob_error:.4f}\n"
        return text

    def extras(self) -> dict[str, float]:
        return {
            "oob_error": self.oob_error,
            "nodes": float(sum(t.size() for t in self.trees)),
        }


def train_random_forest(
    ds: Dataset,
    trees: int = 10,
    k_features: int | None = None,
    seed: int = 1,
    bootstrap: bool = True,
    workers: int | None = None,
) -> ForestModel:
    if trees < 1:
        raise BadParameter("a forest needs at least one tree")
    require_rows(ds)
    n, m = len(ds), ds.n_attributes
    k = default_k(m) if not k_features else int(k_features)
    if not 1 <= k <= m:
        raise BadParameter(f"k_features must be in [1, {m}]")

    def build(t: int):
        rng = tree_rng(seed, t)
        idx = rng.integers(0, n, size=n) if bootstrap else np.arange(n)
        root = grow_random_tree(ds.X[idx], ds.y[idx], ds.n_classes, k, rng)
        in_bag = np.zeros(n, dtype=bool)
        in_bag[idx] = True
        return root, in_bag

    if workers is None:
        workers = int(os.environ.get("SIDECHANNEL_THREADS", "1"))
    if workers > 1:
        with ThreadPoolExecutor(workers) as pool:
            built = list(pool.map(build, range(trees)))
    else:
        built = [build(t) for t in range(trees)]

    roots = [r for r, _ in built]
    oob = float("nan")
    if bootstrap:
        votes = np.zeros((n, ds.n_classes))
        for root, in_bag in built:
            out = ~in_bag
            if out.any():
                pred = np.argmax(root.proba(ds.X[out]), axis=1)
                votes[np.nonzero(out)[0], pred] += 1
        has = votes.sum(axis=1) > 0
        if has.any():
            oob = float(np.mean(np.argmax(votes[has], axis=1) != ds.y[has]))
    return ForestModel(ds.attribute_names, ds.class_values, roots, k, oob)
