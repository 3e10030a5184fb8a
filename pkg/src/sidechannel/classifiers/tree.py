"""Binary threshold trees on numeric attributes: decision stump, C4.5 with
error-based pruning, and the unpruned random-subspace tree used by forests."""

from __future__ import annotations

from dataclasses import dataclass, field
from statistics import NormalDist
from typing import Callable, ClassVar

import numpy as np

from ..dataset import Dataset
from .base import Model, majority_index, require_rows

# gains closer than this are ties; ties go to the lower attribute / threshold
TIE_EPS = 1e-12


def entropy_rows(counts: np.ndarray) -> np.ndarray:
    """Entropy in bits of each row of a class-count matrix."""
    counts = np.asarray(counts, dtype=np.float64)
    tot = counts.sum(axis=-1, keepdims=True)
    with np.errstate(divide="ignore", invalid="ignore"):
        p = np.where(tot > 0, counts / np.where(tot > 0, tot, 1), 0.0)
        terms = np.where(p > 0, p * np.log2(np.where(p > 0, p, 1)), 0.0)
    return -terms.sum(axis=-1)


@dataclass
class SplitCandidate:
    attribute: int
    threshold: float
    gain: float
    split_info: float

    @property
    def gain_ratio(self) -> float:
        return self.gain / self.split_info if self.split_info > 0 else 0.0


def _midpoint(lo: float, hi: float) -> float:
    mid = (lo + hi) / 2.0
    # adjacent floats: keep ``hi`` on the right-hand side
    return lo if mid >= hi else mid


def best_split_on(x: np.ndarray, y: np.ndarray, n_classes: int, min_leaf: int = 1):
    """Highest-gain midpoint split of one attribute, or None.

    Returns (gain, threshold, split_info). Gain ties resolve to the lowest
    threshold.
    """
    n = x.size
    if n < 2 * min_leaf:
        return None
    order = np.argsort(x, kind="stable")
    xs, ys = x[order], y[order]
    cum = np.cumsum(np.eye(n_classes, dtype=np.int64)[ys], axis=0)
    pos = np.nonzero(xs[:-1] < xs[1:])[0]  # split between pos and pos+1
    n_left = pos + 1
    ok = (n_left >= min_leaf) & (n - n_left >= min_leaf)
    pos, n_left = pos[ok], n_left[ok]
    if pos.size == 0:
        return None
    total = cum[-1]
    left = cum[pos]
    right = total - left
    fl = n_left / n
    h_parent = float(entropy_rows(total))
    gains = h_parent - (fl * entropy_rows(left) + (1 - fl) * entropy_rows(right))
    best = float(gains.max())
    i = int(np.nonzero(gains >= best - TIE_EPS)[0][0])
    split_info = float(entropy_rows(np.array([n_left[i], n - n_left[i]])))
    return float(gains[i]), _midpoint(xs[pos[i]], xs[pos[i] + 1]), split_info


def best_gain_split(X, y, n_classes, attributes, min_leaf=1) -> SplitCandidate | None:
    """Information-gain-best split over ``attributes``; ties go to the lower index."""
    best = None
    for a in sorted(attributes):
        r = best_split_on(X[:, a], y, n_classes, min_leaf)
        if r is None:
            continue
        if best is None or r[0] > best.gain + TIE_EPS:
            best = SplitCandidate(a, r[1], r[0], r[2])
    return best


# ---------------------------------------------------------------- nodes


@dataclass
class Node:
    distribution: np.ndarray  # training class counts reaching this node
    attribute: int = -1
    threshold: float = 0.0
    left: "Node | None" = None
    right: "Node | None" = None

    @property
    def is_leaf(self) -> bool:
        return self.left is None

    @property
    def label(self) -> int:
        return majority_index(self.distribution)

    @property
    def coverage(self) -> float:
        return float(self.distribution.sum())

    @property
    def misclassified(self) -> float:
        return self.coverage - float(self.distribution[self.label])

    def make_leaf(self) -> None:
        self.attribute, self.left, self.right = -1, None, None

    def leaves(self) -> int:
        return 1 if self.is_leaf else self.left.leaves() + self.right.leaves()

    def size(self) -> int:
        return 1 if self.is_leaf else 1 + self.left.size() + self.right.size()

    def depth(self) -> int:
        return 0 if self.is_leaf else 1 + max(self.left.depth(), self.right.depth())

    def proba(self, X: np.ndarray) -> np.ndarray:
        out = np.empty((X.shape[0], self.distribution.size))
        self._fill(X, np.arange(X.shape[0]), out)
        return out

    def _fill(self, X, idx, out) -> None:
        if self.is_leaf:
            tot = self.distribution.sum()
            if tot > 0:
                out[idx] = self.distribution / tot
            else:
                out[idx] = np.eye(self.distribution.size)[0]
            return
        go_left = X[idx, self.attribute] <= self.threshold
        self.left._fill(X, idx[go_left], out)
        self.right._fill(X, idx[~go_left], out)

    def to_dict(self) -> dict:
        d = {"distribution": [float(v) for v in self.distribution]}
        if not self.is_leaf:
            d.update(
                attribute=int(self.attribute),
                threshold=float(self.threshold),
                left=self.left.to_dict(),
                right=self.right.to_dict(),
            )
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "Node":
        node = cls(np.array(d["distribution"], dtype=np.float64))
        if "attribute" in d:
            node.attribute = int(d["attribute"])
            node.threshold = float(d["threshold"])
            node.left = cls.from_dict(d["left"])
            node.right = cls.from_dict(d["right"])
        return node


def format_value(v: float) -> str:
    return f"{v:.7g}" if abs(v) < 1e7 else f"{v:.10g}"


def _leaf_text(node: Node, classes) -> str:
    cov, mis = node.coverage, node.misclassified
    counts = f"({cov:.1f}/{mis:.1f})" if mis > 0 else f"({cov:.1f})"
    return f"{classes[node.label]} {counts}"


def render_tree(node: Node, names, classes) -> str:
    """Indented printout with one "name <= t" / "name > t" line per branch."""
    if node.is_leaf:
        return f": {_leaf_text(node, classes)}\n"
    lines: list[str] = []
    _render(node, names, classes, 0, lines)
    return "\n".join(lines) + "\n"


def _render(node, names, classes, depth, lines) -> None:
    pad = "|   " * depth
    t = format_value(node.threshold)
    for op, child in (("<=", node.left), (">", node.right)):
        head = f"{pad}{names[node.attribute]} {op} {t}"
        if child.is_leaf:
            lines.append(f"{head}: {_leaf_text(child, classes)}")
        else:
            lines.append(head)
            _render(child, names, classes, depth + 1, lines)


# ---------------------------------------------------------------- growth


Chooser = Callable[[np.ndarray, np.ndarray, int], "SplitCandidate | None"]


def grow(X, y, n_classes, idx, choose: Chooser, min_leaf: int) -> Node:
    dist = np.bincount(y[idx], minlength=n_classes).astype(np.float64)
    node = Node(dist)
    if np.count_nonzero(dist) <= 1 or idx.size < 2 * min_leaf:
        return node
    split = choose(X[idx], y[idx], idx.size)
    if split is None or split.gain <= TIE_EPS:
        return node
    go_left = X[idx, split.attribute] <= split.threshold
    node.attribute, node.threshold = split.attribute, split.threshold
    node.left = grow(X, y, n_classes, idx[go_left], choose, min_leaf)
    node.right = grow(X, y, n_classes, idx[~go_left], choose, min_leaf)
    return node


def c45_chooser(n_classes: int, min_leaf: int) -> Chooser:
    """Gain ratio among attributes whose gain reaches the average gain."""

    def choose(Xn, yn, n):
        cands = []
        for a in range(Xn.shape[1]):
            r = best_split_on(Xn[:, a], yn, n_classes, min_leaf)
            if r is not None and r[0] > TIE_EPS:
                cands.append(SplitCandidate(a, r[1], r[0], r[2]))
        if not cands:
            return None
        avg = sum(c.gain for c in cands) / len(cands)
        best = None
        for c in cands:
            if c.gain < avg - TIE_EPS:
                continue
            if best is None or c.gain_ratio > best.gain_ratio + TIE_EPS:
                best = c
        return best

    return choose


# ---------------------------------------------------------------- pruning


def added_errors(n: float, e: float, cf: float) -> float:
    """Extra errors implied by the upper ``cf`` confidence limit of a
    binomial with ``e`` observed errors out of ``n``."""
    if n <= 0:
        return 0.0
    if e < 1:
        base = n * (1 - cf ** (1.0 / n))
        if e == 0:
            return base
        return base + e * (added_errors(n, 1.0, cf) - base)
    if e + 0.5 >= n:
        return max(n - e, 0.0)
    z = NormalDist().inv_cdf(1 - cf)
    f = (e + 0.5) / n
    r = (f + z * z / (2 * n) + z * np.sqrt(f / n - f * f / n + z * z / (4 * n * n))) / (1 + z * z / n)
    return float(r * n - e)


def estimated_errors(node: Node, cf: float) -> float:
    return node.misclassified + added_errors(node.coverage, node.misclassified, cf)


def prune(node: Node, cf: float) -> float:
    """Bottom-up error-based pruning in place; returns the estimated errors."""
    if node.is_leaf:
        return estimated_errors(node, cf)
    subtree = prune(node.left, cf) + prune(node.right, cf)
    as_leaf = estimated_errors(node, cf)
    if as_leaf <= subtree + 1e-9:
        node.make_leaf()
        return as_leaf
    return subtree


# ---------------------------------------------------------------- models


@dataclass
class TreeModel(Model):
    kind: ClassVar[str] = "tree"
    title: ClassVar[str] = "J48 pruned tree"

    root: Node = field(default=None)

    def predict_proba(self, X) -> np.ndarray:
        return self.root.proba(self._check(X))

    def leaves(self) -> int:
        return self.root.leaves()

    def size(self) -> int:
        return self.root.size()

    def report(self) -> str:
        body = render_tree(self.root, self.attribute_names, self.class_values)
        return (
            f"{self.title}\n{'-' * len(self.title)}\n\n{body}\n"
            f"Number of Leaves  : \t{self.leaves()}\n\n"
            f"Size of the tree : \t{self.size()}\n"
        )

    def extras(self) -> dict[str, float]:
        return {"leaves": self.leaves(), "nodes": self.size()}


@dataclass
class StumpModel(TreeModel):
    kind: ClassVar[str] = "stump"
    title: ClassVar[str] = "Decision Stump"


def train_stump(ds: Dataset) -> StumpModel:
    """One information-gain split; a majority leaf when nothing splits."""
    require_rows(ds)
    dist = ds.class_counts().astype(np.float64)
    root = Node(dist)
    split = None
    if len(ds) >= 2 and np.count_nonzero(dist) > 1:
        split = best_gain_split(ds.X, ds.y, ds.n_classes, range(ds.n_attributes))
    if split is not None and split.gain > TIE_EPS:
        go_left = ds.X[:, split.attribute] <= split.threshold
        root.attribute, root.threshold = split.attribute, split.threshold
        root.left = Node(np.bincount(ds.y[go_left], minlength=ds.n_classes).astype(np.float64))
        root.right = Node(np.bincount(ds.y[~go_left], minlength=ds.n_classes).astype(np.float64))
    return StumpModel(ds.attribute_names, ds.class_values, root)


def train_c45(ds: Dataset, confidence: float = 0.25, min_leaf: int = 2, prune_tree: bool = True) -> TreeModel:
    require_rows(ds)
    root = grow(
        ds.X, ds.y, ds.n_classes, np.arange(len(ds)),
        c45_chooser(ds.n_classes, min_leaf), min_leaf,
    )
    if prune_tree:
        prune(root, confidence)
    return TreeModel(ds.attribute_names, ds.class_values, root)


def random_tree_chooser(n_classes: int, k: int, rng: np.random.Generator) -> Chooser:
    def choose(Xn, yn, n):
        attrs = rng.choice(Xn.shape[1], size=min(k, Xn.shape[1]), replace=False)
        return best_gain_split(Xn, yn, n_classes, attrs, min_leaf=1)

    return choose


def grow_random_tree(X, y, n_classes, k, rng) -> Node:
    return grow(X, y, n_classes, np.arange(y.size), random_tree_chooser(n_classes, k, rng), 1)


def train_unpruned_tree(ds: Dataset) -> TreeModel:
    """Information-gain tree over all attributes, grown to purity."""
    require_rows(ds)
    full = lambda Xn, yn, n: best_gain_split(Xn, yn, ds.n_classes, range(ds.n_attributes))
    root = grow(ds.X, ds.y, ds.n_classes, np.arange(len(ds)), full, 1)
    return TreeModel(ds.attribute_names, ds.class_values, root)
