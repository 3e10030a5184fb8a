"""Attribute ranking and subset selection.

Numeric attributes are first discretized with the Fayyad-Irani MDL
criterion. Ranking scores each attribute by the chi-square statistic of its
(bin x class) table; subset search maximises the CFS merit, built from
symmetric uncertainty, with forward best-first search.
"""

from __future__ import annotations

import heapq
import math
from dataclasses import dataclass, field
from typing import ClassVar

import numpy as np

from .classifiers import Model, train
from .dataset import Dataset
from .errors import BadParameter
from .sampling import stratified_folds

# ---------------------------------------------------------------- discretization


def _entropy(counts: np.ndarray) -> float:
    tot = counts.sum()
    if tot <= 0:
        return 0.0
    p = counts[counts > 0] / tot
    return float(-(p * np.log2(p)).sum())


def _entropy_rows(counts: np.ndarray) -> np.ndarray:
    tot = counts.sum(axis=1, keepdims=True)
    with np.errstate(divide="ignore", invalid="ignore"):
        p = counts / np.where(tot > 0, tot, 1)
        t = np.where(p > 0, p * np.log2(np.where(p > 0, p, 1)), 0.0)
    return -t.sum(axis=1)


def mdl_cuts(x: np.ndarray, y: np.ndarray, n_classes: int) -> np.ndarray:
    """Fayyad-Irani recursive binary cuts for one attribute."""
    order = np.argsort(x, kind="stable")
    xs, ys = np.asarray(x, dtype=np.float64)[order], np.asarray(y)[order]
    cuts: list[float] = []
    _mdl_part(xs, ys, n_classes, cuts)
    return np.array(sorted(cuts), dtype=np.float64)


def _mdl_part(xs, ys, n_classes, cuts) -> None:
    n = xs.size
    if n < 2:
        return
    cum = np.cumsum(np.eye(n_classes, dtype=np.int64)[ys], axis=0)
    pos = np.nonzero(xs[:-1] < xs[1:])[0]
    if pos.size == 0:
        return
    total = cum[-1]
    left = cum[pos]
    right = total - left
    nl = (pos + 1).astype(np.float64)
    wsum = (nl * _entropy_rows(left) + (n - nl) * _entropy_rows(right)) / n
    i = int(np.argmin(wsum))  # first minimum: lowest cut among ties
    h = _entropy(total)
    gain = h - wsum[i]
    l, r = left[i], right[i]
    k, k1, k2 = np.count_nonzero(total), np.count_nonzero(l), np.count_nonzero(r)
    delta = math.log2(3**k - 2) - (k * h - k1 * _entropy(l) - k2 * _entropy(r))
    if gain <= (math.log2(n - 1) + delta) / n:
        return
    p = pos[i]
    lo, hi = xs[p], xs[p + 1]
    mid = (lo + hi) / 2.0
    cuts.append(lo if mid >= hi else mid)
    _mdl_part(xs[: p + 1], ys[: p + 1], n_classes, cuts)
    _mdl_part(xs[p + 1 :], ys[p + 1 :], n_classes, cuts)


@dataclass(frozen=True)
class DiscretizationMap:
    cuts: tuple[np.ndarray, ...]  # per attribute, strictly increasing

    def bins(self, X: np.ndarray) -> np.ndarray:
        return np.column_stack(
            [np.searchsorted(c, X[:, a], side="left") for a, c in enumerate(self.cuts)]
        ) if self.cuts else np.zeros((X.shape[0], 0), dtype=np.int64)


def discretize_mdl(ds: Dataset) -> DiscretizationMap:
    return DiscretizationMap(
        tuple(mdl_cuts(ds.X[:, a], ds.y, ds.n_classes) for a in range(ds.n_attributes))
    )


# ---------------------------------------------------------------- chi-square ranking


def contingency_chi_square(table: np.ndarray) -> float:
    table = np.asarray(table, dtype=np.float64)
    table = table[table.sum(axis=1) > 0][:, table.sum(axis=0) > 0]
    if table.shape[0] < 2 or table.shape[1] < 2:
        return 0.0
    n = table.sum()
    expected = np.outer(table.sum(axis=1), table.sum(axis=0)) / n
    return float(((table - expected) ** 2 / expected).sum())


def chi_square_merit(ds: Dataset, attribute: int, cuts: np.ndarray) -> float:
    cuts = np.asarray(cuts, dtype=np.float64)
    if cuts.size == 0:
        return 0.0
    b = np.searchsorted(cuts, ds.X[:, attribute], side="left")
    table = np.zeros((cuts.size + 1, ds.n_classes))
    np.add.at(table, (b, ds.y), 1)
    return contingency_chi_square(table)


def _ranks(merits: np.ndarray, rng: np.random.Generator | None = None) -> np.ndarray:
    # 1-based, merit descending; exact ties are broken by a seeded shuffle
    # (ties to the lower index without a generator)
    tiebreak = rng.permutation(merits.size) if rng is not None else np.arange(merits.size)
    order = sorted(range(merits.size), key=lambda a: (-merits[a], tiebreak[a]))
    r = np.empty(merits.size)
    r[order] = np.arange(1, merits.size + 1)
    return r


@dataclass
class RankEntry:
    index: int
    name: str
    merit_mean: float
    merit_std: float
    rank_mean: float
    rank_std: float


@dataclass
class RankingReport:
    entries: list[RankEntry]
    folds: int
    seed: int

    def order(self) -> list[str]:
        return [e.name for e in self.entries]

    def format(self) -> str:
        lines = [
            f"=== Attribute selection {self.folds} fold cross-validation (stratified), seed: {self.seed} ===",
            "",
            "average merit      average rank  attribute",
        ]
        for e in self.entries:
            merit = f"{_g(e.merit_mean)} +-{_g(e.merit_std):>7}"
            rank = f"{_g(e.rank_mean)} +- {_g(e.rank_std)}"
            lines.append(f"{merit:<19}{rank:<14}{e.index + 1:>2} {e.name}")
        return "\n".join(lines) + "\n"

    def tsv(self) -> str:
        rows = ["index\tattribute\tmerit_mean\tmerit_std\trank_mean\trank_std"]
        for e in self.entries:
            rows.append(
                f"{e.index + 1}\t{e.name}\t{e.merit_mean:.6f}\t{e.merit_std:.6f}"
                f"\t{e.rank_mean:.6f}\t{e.rank_std:.6f}"
            )
        return "\n".join(rows) + "\n"


def _g(v: float) -> str:
    s = f"{v:.3f}".rstrip("0").rstrip(".")
    return "0" if s in ("", "-0") else s


def chi_square_merits(ds: Dataset) -> np.ndarray:
    dm = discretize_mdl(ds)
    return np.array([chi_square_merit(ds, a, dm.cuts[a]) for a in range(ds.n_attributes)])


def rank_attributes_cv(ds: Dataset, folds: int = 10, seed: int = 1) -> RankingReport:
    if folds < 2 or folds > len(ds):
        raise BadParameter(f"folds must be between 2 and {len(ds)}, got {folds}")
    parts = stratified_folds(ds.y, folds, seed, ds.n_classes)
    merits, ranks = [], []
    everything = np.arange(len(ds))
    for f, test in enumerate(parts):
        train_idx = np.setdiff1d(everything, test, assume_unique=True)
        m = chi_square_merits(ds.subset(train_idx))
        merits.append(m)
        ranks.append(_ranks(m, np.random.default_rng([seed, f])))
    merits, ranks = np.array(merits), np.array(ranks)
    entries = [
        RankEntry(
            a, ds.attribute_names[a],
            float(merits[:, a].mean()), float(merits[:, a].std()),
            float(ranks[:, a].mean()), float(ranks[:, a].std()),
        )
        for a in range(ds.n_attributes)
    ]
    entries.sort(key=lambda e: (-e.merit_mean, e.rank_mean, e.index))
    return RankingReport(entries, folds, seed)


# ---------------------------------------------------------------- CFS


def symmetric_uncertainty(a: np.ndarray, b: np.ndarray) -> float:
    """2 * I(A;B) / (H(A) + H(B)) for two discrete columns; 0 when both are constant."""
    _, ia = np.unique(a, return_inverse=True)
    _, ib = np.unique(b, return_inverse=True)
    joint = np.zeros((ia.max() + 1, ib.max() + 1))
    np.add.at(joint, (ia, ib), 1)
    ha, hb = _entropy(joint.sum(axis=1)), _entropy(joint.sum(axis=0))
    if ha + hb <= 0:
        return 0.0
    hab = _entropy(joint.ravel())
    return max(0.0, 2.0 * (ha + hb - hab) / (ha + hb))


@dataclass
class CfsEvaluator:
    """Cached symmetric-uncertainty tables for subset merit."""

    class_su: np.ndarray
    pair_su: np.ndarray

    @classmethod
    def fit(cls, ds: Dataset) -> "CfsEvaluator":
        bins = discretize_mdl(ds).bins(ds.X)
        m = ds.n_attributes
        class_su = np.array([symmetric_uncertainty(bins[:, a], ds.y) for a in range(m)])
        pair = np.eye(m)
        for i in range(m):
            for j in range(i + 1, m):
                pair[i, j] = pair[j, i] = symmetric_uncertainty(bins[:, i], bins[:, j])
        return cls(class_su, pair)

    def merit(self, subset) -> float:
        s = list(subset)
        k = len(s)
        if k == 0:
            return 0.0
        num = self.class_su[s].sum()
        inter = self.pair_su[np.ix_(s, s)].sum() - k  # 2 * sum over i<j
        den = math.sqrt(k + inter)
        return float(num / den) if den > 0 else 0.0


@dataclass
class SubsetResult:
    subset: tuple[int, ...]
    merit: float
    evaluated: int
    names: tuple[str, ...] = ()

    def format(self, stale_limit: int | None = 5) -> str:
        stale = "never" if stale_limit is None else f"after {stale_limit} node expansions"
        lines = [
            "Search Method:",
            "\tBest first.",
            "\tStart set: no attributes",
            "\tSearch direction: forward",
            f"\tStale search {stale}",
            f"\tTotal number of subsets evaluated: {self.evaluated}",
            f"\tMerit of best subset found: {self.merit:.3f}",
            "",
            "Attribute Subset Evaluator (supervised, Class (nominal)):",
            "\tCFS Subset Evaluator",
            "",
            f"Selected attributes: {','.join(str(i + 1) for i in self.subset)} : {len(self.subset)}",
        ]
        lines += [f"                    {n}" for n in self.names]
        return "\n".join(lines) + "\n"


MERIT_EPS = 1e-12


def best_first(evaluator: CfsEvaluator, m: int, stale_limit: int | None = 5) -> SubsetResult:
    """Forward best-first search from the empty set.

    Stops after ``stale_limit`` consecutive expansions that do not improve
    the best merit (None: only when every subset has been expanded).
    """
    start: tuple[int, ...] = ()
    best, best_merit = start, evaluator.merit(start)
    tick = 0
    heap = [(-best_merit, tick, start)]
    seen = {start}
    evaluated, stale = 0, 0
    while heap and (stale_limit is None or stale < stale_limit):
        _, _, node = heapq.heappop(heap)
        improved = False
        for a in range(m):
            if a in node:
                continue
            child = tuple(sorted(node + (a,)))
            if child in seen:
                continue
            seen.add(child)
            merit = evaluator.merit(child)
            evaluated += 1
            tick += 1
            heapq.heappush(heap, (-merit, tick, child))
            if merit > best_merit + MERIT_EPS:
                best, best_merit, improved = child, merit, True
        stale = 0 if improved else stale + 1
    return SubsetResult(best, best_merit, evaluated)


def cfs_best_first(ds: Dataset, stale_limit: int | None = 5) -> SubsetResult:
    res = best_first(CfsEvaluator.fit(ds), ds.n_attributes, stale_limit)
    res.names = tuple(ds.attribute_names[i] for i in res.subset)
    return res


# ---------------------------------------------------------------- wrapped classifier


@dataclass
class SelectedModel(Model):
    """Classifier trained on a CFS-selected column subset."""

    kind: ClassVar[str] = "selected"

    columns: tuple[int, ...] = ()
    inner: Model = None
    selection: SubsetResult = field(default=None, repr=False)

    @property
    def has_probabilities(self) -> bool:
        return self.inner.has_probabilities

    def predict_proba(self, X) -> np.ndarray:
        return self.inner.predict_proba(self._check(X)[:, list(self.columns)])

    def predict(self, X) -> np.ndarray:
        return self.inner.predict(self._check(X)[:, list(self.columns)])

    def report(self) -> str:
        return (
            "AttributeSelectedClassifier:\n\n"
            + self.selection.format()
            + "\nClassifier Model\n"
            + self.inner.report()
        )

    def extras(self) -> dict[str, float]:
        return self.inner.extras()


def train_attribute_selected(ds: Dataset, algo: str = "j48", seed: int = 1, stale_limit: int = 5, **params) -> SelectedModel:
    sel = cfs_best_first(ds, stale_limit)
    cols = sel.subset or tuple(range(ds.n_attributes))
    sub = ds.with_columns(ds.X[:, list(cols)], [ds.attribute_names[i] for i in cols])
    inner = train(algo, sub, seed=seed, **params)
    return SelectedModel(ds.attribute_names, ds.class_values, tuple(cols), inner, sel)
