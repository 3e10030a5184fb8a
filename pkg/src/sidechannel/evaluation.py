"""Stratified cross-validation, the summary metric block, and learning curves."""

from __future__ import annotations

import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .classifiers import Model, train
from .dataset import Dataset
from .errors import BadParameter, EmptyDataset
from .sampling import stratified_folds, stratified_sample


@dataclass(frozen=True)
class TrainerSpec:
    """Algorithm name, its hyperparameters, and optional CFS pre-selection."""

    algo: str
    params: dict = field(default_factory=dict)
    select: str | None = None  # "cfs" wraps the classifier in attribute selection

    def fit(self, ds: Dataset, seed: int = 1) -> Model:
        if self.select == "cfs":
            from .attrsel import train_attribute_selected

            return train_attribute_selected(ds, self.algo, seed=seed, **self.params)
        if self.select is not None:
            raise BadParameter(f"unknown selection {self.select!r}")
        return train(self.algo, ds, seed=seed, **self.params)

    def describe(self) -> str:
        opts = " ".join(f"{k}={v}" for k, v in sorted(self.params.items()))
        name = f"{self.algo}+cfs" if self.select else self.algo
        return f"{name} {opts}".strip()


def _workers() -> int:
    return max(1, int(os.environ.get("SIDECHANNEL_THREADS", "1")))


@dataclass
class EvalReport:
    class_values: tuple[str, ...]
    confusion: np.ndarray  # rows actual, columns predicted
    kappa: float
    mae: float
    rmse: float
    rae: float  # percent
    rrse: float  # percent
    kappa_undefined: bool = False
    extras: dict = field(default_factory=dict)

    @property
    def total(self) -> int:
        return int(self.confusion.sum())

    @property
    def correct(self) -> int:
        return int(np.trace(self.confusion))

    @property
    def incorrect(self) -> int:
        return self.total - self.correct

    @property
    def accuracy(self) -> float:
        return 100.0 * self.correct / self.total if self.total else 0.0

    def format(self) -> str:
        t = self.total
        lines = [
            "=== Stratified cross-validation ===",
            "=== Summary ===",
            "",
            f"Correctly Classified Instances   {self.correct:>10}   {self.accuracy:>12.4f} %",
            f"Incorrectly Classified Instances {self.incorrect:>10}   {100 - self.accuracy if t else 0:>12.4f} %",
            f"Kappa statistic                  {self.kappa:>10.4f}",
            f"Mean absolute error              {self.mae:>10.4f}",
            f"Root mean squared error          {self.rmse:>10.4f}",
            f"Relative absolute error          {self.rae:>10.4f} %",
            f"Root relative squared error      {self.rrse:>10.4f} %",
            f"Total Number of Instances        {t:>10}",
        ]
        if self.kappa_undefined:
            lines.append("(kappa undefined for a single observed class; reported as 0)")
        for key in sorted(self.extras):
            lines.append(f"{key:<33}{_num(self.extras[key]):>10}")
        lines += ["", "=== Confusion Matrix ===", ""]
        letters = [_letter(i) for i in range(len(self.class_values))]
        w = max(5, len(str(int(self.confusion.max(initial=0)))) + 1)
        lines.append("".join(f"{l:>{w}}" for l in letters) + "   <-- classified as")
        for i, row in enumerate(self.confusion):
            cells = "".join(f"{int(v):>{w}}" for v in row)
            lines.append(f"{cells} | {letters[i]:>4} = {self.class_values[i]}")
        return "\n".join(lines) + "\n"

    def tsv_row(self) -> str:
        return "\t".join(
            [
                str(self.correct), str(self.incorrect), f"{self.accuracy:.4f}",
                f"{self.kappa:.4f}", f"{self.mae:.4f}", f"{self.rmse:.4f}",
                f"{self.rae:.4f}", f"{self.rrse:.4f}", str(self.total),
            ]
        )

    TSV_HEADER = "correct\tincorrect\taccuracy\tkappa\tmae\trmse\trae\trrse\ttotal"


def _num(v) -> str:
    v = float(v)
    return str(int(v)) if v.is_integer() else f"{v:.4f}"


def _letter(i: int) -> str:
    s = ""
    i += 1
    while i:
        i, r = divmod(i - 1, 26)
        s = chr(ord("a") + r) + s
    return s


def kappa_from_confusion(cm: np.ndarray) -> tuple[float, bool]:
    """Cohen's kappa; (0, True) when chance agreement is already 1."""
    cm = np.asarray(cm, dtype=np.float64)
    n = cm.sum()
    po = np.trace(cm) / n
    pe = float((cm.sum(axis=0) * cm.sum(axis=1)).sum() / (n * n))
    if pe >= 1.0:
        return 0.0, True
    return (po - pe) / (1 - pe), False


def summarize(y_true, y_pred, proba, priors, class_values, extras=None) -> EvalReport:
    """Build the metric block from pooled predictions.

    ``proba`` and ``priors`` are (n, K): the model's class probabilities and
    the prior-probability baseline for each prediction.
    """
    y_true = np.asarray(y_true)
    K = len(class_values)
    n = y_true.size
    if n == 0:
        raise EmptyDataset("nothing to evaluate")
    cm = np.zeros((K, K), dtype=np.int64)
    np.add.at(cm, (y_true, np.asarray(y_pred)), 1)
    kappa, undefined = kappa_from_confusion(cm)
    truth = np.eye(K)[y_true]
    err = np.abs(proba - truth)
    base = np.abs(priors - truth)
    mae = err.sum() / (n * K)
    rmse = np.sqrt((err**2).sum() / (n * K))
    b_abs, b_sq = base.sum(), (base**2).sum()
    rae = 100.0 * err.sum() / b_abs if b_abs > 0 else float("nan")
    rrse = 100.0 * np.sqrt((err**2).sum() / b_sq) if b_sq > 0 else float("nan")
    return EvalReport(
        tuple(class_values), cm, float(kappa), float(mae), float(rmse),
        float(rae), float(rrse), undefined, dict(extras or {}),
    )


def _model_proba(model: Model, X: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    pred = model.predict(X)
    if model.has_probabilities:
        return pred, model.predict_proba(X)
    return pred, np.eye(model.n_classes)[pred]


def cross_validate(spec: TrainerSpec, ds: Dataset, k: int = 10, seed: int = 1, full_model: bool = True) -> EvalReport:
    """Pooled stratified k-fold evaluation.

    With ``full_model`` a model trained on all of ``ds`` supplies the
    extras (tree size, out-of-bag error) for the report.
    """
    if len(ds) == 0:
        raise EmptyDataset("cannot cross-validate an empty dataset")
    folds = stratified_folds(ds.y, k, seed, ds.n_classes)
    everything = np.arange(len(ds))

    def run(test):
        train_idx = np.setdiff1d(everything, test, assume_unique=True)
        tr = ds.subset(train_idx)
        model = spec.fit(tr, seed)
        pred, proba = _model_proba(model, ds.X[test])
        counts = tr.class_counts().astype(np.float64)
        return test, pred, proba, counts / counts.sum()

    workers = _workers()
    if workers > 1:
        with ThreadPoolExecutor(workers) as pool:
            parts = list(pool.map(run, folds))
    else:
        parts = [run(f) for f in folds]

    n, K = len(ds), ds.n_classes
    pred = np.empty(n, dtype=np.int64)
    proba = np.empty((n, K))
    priors = np.empty((n, K))
    for test, p, pr, prior in parts:
        pred[test] = p
        proba[test] = pr
        priors[test] = prior

    extras = spec.fit(ds, seed).extras() if full_model else {}
    return summarize(ds.y, pred, proba, priors, ds.class_values, extras)


@dataclass
class LearningPoint:
    size: int
    nodes: int | None
    accuracy: float


def learning_curve(spec: TrainerSpec, ds: Dataset, sizes, k: int = 10, seed: int = 1) -> list[LearningPoint]:
    sizes = [int(s) for s in sizes]
    if sizes != sorted(sizes):
        raise BadParameter("sizes must be ascending")
    out = []
    for s in sizes:
        if s > len(ds):
            raise BadParameter(f"size {s} exceeds the {len(ds)} available instances")
        sample = ds.subset(stratified_sample(ds.y, s, seed, ds.n_classes))
        rep = cross_validate(spec, sample, k, seed)
        nodes = rep.extras.get("nodes")
        out.append(LearningPoint(s, None if nodes is None else int(nodes), rep.accuracy))
    return out


def format_learning_curve(points: list[LearningPoint]) -> str:
    lines = ["Images\tNodes\tAccuracy"]
    for p in points:
        nodes = "-" if p.nodes is None else str(p.nodes)
        lines.append(f"{p.size}\t{nodes}\t{p.accuracy:.1f} %")
    return "\n".join(lines) + "\n"
