"""Soft-margin linear SVM trained by sequential minimal optimization.

Inputs are min-max normalized inside ``train_linear_svm``; the table is
kept in the model so unseen rows get the same transform. Class index 1 is
the positive side.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import ClassVar

import numpy as np

from ..dataset import Dataset, MinMaxTable, min_max_normalize
from .base import Model, require_binary, require_rows

TAU = 1e-12


@dataclass
class LinearSVMModel(Model):
    kind: ClassVar[str] = "linear_svm"
    has_probabilities: ClassVar[bool] = False

    weights: np.ndarray = None
    bias: float = 0.0
    table: MinMaxTable = None
    alphas: np.ndarray = field(default=None, repr=False)
    c: float = 1.0
    iterations: int = 0

    def decision(self, X) -> np.ndarray:
        return self.table.apply(self._check(X)) @ self.weights + self.bias

    def predict(self, X) -> np.ndarray:
        return (self.decision(X) > 0).astype(np.int64)

    def predict_proba(self, X) -> np.ndarray:
        pred = self.predict(X)
        return np.eye(2)[pred]

    def report(self) -> str:
        lines = [
            "Kernel used:",
            "  Linear Kernel: K(x,y) = <x,y>",
            "",
            f"Classifier for classes: {', '.join(self.class_values)}",
            "",
            "BinarySMO",
            "",
            "Machine linear: showing attribute weights, not support vectors.",
            "",
        ]
        for i, (w, name) in enumerate(zip(self.weights, self.attribute_names)):
            lead = "      " if i == 0 else "+     "
            lines.append(f"{lead}{w:>8.4f} * (normalized) {name}")
        lines.append(f"+     {self.bias:>8.4f}")
        lines.append("")
        n_sv = int(np.count_nonzero(self.alphas > 0)) if self.alphas is not None else 0
        lines.append(f"Number of support vectors: {n_sv}")
        return "\n".join(lines) + "\n"


def smo_linear(X: np.ndarray, y: np.ndarray, c: float, tol: float, max_iter: int = 200_000):
    """Solve the dual with maximal-violating-pair working sets.

    ``y`` is in {-1, +1}. Returns (alpha, w, b, iterations).
    """
    n, m = X.shape
    alpha = np.zeros(n)
    w = np.zeros(m)
    grad = -np.ones(n)  # Q alpha - 1 with Q_ij = y_i y_j <x_i, x_j>
    it = 0
    while it < max_iter:
        score = -y * grad
        up = ((y > 0) & (alpha < c)) | ((y < 0) & (alpha > 0))
        low = ((y > 0) & (alpha > 0)) | ((y < 0) & (alpha < c))
        if not up.any() or not low.any():
            break
        i = int(np.flatnonzero(up)[np.argmax(score[up])])
        j = int(np.flatnonzero(low)[np.argmin(score[low])])
        gap = score[i] - score[j]
        if gap < tol:
            break
        diff = X[i] - X[j]
        eta = max(float(diff @ diff), TAU)
        t = gap / eta
        t = min(t, c - alpha[i] if y[i] > 0 else alpha[i])
        t = min(t, alpha[j] if y[j] > 0 else c - alpha[j])
        alpha[i] += y[i] * t
        alpha[j] -= y[j] * t
        w += t * diff
        grad = y * (X @ w) - 1.0
        it += 1

    score = -y * grad
    free = (alpha > 0) & (alpha < c)
    if free.any():
        b = float(score[free].mean())
    else:
        up = ((y > 0) & (alpha < c)) | ((y < 0) & (alpha > 0))
        low = ((y > 0) & (alpha > 0)) | ((y < 0) & (alpha < c))
        hi = score[up].max() if up.any() else 0.0
        lo = score[low].min() if low.any() else 0.0
        b = float((hi + lo) / 2)
    return alpha, w, b, it


def train_linear_svm(ds: Dataset, c: float = 1.0, tolerance: float = 1e-3) -> LinearSVMModel:
    require_binary(ds)
    require_rows(ds, 2)
    norm, table = min_max_normalize(ds)
    y = np.where(ds.y == 1, 1.0, -1.0)
    alpha, w, b, it = smo_linear(norm.X, y, c, tolerance)
    return LinearSVMModel(ds.attribute_names, ds.class_values, w, b, table, alpha, c, it)


def kkt_violation(model: LinearSVMModel, ds: Dataset) -> float:
    """Largest KKT violation of the trained dual on its training data."""
    Xn = model.table.apply(ds.X)
    y = np.where(ds.y == 1, 1.0, -1.0)
    margin = y * (Xn @ model.weights + model.bias)
    a, c = model.alphas, model.c
    worst = 0.0
    at_zero = a <= 0
    at_c = a >= c
    free = ~at_zero & ~at_c
    if at_zero.any():
        worst = max(worst, float(np.max(1 - margin[at_zero], initial=0.0)))
    if at_c.any():
        worst = max(worst, float(np.max(margin[at_c] - 1, initial=0.0)))
    if free.any():
        worst = max(worst, float(np.max(np.abs(margin[free] - 1))))
    return worst
