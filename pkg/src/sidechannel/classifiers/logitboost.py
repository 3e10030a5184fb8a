"""Two-class LogitBoost (additive logistic regression) over regression stumps."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import ClassVar

import numpy as np

from ..dataset import Dataset
from .base import Model, require_binary, require_rows
from .tree import _midpoint, format_value

P_EPS = 1e-5
Z_MAX = 4.0
REL_TIE = 1e-12


@dataclass
class StumpRegressor:
    attribute: int  # -1: constant stump
    threshold: float
    left_value: float
    right_value: float

    def __call__(self, X: np.ndarray) -> np.ndarray:
        if self.attribute < 0:
            return np.full(X.shape[0], self.left_value)
        return np.where(X[:, self.attribute] <= self.threshold, self.left_value, self.right_value)

    def to_dict(self) -> dict:
        return dict(self.__dict__)


def fit_regression_stump(X: np.ndarray, z: np.ndarray, w: np.ndarray) -> StumpRegressor:
    """Weighted least-squares stump; branch values are weighted means of ``z``.

    Minimising the weighted SSE is the same as maximising
    SL^2/WL + SR^2/WR, with S the weighted sum of z and W the weight on
    each side.
    """
    W, S = float(w.sum()), float(np.dot(w, z))
    const = S / W if W > 0 else 0.0
    best = None  # (score, attribute, threshold, left, right)
    for a in range(X.shape[1]):
        order = np.argsort(X[:, a], kind="stable")
        xs = X[order, a]
        cw = np.cumsum(w[order])
        cs = np.cumsum(w[order] * z[order])
        pos = np.nonzero(xs[:-1] < xs[1:])[0]
        if pos.size == 0:
            continue
        wl, sl = cw[pos], cs[pos]
        wr, sr = W - wl, S - sl
        ok = (wl > 0) & (wr > 0)
        if not ok.any():
            continue
        score = np.full(pos.size, -np.inf)
        score[ok] = sl[ok] ** 2 / wl[ok] + sr[ok] ** 2 / wr[ok]
        top = float(score.max())
        i = int(np.nonzero(score >= top - REL_TIE * max(1.0, abs(top)))[0][0])
        if best is None or top > best[0] + REL_TIE * max(1.0, abs(best[0])):
            best = (
                top, a, _midpoint(xs[pos[i]], xs[pos[i] + 1]),
                float(sl[i] / wl[i]), float(sr[i] / wr[i]),
            )
    if best is None:
        return StumpRegressor(-1, 0.0, const, const)
    return StumpRegressor(best[1], best[2], best[3], best[4])


def probability(F: np.ndarray) -> np.ndarray:
    """P(class 1) = 1 / (1 + exp(-2F))."""
    return 0.5 * (1.0 + np.tanh(F))


def negative_log_likelihood(F: np.ndarray, y: np.ndarray) -> float:
    sign = np.where(y == 1, 1.0, -1.0)
    return float(np.logaddexp(0.0, -2.0 * sign * F).sum())


def _safe_leaf(value: float, F: np.ndarray, sign: np.ndarray, max_halvings: int = 30) -> float:
    """Halve a leaf value until adding half of it does not raise that
    branch's training NLL. The z clamp can turn the weighted mean against
    the gradient; in that case the value ends at 0."""
    if F.size == 0:
        return value
    before = np.logaddexp(0.0, -2.0 * sign * F).sum()
    # strict margin so summation order in the full NLL cannot show a rise
    target = before - 1e-9 * max(1.0, before)
    for _ in range(max_halvings):
        if np.logaddexp(0.0, -2.0 * sign * (F + 0.5 * value)).sum() <= target:
            return value
        value *= 0.5
    return 0.0


@dataclass
class LogitBoostModel(Model):
    kind: ClassVar[str] = "logitboost"

    stumps: list[StumpRegressor] = field(default_factory=list)
    nll_trace: list[float] = field(default_factory=list)  # training NLL before/after each round

    def decision(self, X) -> np.ndarray:
        X = self._check(X)
        F = np.zeros(X.shape[0])
        for s in self.stumps:
            F += 0.5 * s(X)
        return F

    def predict_proba(self, X) -> np.ndarray:
        p = probability(self.decision(X))
        return np.column_stack([1.0 - p, p])

    def predict(self, X) -> np.ndarray:
        # F == 0 is a tie and goes to class 0
        return (self.decision(X) > 0).astype(np.int64)

    def report(self) -> str:
        lines = ["LogitBoost: Base classifiers and their weights: ", ""]
        names = self.attribute_names
        for i, s in enumerate(self.stumps, start=1):
            lines.append(f"Iteration {i}")
            if s.attribute < 0:
                lines.append(f"  constant: {s.left_value:.6g}")
            else:
                t = format_value(s.threshold)
                lines.append(f"  {names[s.attribute]} <= {t} : {s.left_value:.6g}")
                lines.append(f"  {names[s.attribute]} > {t} : {s.right_value:.6g}")
            lines.append("")
        lines.append(f"Number of performed iterations: {len(self.stumps)}")
        return "\n".join(lines) + "\n"


def train_logitboost(ds: Dataset, iterations: int = 10) -> LogitBoostModel:
    require_binary(ds)
    require_rows(ds, 2)
    X, y = ds.X, ds.y
    ystar = (y == 1).astype(np.float64)
    F = np.zeros(len(ds))
    stumps, trace = [], [negative_log_likelihood(F, y)]
    for _ in range(iterations):
        p = np.clip(probability(F), P_EPS, 1 - P_EPS)
        w = p * (1 - p)
        z = np.clip((ystar - p) / w, -Z_MAX, Z_MAX)
        stump = fit_regression_stump(X, z, w)
        sign = 2.0 * ystar - 1.0
        if stump.attribute < 0:
            stump.left_value = stump.right_value = _safe_leaf(stump.left_value, F, sign)
        else:
            left = X[:, stump.attribute] <= stump.threshold
            stump.left_value = _safe_leaf(stump.left_value, F[left], sign[left])
            stump.right_value = _safe_leaf(stump.right_value, F[~left], sign[~left])
        F = F + 0.5 * stump(X)
        stumps.append(stump)
        trace.append(negative_log_likelihood(F, y))
    return LogitBoostModel(ds.attribute_names, ds.class_values, stumps, trace)
