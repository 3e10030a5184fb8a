from __future__ import annotations

from dataclasses import dataclass
from typing import ClassVar

import numpy as np

from ..dataset import Dataset
from ..errors import EmptyDataset, NotBinary, ShapeError


@dataclass
class Model:
    """Common surface of every trained classifier.

    Subclasses implement ``predict_proba`` (rows sum to 1) and ``report``;
    ``predict`` is the argmax with ties going to the lowest class index.
    """

    kind: ClassVar[str] = ""
    has_probabilities: ClassVar[bool] = True

    attribute_names: tuple[str, ...]
    class_values: tuple[str, ...]

    @property
    def n_classes(self) -> int:
        return len(self.class_values)

    def _check(self, X) -> np.ndarray:
        X = np.asarray(X, dtype=np.float64)
        if X.ndim == 1:
            X = X[None, :]
        if X.ndim != 2 or X.shape[1] != len(self.attribute_names):
            raise ShapeError(
                f"expected {len(self.attribute_names)} attribute values, got shape {X.shape}"
            )
        return X

    def predict_proba(self, X) -> np.ndarray:
        raise NotImplementedError

    def predict(self, X) -> np.ndarray:
        return np.argmax(self.predict_proba(X), axis=1)

    def report(self) -> str:
        raise NotImplementedError

    def extras(self) -> dict[str, float]:
        """Model-specific numbers carried into evaluation reports."""
        return {}


def require_rows(ds: Dataset, minimum: int = 1) -> None:
    if len(ds) < minimum:
        raise EmptyDataset(f"need at least {minimum} instance(s), dataset has {len(ds)}")


def require_binary(ds: Dataset) -> None:
    if ds.n_classes != 2:
        raise NotBinary(f"binary class required, got {ds.n_classes} class values")


def majority_index(counts) -> int:
    return int(np.argmax(counts))


@dataclass
class MajorityModel(Model):
    kind: ClassVar[str] = "majority"

    distribution: np.ndarray = None  # class priors from training

    @property
    def label(self) -> int:
        return majority_index(self.distribution)

    def predict_proba(self, X) -> np.ndarray:
        X = self._check(X)
        return np.tile(self.distribution, (X.shape[0], 1))

    def predict(self, X) -> np.ndarray:
        X = self._check(X)
        return np.full(X.shape[0], self.label, dtype=np.int64)

    def report(self) -> str:
        return f"ZeroR predicts class value: {self.class_values[self.label]}\n"


def train_majority(ds: Dataset) -> MajorityModel:
    require_rows(ds)
    counts = ds.class_counts().astype(np.float64)
    return MajorityModel(ds.attribute_names, ds.class_values, counts / counts.sum())
