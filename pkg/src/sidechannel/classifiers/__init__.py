"""Classifiers, a name registry for them, and canonical model serialization."""

from __future__ import annotations

import json

import numpy as np

from ..dataset import MinMaxTable
from ..errors import BadParameter, ParseError, ShapeError
from .base import MajorityModel, Model, train_majority
from .forest import ForestModel, default_k, train_random_forest
from .logitboost import LogitBoostModel, StumpRegressor, train_logitboost
from .svm import LinearSVMModel, kkt_violation, train_linear_svm
from .tree import Node, StumpModel, TreeModel, train_c45, train_stump, train_unpruned_tree

ALGORITHMS = ("majority", "stump", "j48", "logitboost", "forest", "svm")

MODEL_FORMAT = "sidechannel-model"
MODEL_VERSION = 1


def train(algo: str, ds, seed: int = 1, **params) -> Model:
    """Train by CLI name. ``seed`` only matters for the forest."""
    if algo == "majority":
        return train_majority(ds)
    if algo == "stump":
        return train_stump(ds)
    if algo == "j48":
        return train_c45(ds, **params)
    if algo == "logitboost":
        return train_logitboost(ds, **params)
    if algo == "forest":
        return train_random_forest(ds, seed=seed, **params)
    if algo == "svm":
        return train_linear_svm(ds, **params)
    raise BadParameter(f"unknown algorithm {algo!r}; choose from {', '.join(ALGORITHMS)}")


def predict(model: Model, values) -> int:
    values = np.asarray(values, dtype=np.float64)
    if values.ndim != 1 or values.size != len(model.attribute_names):
        raise ShapeError(f"expected {len(model.attribute_names)} values, got {values.size}")
    return int(model.predict(values[None, :])[0])


def model_report(model: Model) -> str:
    return model.report()


# ---------------------------------------------------------------- serialization


def _floats(a) -> list[float]:
    return [float(v) for v in np.asarray(a).ravel()]


def model_to_dict(model: Model) -> dict:
    d = {
        "format": MODEL_FORMAT,
        "version": MODEL_VERSION,
        "kind": model.kind,
        "attributes": list(model.attribute_names),
        "classes": list(model.class_values),
    }
    if isinstance(model, MajorityModel):
        d["distribution"] = _floats(model.distribution)
    elif isinstance(model, TreeModel):
        d["root"] = model.root.to_dict()
    elif isinstance(model, LogitBoostModel):
        d["stumps"] = [s.to_dict() for s in model.stumps]
    elif isinstance(model, ForestModel):
        d.update(
            k_features=model.k_features,
            oob_error=None if np.isnan(model.oob_error) else model.oob_error,
            trees=[t.to_dict() for t in model.trees],
        )
    elif isinstance(model, LinearSVMModel):
        d.update(
            weights=_floats(model.weights),
            bias=model.bias,
            c=model.c,
            lows=_floats(model.table.lows),
            highs=_floats(model.table.highs),
            alphas=_floats(model.alphas),
        )
    return d


def model_from_dict(d: dict) -> Model:
    if d.get("format") != MODEL_FORMAT or d.get("version") != MODEL_VERSION:
        raise ParseError("not a version-1 sidechannel model")
    names, classes = tuple(d["attributes"]), tuple(d["classes"])
    kind = d["kind"]
    if kind == "majority":
        return MajorityModel(names, classes, np.array(d["distribution"]))
    if kind == "stump":
        return StumpModel(names, classes, Node.from_dict(d["root"]))
    if kind == "tree":
        return TreeModel(names, classes, Node.from_dict(d["root"]))
    if kind == "logitboost":
        return LogitBoostModel(names, classes, [StumpRegressor(**s) for s in d["stumps"]])
    if kind == "forest":
        oob = d["oob_error"]
        return ForestModel(
            names, classes, [Node.from_dict(t) for t in d["trees"]],
            d["k_features"], float("nan") if oob is None else oob,
        )
    if kind == "linear_svm":
        table = MinMaxTable(np.array(d["lows"]), np.array(d["highs"]))
        return LinearSVMModel(
            names, classes, np.array(d["weights"]), d["bias"], table,
            np.array(d["alphas"]), d["c"],
        )
    raise ParseError(f"unknown model kind {kind!r}")


def dumps_model(model: Model) -> str:
    return json.dumps(model_to_dict(model), sort_keys=True, indent=1) + "\n"


def loads_model(text: str) -> Model:
    try:
        return model_from_dict(json.loads(text))
    except (json.JSONDecodeError, KeyError, TypeError) as exc:
        raise ParseError(f"bad model text: {exc}") from None


__all__ = [
    "ALGORITHMS", "Model", "MajorityModel", "StumpModel", "TreeModel", "LogitBoostModel",
    "ForestModel", "LinearSVMModel", "Node", "StumpRegressor", "default_k", "dumps_model",
    "kkt_violation", "loads_model", "model_report", "predict", "train", "train_c45",
    "train_linear_svm", "train_logitboost", "train_majority", "train_random_forest",
    "train_stump", "train_unpruned_tree",
]
