"""The five classifier families, a uniform fit entry point, and model files."""
from __future__ import annotations

import json
from pathlib import Path

import numpy as np

from .boosting import AdaBoostModel, GBTModel, NoSplits, fit_adaboost, fit_gbt, importance_gain
from .linear import (BaselineModel, DivergenceDetected, EmptyInput, LinearModel, fit_logistic,
                     fit_prior_baseline, logistic_grad, logistic_loss, sigmoid)
from .tree import ForestModel, Tree, entropy, fit_forest, fit_tree

__all__ = [
    "AdaBoostModel", "BaselineModel", "DivergenceDetected", "EmptyInput", "ForestModel",
    "GBTModel", "LinearModel", "NoSplits", "SchemaMismatch", "Tree", "DEFAULTS", "FAMILIES",
    "entropy", "fit", "fit_adaboost", "fit_forest", "fit_gbt", "fit_logistic",
    "fit_prior_baseline", "fit_tree", "importance_gain", "load_model", "logistic_grad",
    "logistic_loss", "predict_proba", "save_model", "sigmoid",
]

MODEL_FORMAT = "pointwinner-model"
MODEL_VERSION = 1

FAMILIES = ("baseline", "logistic", "forest", "adaboost", "gbt")

# "standard parameters" used when nothing is tuned
DEFAULTS = {
    "baseline": {},
    "logistic": {"alpha": 0.01, "epochs": 50, "seed": 0},
    "forest": {"n_trees": 100, "m_try": None, "max_depth": None, "min_leaf": 1, "seed": 0},
    "adaboost": {"rounds": 50, "weak_depth": 1},
    "gbt": {"rounds": 100, "eta": 0.3, "lam": 1.0, "gamma": 0.0, "max_depth": 6,
            "scale_pos_weight": 1.0, "min_child_weight": 1.0, "subsample": 1.0,
            "colsample": 1.0, "seed": 0},
}

# declared ranges: (low, high) for numbers, tuple of choices otherwise
RANGES = {
    "logistic": {"alpha": (1e-5, 1.0), "epochs": (1, 1000), "seed": (0, 2**31)},
    "forest": {"n_trees": (1, 2000), "m_try": (1, 10_000), "max_depth": (1, 200),
               "min_leaf": (1, 10_000), "seed": (0, 2**31)},
    "adaboost": {"rounds": (1, 2000), "weak_depth": (1, 10)},
    "gbt": {"rounds": (0, 5000), "eta": (1e-4, 1.0), "lam": (0.0, 1e4), "gamma": (0.0, 1e4),
            "max_depth": (1, 20), "scale_pos_weight": (0.01, 100.0),
            "min_child_weight": (0.0, 1e4), "subsample": (0.05, 1.0), "colsample": (0.05, 1.0),
            "seed": (0, 2**31)},
}

_CLASSES = {"baseline": BaselineModel, "logistic": LinearModel, "forest": ForestModel,
            "adaboost": AdaBoostModel, "gbt": GBTModel}


class SchemaMismatch(ValueError):
    pass


def resolve_params(family, params=None):
    """Defaults overlaid with ``params``; unknown names and out-of-range values raise."""
    if family not in DEFAULTS:
        raise ValueError(f"unknown model family {family!r}")
    merged = dict(DEFAULTS[family])
    for key, value in (params or {}).items():
        if key not in merged:
            raise ValueError(f"{family} has no hyperparameter {key!r}")
        lo_hi = RANGES[family].get(key)
        if value is not None and lo_hi is not None and not lo_hi[0] <= value <= lo_hi[1]:
            raise ValueError(f"{family}.{key}={value} outside [{lo_hi[0]}, {lo_hi[1]}]")
        merged[key] = value
    return merged


def fit(family, X, y, params=None):
    """Fit one family with defaults overlaid by ``params``."""
    p = resolve_params(family, params)
    if family == "baseline":
        return fit_prior_baseline(y, n_features=np.asarray(X).shape[1])
    if family == "logistic":
        return fit_logistic(X, y, **p)
    if family == "forest":
        return fit_forest(X, y, **p)
    if family == "adaboost":
        return fit_adaboost(X, y, **p)
    return fit_gbt(X, y, **p)


def predict_proba(model, X, schema_fingerprint=None):
    """Probability that the server wins, for each row of ``X``."""
    X = np.asarray(X, dtype=float)
    n_features = getattr(model, "n_features", None)
    if X.ndim != 2 or (n_features is not None and X.shape[1] != n_features):
        raise SchemaMismatch(f"model expects {n_features} features, got shape {X.shape}")
    expected = getattr(model, "schema_fingerprint", None)
    if schema_fingerprint is not None and expected is not None and schema_fingerprint != expected:
        raise SchemaMismatch(f"schema {schema_fingerprint} does not match model schema {expected}")
    if not np.isfinite(X).all():
        raise ValueError("non-finite feature values")
    return np.clip(model.predict_proba(X), 0.0, 1.0)


def predict(model, X, threshold=0.5):
    return (predict_proba(model, X) >= threshold).astype(int)


def model_to_dict(model, meta=None):
    return {
        "format": MODEL_FORMAT,
        "version": MODEL_VERSION,
        "family": model.family,
        "params": model.params,
        "n_features": model.n_features,
        "schema_fingerprint": getattr(model, "schema_fingerprint", None),
        "meta": meta if meta is not None else getattr(model, "meta", {}),
        "state": model.state(),
    }


def model_from_dict(d):
    if d.get("format") != MODEL_FORMAT or d.get("version") != MODEL_VERSION:
        raise ValueError("not a pointwinner model file")
    model = _CLASSES[d["family"]].from_state(d["state"], d["params"], d["n_features"])
    model.schema_fingerprint = d.get("schema_fingerprint")
    model.meta = d.get("meta", {})
    return model


def save_model(model, path, meta=None):
    Path(path).write_text(json.dumps(model_to_dict(model, meta), indent=1, sort_keys=True) + "\n")


def load_model(path):
    return model_from_dict(json.loads(Path(path).read_text()))
