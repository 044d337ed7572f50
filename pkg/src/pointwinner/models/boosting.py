"""AdaBoost over shallow entropy trees, and second-order gradient boosting."""
from __future__ import annotations

import numpy as np

from .linear import sigmoid
from . import _kernels as _k
from .tree import Criterion, SplitData, Tree, fit_tree, grow

EPS_FLOOR = 1e-10


class AdaBoostModel:
    """Discrete AdaBoost; probability = sigmoid(2 * sum of alpha_t * h_t(x))."""

    family = "adaboost"

    def __init__(self, learners, alphas, errors, params, n_features):
        self.learners = learners
        self.alphas = alphas
        self.errors = errors
        self.params = params
        self.n_features = n_features

    def stage_predictions(self, X):
        return [np.where(t.predict_value(X) >= 0.5, 1.0, -1.0) for t in self.learners]

    def decision_function(self, X):
        score = np.zeros(len(X))
        for a, h in zip(self.alphas, self.stage_predictions(X)):
            score += a * h
        return score

    def predict_proba(self, X):
        return sigmoid(2.0 * self.decision_function(X))

    def state(self):
        return {"alphas": [float(a) for a in self.alphas], "errors": [float(e) for e in self.errors],
                "learners": [t.to_dict() for t in self.learners]}

    @classmethod
    def from_state(cls, state, params, n_features):
        return cls([Tree.from_dict(t) for t in state["learners"]], list(state["alphas"]),
                   list(state["errors"]), params, n_features)


def fit_adaboost(X, y, rounds=50, weak_depth=1):
    """Fit discrete AdaBoost with depth-limited entropy trees as weak learners.

    Stops early when a learner's weighted error reaches 0.5 (it is discarded)
    or 0 (it is kept, with its error floored at 1e-10 for a finite weight).
    """
    X = np.asarray(X, dtype=float)
    y = np.asarray(y, dtype=float)
    s = 2.0 * y - 1.0
    n = len(y)
    w = np.full(n, 1.0 / n)
    data = SplitData(X)
    learners, alphas, errors = [], [], []
    for _ in range(rounds):
        tree = fit_tree(X, y, w, max_depth=weak_depth, data=data)
        h = np.where(tree.predict_value(X) >= 0.5, 1.0, -1.0)
        eps = float(w[h != s].sum() / w.sum())
        if eps >= 0.5:
            break
        alpha = 0.5 * np.log((1 - max(eps, EPS_FLOOR)) / max(eps, EPS_FLOOR))
        learners.append(tree)
        alphas.append(float(alpha))
        errors.append(eps)
        if eps == 0.0:
            break
        w = w * np.exp(-alpha * s * h)
        w /= w.sum()
    params = {"rounds": rounds, "weak_depth": weak_depth}
    return AdaBoostModel(learners, alphas, errors, params, X.shape[1])


class GBTModel:
    """Sum-of-trees logistic model: p = sigmoid(base_score + eta * sum of leaf weights)."""

    family = "gbt"

    def __init__(self, trees, base_score, params, n_features, gains=None):
        self.trees = trees
        self.base_score = base_score
        self.params = params
        self.n_features = n_features
        self.gains = np.zeros(n_features) if gains is None else np.asarray(gains, dtype=float)

    @property
    def eta(self):
        return self.params["eta"]

    def margin(self, X, n_trees=None):
        out = np.full(len(X), self.base_score)
        for t in self.trees[:n_trees]:
            out += self.eta * t.predict_value(X)
        return out

    def predict_proba(self, X, n_trees=None):
        return sigmoid(self.margin(X, n_trees))

    def state(self):
        return {"base_score": float(self.base_score), "gains": [float(g) for g in self.gains],
                "trees": [t.to_dict() for t in self.trees]}

    @classmethod
    def from_state(cls, state, params, n_features):
        return cls([Tree.from_dict(t) for t in state["trees"]], state["base_score"], params,
                   n_features, state["gains"])


def newton_gain(lam, gamma):
    """0.5 * (GL^2/(HL+lam) + GR^2/(HR+lam) - G^2/(H+lam)) - gamma."""
    return Criterion(_k.NEWTON, lam, gamma)


def fit_gbt(X, y, rounds=100, eta=0.3, lam=1.0, gamma=0.0, max_depth=6, scale_pos_weight=1.0,
            min_child_weight=1.0, subsample=1.0, colsample=1.0, seed=0):
    """Gradient-boosted trees on logistic loss with exact greedy split finding.

    Each round takes g = p - y and h = p(1 - p), both multiplied by
    ``scale_pos_weight`` on label-1 rows, and grows a tree maximizing the
    regularized Newton gain; leaves hold -G / (H + lam). The starting margin
    is logit(mean(y)). Split gains are summed per feature for importance.
    """
    X = np.asarray(X, dtype=float)
    y = np.asarray(y, dtype=float)
    n, d = X.shape
    rng = np.random.default_rng(seed)
    mean = float(np.clip(y.mean(), 1e-12, 1 - 1e-12))
    base = float(np.log(mean / (1 - mean)))
    scale = np.where(y == 1, scale_pos_weight, 1.0)
    data = SplitData(X)
    all_rows = np.arange(n)
    criterion = newton_gain(lam, gamma)
    margin = np.full(n, base)
    gains = np.zeros(d)
    trees = []
    for _ in range(rounds):
        p = sigmoid(margin)
        g = (p - y) * scale
        h = p * (1 - p) * scale
        rows = all_rows
        if subsample < 1.0:
            keep = rng.random(n) < subsample
            rows = all_rows[keep] if keep.sum() >= 2 else all_rows
        cols = None
        if colsample < 1.0:
            k = max(1, int(round(colsample * d)))
            cols = np.sort(rng.choice(d, size=k, replace=False))
        tree = grow(data, rows, g, h, criterion, max_depth, min_child=min_child_weight, pool=cols)
        internal = tree.feature >= 0
        np.add.at(gains, tree.feature[internal], tree.gain[internal])
        trees.append(tree)
        margin += eta * tree.predict_value(X)
    params = {"rounds": rounds, "eta": eta, "lam": lam, "gamma": gamma, "max_depth": max_depth,
              "scale_pos_weight": scale_pos_weight, "min_child_weight": min_child_weight,
              "subsample": subsample, "colsample": colsample, "seed": seed}
    return GBTModel(trees, base, params, d, gains)


class NoSplits(ValueError):
    pass


def importance_gain(model, feature_names=None):
    """Share of total split gain per feature (features with zero gain omitted)."""
    total = float(model.gains.sum())
    if total <= 0:
        raise NoSplits("model has no splits")
    names = feature_names or [f"f{i}" for i in range(model.n_features)]
    return {names[i]: float(g / total) for i, g in enumerate(model.gains) if g > 0}
