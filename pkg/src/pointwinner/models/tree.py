"""Greedy binary trees, the random forest built from them, and the split search
shared with the boosted trees in :mod:`pointwinner.models.boosting`.

Split search is exact: every boundary between consecutive distinct values
in a node is a candidate, its threshold is the midpoint of the two values,
and ``x <= threshold`` goes left. Near-equal gains (within ``GAIN_TIE``) resolve to the lower feature
index, then the lower threshold.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import _kernels as _k
from .linear import EmptyInput

GAIN_TIE = _k.GAIN_TIE
MIN_GAIN = 1e-12


def entropy(labels, weights=None):
    """Binary entropy in bits of a label vector, optionally weighted."""
    y = np.asarray(labels, dtype=float)
    if y.size == 0:
        raise EmptyInput("entropy of an empty label set")
    w = np.ones_like(y) if weights is None else np.asarray(weights, dtype=float)
    p = float(np.dot(w, y) / w.sum())
    return float(_h(np.array(p)))


def _h(p):
    p = np.clip(p, 0.0, 1.0)
    with np.errstate(divide="ignore", invalid="ignore"):
        out = -(p * np.log2(p) + (1 - p) * np.log2(1 - p))
    return np.nan_to_num(out, nan=0.0)


@dataclass(frozen=True)
class Criterion:
    """Split criterion handed to the compiled search: information gain or Newton gain."""

    kind: int
    lam: float = 0.0
    gamma: float = 0.0


# information gain with a = sample weight, b = weight of label 1
entropy_gain = Criterion(_k.ENTROPY)


@dataclass
class Tree:
    """Flat preorder node arrays; ``feature == -1`` marks a leaf."""

    feature: np.ndarray
    threshold: np.ndarray
    left: np.ndarray
    right: np.ndarray
    value: np.ndarray
    gain: np.ndarray
    n_node: np.ndarray

    @property
    def n_leaves(self):
        return int((self.feature < 0).sum())

    @property
    def depth(self):
        depth = np.zeros(len(self.feature), dtype=int)
        for i in range(len(self.feature)):
            if self.feature[i] >= 0:
                depth[self.left[i]] = depth[self.right[i]] = depth[i] + 1
        return int(depth.max())

    def apply(self, X):
        """Leaf index reached by each row."""
        X = np.asarray(X, dtype=float)
        node = np.zeros(len(X), dtype=np.int64)
        active = np.flatnonzero(self.feature[node] >= 0)
        while active.size:
            nd = node[active]
            go_left = X[active, self.feature[nd]] <= self.threshold[nd]
            node[active] = np.where(go_left, self.left[nd], self.right[nd])
            active = active[self.feature[node[active]] >= 0]
        return node

    def predict_value(self, X):
        return self.value[self.apply(X)]

    def to_dict(self):
        return {
            "feature": self.feature.tolist(),
            "threshold": [float(t) for t in self.threshold],
            "left": self.left.tolist(),
            "right": self.right.tolist(),
            "value": [float(v) for v in self.value],
            "gain": [float(g) for g in self.gain],
            "n_node": self.n_node.tolist(),
        }

    @classmethod
    def from_dict(cls, d):
        return cls(
            np.array(d["feature"], dtype=np.int64), np.array(d["threshold"], dtype=float),
            np.array(d["left"], dtype=np.int64), np.array(d["right"], dtype=np.int64),
            np.array(d["value"], dtype=float), np.array(d["gain"], dtype=float),
            np.array(d["n_node"], dtype=np.int64),
        )


class SplitData:
    """Per-feature unique values and bin codes of a design matrix, computed once per fit."""

    def __init__(self, X):
        self.X = np.ascontiguousarray(X, dtype=float)
        n, d = self.X.shape
        self.values = []
        # feature-major so the per-feature scans in the kernels read contiguous memory
        self.codes = np.empty((d, n), dtype=np.int64)
        for f in range(d):
            uniq, inv = np.unique(self.X[:, f], return_inverse=True)
            self.values.append(uniq)
            self.codes[f] = inv
        self.n_bins = np.array([len(v) for v in self.values], dtype=np.int64)
        self.all_values = np.concatenate(self.values) if d else np.zeros(0)
        self.bin_offsets = np.concatenate(([0], np.cumsum(self.n_bins)[:-1])).astype(np.int64)

    @property
    def n_features(self):
        return self.X.shape[1]


_PATHS = {"auto": 0, "hist": 1, "sort": 2}


def best_split(data, rows, features, a, b, criterion, min_leaf=1, min_child=-np.inf, path="auto"):
    """Best (gain, feature, threshold) for the node holding ``rows``, or ``None``.

    ``a`` and ``b`` are additive per-row statistics for ``criterion``;
    ``min_child`` is the least ``b`` total allowed in each child (Newton only).
    Candidates come from a bin histogram or a local sort of the node; both
    enumerate the same splits and ``path`` can force either.
    """
    found, gain, f, thr = _k.node_split(
        data.codes, data.all_values, data.bin_offsets, data.n_bins, np.asarray(rows, dtype=np.int64),
        np.asarray(features, dtype=np.int64), np.asarray(a, dtype=float), np.asarray(b, dtype=float),
        criterion.kind, float(criterion.lam), float(criterion.gamma), int(min_leaf), float(min_child),
        _PATHS[path])
    return (float(gain), int(f), float(thr)) if found else None


def grow(data, rows, a, b, criterion, max_depth=None, min_leaf=1, min_gain=MIN_GAIN,
         min_child=-np.inf, pool=None, k_pick=None, seed=0):
    """Grow a tree depth-first over ``rows`` of ``data``; nodes are numbered in preorder.

    Each node searches ``pool`` (default: every feature), or a fresh random
    ``k_pick``-subset of it drawn from a stream seeded by ``seed``.
    """
    pool = np.arange(data.n_features) if pool is None else np.asarray(pool, dtype=np.int64)
    k = len(pool) if k_pick is None else min(int(k_pick), len(pool))
    arrays = _k.grow_tree(
        data.X, data.codes, data.all_values, data.bin_offsets, data.n_bins,
        np.asarray(rows, dtype=np.int64), np.asarray(a, dtype=float), np.asarray(b, dtype=float),
        criterion.kind, float(criterion.lam), float(criterion.gamma),
        -1 if max_depth is None else int(max_depth), int(min_leaf), float(min_child), float(min_gain),
        pool, k, int(seed))
    return Tree(*(np.array(v) for v in arrays))


def fit_tree(X, y, weights=None, max_depth=None, min_leaf=1, feature_subset=None, seed=0,
             data=None):
    """Weighted entropy tree; leaf value = weighted share of label 1.

    ``feature_subset`` draws that many candidate features at every node.
    """
    data = data if data is not None else SplitData(X)
    y = np.asarray(y, dtype=float)
    w = np.ones(len(y)) if weights is None else np.asarray(weights, dtype=float)
    if (w < 0).any() or w.sum() <= 0:
        raise ValueError("weights must be non-negative with a positive sum")
    k = None if feature_subset is None else max(1, int(feature_subset))
    return grow(data, np.arange(len(y)), w, w * y, entropy_gain, max_depth, min_leaf, k_pick=k,
                seed=seed)


class ForestModel:
    family = "forest"

    def __init__(self, trees, seeds, params, n_features):
        self.trees = trees
        self.seeds = seeds
        self.params = params
        self.n_features = n_features

    def predict_proba(self, X):
        votes = np.zeros(len(X))
        for t in self.trees:
            votes += t.predict_value(X) >= 0.5
        return votes / len(self.trees)

    def state(self):
        return {"seeds": [int(s) for s in self.seeds], "trees": [t.to_dict() for t in self.trees]}

    @classmethod
    def from_state(cls, state, params, n_features):
        return cls([Tree.from_dict(t) for t in state["trees"]], state["seeds"], params, n_features)


def _forest_tree(X, y, seed, bootstrap, m_try, max_depth, min_leaf):
    rng = np.random.default_rng(seed)
    n = len(y)
    if bootstrap:
        counts = np.bincount(rng.integers(0, n, n), minlength=n)
        keep = np.flatnonzero(counts)
        Xb, yb, wb = X[keep], y[keep], counts[keep].astype(float)
    else:
        Xb, yb, wb = X, y, None
    tree_seed = int(rng.integers(2**31))
    return fit_tree(Xb, yb, wb, max_depth=max_depth, min_leaf=min_leaf,
                    feature_subset=m_try, seed=tree_seed)


def fit_forest(X, y, n_trees=100, m_try=None, max_depth=None, min_leaf=1, seed=0,
               bootstrap=True, n_jobs=None):
    """Bagged entropy trees with a random feature subset per node; votes averaged.

    ``m_try=None`` uses round(sqrt(n_features)).
    """
    X = np.asarray(X, dtype=float)
    y = np.asarray(y, dtype=float)
    d = X.shape[1]
    if n_trees < 1:
        raise ValueError("n_trees must be >= 1")
    m = max(1, int(round(np.sqrt(d)))) if m_try is None else int(m_try)
    seeds = [int(s.generate_state(1)[0]) for s in np.random.SeedSequence(seed).spawn(n_trees)]
    args = (bootstrap, m, max_depth, min_leaf)
    if n_jobs and n_jobs != 1:
        from joblib import Parallel, delayed

        trees = Parallel(n_jobs=n_jobs)(delayed(_forest_tree)(X, y, s, *args) for s in seeds)
    else:
        trees = [_forest_tree(X, y, s, *args) for s in seeds]
    params = {"n_trees": n_trees, "m_try": m_try, "max_depth": max_depth, "min_leaf": min_leaf,
              "seed": seed, "bootstrap": bootstrap}
    return ForestModel(trees, seeds, params, d)
