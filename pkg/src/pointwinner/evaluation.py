"""Metric suite, match-level cross-validation and random hyperparameter search.

Label 1 is "server wins". Reports state the class their precision, recall and
F1 refer to; by default that is the returner (label 0), the harder class to
predict. Any 0/0 ratio is reported as 0.
"""
from __future__ import annotations

import json
import logging
import math
import warnings
from dataclasses import asdict, dataclass, field

import numpy as np

from . import models
from .featureset import FeatureSchema

log = logging.getLogger(__name__)

METRIC_KEYS = ("accuracy", "recall", "precision", "f1", "roc_auc")


class LengthMismatch(ValueError):
    pass


class EmptyMatrix(ValueError):
    pass


class SingleClass(ValueError):
    pass


@dataclass(frozen=True)
class ConfusionMatrix:
    tp: int
    fp: int
    tn: int
    fn: int

    @property
    def total(self):
        return self.tp + self.fp + self.tn + self.fn

    def flipped(self):
        """The same matrix with label 0 as the positive class."""
        return ConfusionMatrix(tp=self.tn, fp=self.fn, tn=self.tp, fn=self.fp)


def confusion(y_true, y_pred):
    t = np.asarray(y_true).astype(int)
    p = np.asarray(y_pred).astype(int)
    if t.shape != p.shape:
        raise LengthMismatch(f"{t.shape} vs {p.shape}")
    return ConfusionMatrix(
        tp=int(np.sum((t == 1) & (p == 1))),
        fp=int(np.sum((t == 0) & (p == 1))),
        tn=int(np.sum((t == 0) & (p == 0))),
        fn=int(np.sum((t == 1) & (p == 0))),
    )


def _ratio(num, den):
    return num / den if den else 0.0


def metrics(cm, positive=1):
    """Accuracy plus precision, recall and F1 for the ``positive`` class; 0/0 -> 0."""
    if cm.total == 0:
        raise EmptyMatrix("no evaluated rows")
    c = cm if positive == 1 else cm.flipped()
    precision = _ratio(c.tp, c.tp + c.fp)
    recall = _ratio(c.tp, c.tp + c.fn)
    return {
        "accuracy": (c.tp + c.tn) / c.total,
        "precision": precision,
        "recall": recall,
        "f1": _ratio(2 * precision * recall, precision + recall),
    }


def degenerate_ratios(cm, positive=1):
    """Names of the ratios that hit the 0/0 convention."""
    c = cm if positive == 1 else cm.flipped()
    out = []
    if c.tp + c.fp == 0:
        out.append("precision")
    if c.tp + c.fn == 0:
        out.append("recall")
    if out or c.tp == 0:
        out.append("f1")
    return out


def roc_auc(y_true, scores):
    """Mann-Whitney AUC: P(score of a random positive > a random negative), ties count 1/2.

    Computed from average ranks: (R+ - n+(n+ + 1)/2) / (n+ n-), where R+ is the
    sum of the midranks of the positives.
    """
    y = np.asarray(y_true).astype(int)
    s = np.asarray(scores, dtype=float)
    if y.shape != s.shape:
        raise LengthMismatch(f"{y.shape} vs {s.shape}")
    n_pos = int(y.sum())
    n_neg = len(y) - n_pos
    if n_pos == 0 or n_neg == 0:
        raise SingleClass("roc_auc needs both classes")
    order = np.argsort(s, kind="mergesort")
    sorted_s = s[order]
    ranks = np.empty(len(s))
    # midranks over runs of equal scores
    bounds = np.flatnonzero(np.diff(sorted_s)) + 1
    starts = np.concatenate(([0], bounds))
    ends = np.concatenate((bounds, [len(s)]))
    for a, b in zip(starts, ends):
        ranks[order[a:b]] = (a + b + 1) / 2.0
    r_pos = ranks[y == 1].sum()
    return float((r_pos - n_pos * (n_pos + 1) / 2.0) / (n_pos * n_neg))


def evaluate_predictions(y_true, proba, threshold=0.5, positive=0):
    """All five metrics for one evaluation set; roc_auc is NaN for a single class."""
    y = np.asarray(y_true).astype(int)
    p = np.asarray(proba, dtype=float)
    cm = confusion(y, (p >= threshold).astype(int))
    out = metrics(cm, positive)
    try:
        out["roc_auc"] = roc_auc(y, p)
    except SingleClass:
        out["roc_auc"] = float("nan")
    return out, cm


@dataclass
class EvalReport:
    family: str
    params: dict
    per_fold: list
    mean: dict
    positive: str = "returner"
    split: str = ""
    seed: int | None = None
    confusion: list = field(default_factory=list)
    zero_division: list = field(default_factory=list)
    train_match_ids: list = field(default_factory=list)

    def to_dict(self):
        return asdict(self)

    def to_json(self):
        def clean(v):
            if isinstance(v, float) and math.isnan(v):
                return None
            if isinstance(v, dict):
                return {k: clean(x) for k, x in v.items()}
            if isinstance(v, list):
                return [clean(x) for x in v]
            return v

        return json.dumps(clean(self.to_dict()), indent=1, sort_keys=True) + "\n"

    @classmethod
    def from_json(cls, text):
        d = json.loads(text)

        def unclean(m):
            return {k: (float("nan") if v is None else v) for k, v in m.items()}

        d["per_fold"] = [unclean(m) for m in d["per_fold"]]
        d["mean"] = unclean(d["mean"])
        return cls(**d)

    def summary_row(self, label=None):
        """Tab-separated row: label, then the five mean metrics as percentages."""
        cells = [label or self.family]
        for k in METRIC_KEYS:
            v = self.mean[k]
            cells.append("nan" if v is None or math.isnan(v) else f"{100 * v:.1f}")
        return "\t".join(cells)


SUMMARY_HEADER = "model\taccuracy\trecall\tprecision\tf1\troc_auc"


def mean_metrics(per_fold):
    out = {}
    for k in METRIC_KEYS:
        vals = [m[k] for m in per_fold if not math.isnan(m[k])]
        out[k] = float(np.mean(vals)) if vals else float("nan")
    return out


def _positive_label(positive):
    return {"returner": 0, "server": 1}[positive]


def fit_and_score(family, params, fit_rows, eval_rows, positive="returner"):
    """Fit on ``fit_rows`` with a schema fit there, score ``eval_rows``."""
    schema = FeatureSchema.fit(fit_rows)
    X_fit = schema.transform(fit_rows)
    X_eval = schema.transform(eval_rows)
    model = models.fit(family, X_fit, fit_rows["label"].to_numpy(), params)
    proba = models.predict_proba(model, X_eval)
    scores, cm = evaluate_predictions(eval_rows["label"].to_numpy(), proba,
                                      positive=_positive_label(positive))
    return scores, cm, model, schema


def cross_validate(family, params, rows, plan, positive="returner"):
    """Match-level k-fold CV over the plan's development matches.

    Each fold fits standardization and the model on the other folds' rows and
    scores its own rows. Folds with a single class get an undefined roc_auc
    that is left out of the mean.
    """
    dev = rows[rows["match_id"].isin(plan.folds)]
    fold_of = dev["match_id"].map(plan.folds).to_numpy()
    per_fold, cms, zero = [], [], []
    for k in range(plan.k):
        fit_rows = dev[fold_of != k]
        eval_rows = dev[fold_of == k]
        if len(eval_rows) == 0 or len(fit_rows) == 0:
            raise ValueError(f"fold {k} has no rows on one side")
        assert not set(fit_rows["match_id"]) & set(eval_rows["match_id"])
        scores, cm, _, _ = fit_and_score(family, params, fit_rows, eval_rows, positive)
        if math.isnan(scores["roc_auc"]):
            warnings.warn(f"fold {k} has a single class; roc_auc undefined", stacklevel=2)
        per_fold.append(scores)
        cms.append(asdict(cm))
        zero.append(degenerate_ratios(cm, _positive_label(positive)))
    return EvalReport(
        family=family, params=models.resolve_params(family, params), per_fold=per_fold,
        mean=mean_metrics(per_fold), positive=positive, split=plan.fingerprint, seed=plan.seed,
        confusion=cms, zero_division=zero,
    )


# --- random search ---------------------------------------------------------

@dataclass(frozen=True)
class Uniform:
    low: float
    high: float

    def draw(self, rng):
        return float(rng.uniform(self.low, self.high))


@dataclass(frozen=True)
class LogUniform:
    low: float
    high: float

    def draw(self, rng):
        return float(np.exp(rng.uniform(np.log(self.low), np.log(self.high))))


@dataclass(frozen=True)
class IntUniform:
    low: int
    high: int  # inclusive

    def draw(self, rng):
        return int(rng.integers(self.low, self.high + 1))


@dataclass(frozen=True)
class Choice:
    options: tuple

    def draw(self, rng):
        return self.options[int(rng.integers(len(self.options)))]


@dataclass
class SearchSpace:
    dists: dict
    budget: int = 20
    seed: int = 0

    def draws(self):
        rng = np.random.default_rng(self.seed)
        return [{name: self.dists[name].draw(rng) for name in sorted(self.dists)}
                for _ in range(self.budget)]


SEARCH_SPACES = {
    "gbt": {
        "rounds": IntUniform(50, 400),
        "eta": LogUniform(0.01, 0.3),
        "max_depth": IntUniform(2, 8),
        "lam": LogUniform(0.1, 10.0),
        "gamma": Uniform(0.0, 2.0),
        "min_child_weight": LogUniform(0.5, 20.0),
        "subsample": Uniform(0.5, 1.0),
        "colsample": Uniform(0.4, 1.0),
        "scale_pos_weight": Uniform(0.5, 2.0),
    },
    "logistic": {"alpha": LogUniform(1e-4, 0.1), "epochs": IntUniform(5, 100)},
    "forest": {"n_trees": IntUniform(50, 300), "max_depth": IntUniform(3, 30),
               "min_leaf": IntUniform(1, 100), "m_try": IntUniform(3, 20)},
    "adaboost": {"rounds": IntUniform(10, 300), "weak_depth": IntUniform(1, 3)},
}


def _selection_key(trial):
    auc = trial["mean"]["roc_auc"]
    f1 = trial["mean"]["f1"]
    return (-math.inf if math.isnan(auc) else auc, -math.inf if math.isnan(f1) else f1)


def select_best(trials):
    """Index of the best trial: highest mean roc_auc, then f1, then earliest."""
    best = 0
    for i, t in enumerate(trials):
        if _selection_key(t) > _selection_key(trials[best]):
            best = i
    return best


def random_search(space, family, rows, plan, positive="returner"):
    """Cross-validate ``space.budget`` random configurations and keep the best."""
    if space.budget < 1:
        raise ValueError("search budget must be >= 1")
    trials, reports = [], []
    for i, params in enumerate(space.draws()):
        report = cross_validate(family, params, rows, plan, positive)
        log.info("trial %d %s -> roc_auc %.4f", i, params, report.mean["roc_auc"])
        trials.append({"trial": i, "seed": space.seed, "params": params, "mean": report.mean})
        reports.append(report)
    best = select_best(trials)
    return trials[best]["params"], reports[best], trials


def trial_log_text(trials):
    lines = ["trial\tseed\tparams\t" + "\t".join(METRIC_KEYS)]
    for t in trials:
        vals = ["nan" if math.isnan(t["mean"][k]) else repr(t["mean"][k]) for k in METRIC_KEYS]
        lines.append(f"{t['trial']}\t{t['seed']}\t{json.dumps(t['params'], sort_keys=True)}\t"
                     + "\t".join(vals))
    return "\n".join(lines) + "\n"


def parse_trial_log(text):
    trials = []
    lines = text.splitlines()
    for line in lines[1:]:
        cells = line.split("\t")
        trials.append({"trial": int(cells[0]), "seed": int(cells[1]), "params": json.loads(cells[2]),
                       "mean": {k: float(v) for k, v in zip(METRIC_KEYS, cells[3:])}})
    return trials
