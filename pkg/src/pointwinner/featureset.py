"""Leak-free, server-perspective training rows and their encoding.

Each point of a match becomes one row holding what was known once the serve
was struck: the scoreboard before the point, match context, and running counts
of every event over the earlier points. The pipeline per match is
``accumulate`` -> ``shift_outcomes`` -> ``to_server_perspective``.
"""
from __future__ import annotations

import hashlib
import json
import logging
import warnings
from dataclasses import dataclass, field
from importlib import resources

import numpy as np
import pandas as pd

from .ingest import EVENT_FLAGS, RETURN_DEPTHS, SERVE_DEPTHS, SERVE_WIDTHS
from .scoring import break_point_pending, score_ordinal, tiebreak_games

log = logging.getLogger(__name__)

SCHEMA_VERSION = 1
STATE_COLUMNS = ["P1Score", "P2Score", "P1GamesWon", "P2GamesWon", "P1PointsWon", "P2PointsWon"]
FLAG_COLUMNS = [f"P{p}{flag}" for flag in EVENT_FLAGS for p in (1, 2)]
PLACEMENT_GROUPS = {"ServeWidth": SERVE_WIDTHS, "ServeDepth": SERVE_DEPTHS, "ReturnDepth": RETURN_DEPTHS}


class FeatureError(Exception):
    pass


class UnorderedPoints(FeatureError):
    pass


class UnpairedColumn(FeatureError):
    def __init__(self, name):
        super().__init__(f"column {name!r} has no P2 twin")
        self.name = name


class TooFewMatches(FeatureError):
    pass


def load_schema_document(version=SCHEMA_VERSION):
    """Ordered ``(name, kind, categories)`` entries of the frozen feature list."""
    text = resources.files("pointwinner.data").joinpath(f"features_v{version}.tsv").read_text()
    entries = []
    for line in text.splitlines():
        if not line or line.startswith("#"):
            continue
        parts = line.split("\t")
        cats = tuple(parts[2].split(",")) if len(parts) > 2 else ()
        entries.append((parts[0], parts[1], cats))
    return entries


# --- per-match stages ------------------------------------------------------

def match_frame(match):
    """Raw points of one match as a frame with raw point-file column names."""
    from .ingest import COLUMN_OF

    cols = {col: [getattr(p, attr) for p in match.points] for attr, col in COLUMN_OF.items()}
    frame = pd.DataFrame(cols)
    meta = match.meta
    frame["Tournament"] = meta.tournament
    frame["Year"] = meta.year
    frame["Surface"] = meta.surface
    frame["P1Rank"] = match.p1_rank
    frame["P2Rank"] = match.p2_rank
    frame["P1Unranked"] = int(not match.p1_ranked)
    frame["P2Unranked"] = int(not match.p2_ranked)
    return frame


def _check_order(frame):
    key = list(zip(frame["SetNo"], frame["GameNo"], frame["PointNumber"]))
    if any(a >= b for a, b in zip(key, key[1:])):
        raise UnorderedPoints(f"points of {frame['match_id'].iloc[0]!r} are not strictly ordered")


def _prior_count(mask):
    """Occurrences strictly before each row."""
    arr = np.asarray(mask, dtype=np.int64)
    out = np.zeros_like(arr)
    if len(arr):
        out[1:] = np.cumsum(arr)[:-1]
    return out


def accumulate(frame):
    """Add running counts of every event flag and placement category.

    ``P1AceA`` at row i counts the aces of player 1 in rows 0..i-1. Missing
    flag cells count as 0. Placement counts are per serving player (serve width
    and depth) and per returning player (return depth); sets won come from the
    set-winner column.
    """
    if len(frame) == 0:
        return frame.copy()
    _check_order(frame)
    new = {}
    for col in FLAG_COLUMNS:
        new[col + "A"] = _prior_count(frame[col].fillna(0).astype(int) == 1)
    server = frame["PointServer"].to_numpy()
    groups = {g: frame[g].to_numpy() for g in PLACEMENT_GROUPS}
    set_winner = frame["SetWinner"].to_numpy()
    for p in (1, 2):
        for group in ("ServeWidth", "ServeDepth"):
            for cat in PLACEMENT_GROUPS[group]:
                new[f"P{p}{group}{cat}A"] = _prior_count((server == p) & (groups[group] == cat))
        for cat in RETURN_DEPTHS:
            new[f"P{p}ReturnDepth{cat}A"] = _prior_count((server != p) & (groups["ReturnDepth"] == cat))
        new[f"P{p}SetsWon"] = _prior_count(set_winner == p)
    rest = frame.drop(columns=[c for c in new if c in frame.columns])
    return pd.concat([rest, pd.DataFrame(new, index=frame.index)], axis=1)


def shift_outcomes(frame):
    """Replace post-point scoreboard columns with the state at the start of each point.

    Row i takes row i-1's post-point values; the first point of the match,
    of each set and of each game restart the relevant counters at zero. A
    ``Tiebreak`` flag is derived from the pre-point games score.
    """
    out = frame.copy()
    n = len(frame)
    if n == 0:
        out["Tiebreak"] = pd.Series(dtype=int)
        return out
    set_no = frame["SetNo"].to_numpy()
    game_key = list(zip(frame["SetNo"], frame["GameNo"]))
    new_set = np.ones(n, dtype=bool)
    new_game = np.ones(n, dtype=bool)
    new_set[1:] = set_no[1:] != set_no[:-1]
    new_game[1:] = [a != b for a, b in zip(game_key[1:], game_key[:-1])]
    for col in STATE_COLUMNS:
        prev = frame[col].shift(1).to_numpy(dtype=object)
        prev[0] = "0" if "Score" in col else 0
        if "Score" in col:
            prev[new_game] = "0"
        elif "Games" in col:
            prev[new_set] = 0
        out[col] = prev
    for col in ("P1GamesWon", "P2GamesWon", "P1PointsWon", "P2PointsWon"):
        out[col] = out[col].astype(int)
    keys = list(zip(frame["Tournament"], frame["Year"].astype(int), set_no.astype(int)))
    rule = {k: tiebreak_games(*k) for k in set(keys)}
    at = np.array([-1 if rule[k] is None else rule[k] for k in keys])
    g1 = out["P1GamesWon"].to_numpy()
    g2 = out["P2GamesWon"].to_numpy()
    out["Tiebreak"] = ((at >= 0) & (g1 == at) & (g2 == at)).astype(int)
    return out


def paired_columns(columns):
    pairs = []
    cols = set(columns)
    for c in columns:
        if c.startswith("P1"):
            twin = "P2" + c[2:]
            if twin not in cols:
                raise UnpairedColumn(c)
            pairs.append((c, twin))
        elif c.startswith("P2") and "P1" + c[2:] not in cols:
            raise UnpairedColumn(c)
    return pairs


def swap_players(frame, mask):
    """Exchange every P1/P2 column pair on the rows selected by ``mask``."""
    mask = np.asarray(mask, dtype=bool)
    new = {}
    for a, b in paired_columns([c for c in frame.columns if c not in ("PointServer", "PointWinner")]):
        va = frame[a].to_numpy()
        vb = frame[b].to_numpy()
        new[a] = np.where(mask, vb, va)
        new[b] = np.where(mask, va, vb)
    if not new:
        return frame.copy()
    rest = frame.drop(columns=list(new))
    return pd.concat([rest, pd.DataFrame(new, index=frame.index)], axis=1)[list(frame.columns)]


def to_server_perspective(frame):
    """Relabel players so that P1 is always the server; ``label`` = server won."""
    server = frame["PointServer"].to_numpy()
    out = swap_players(frame, server == 2)
    out["label"] = (frame["PointWinner"].to_numpy() == server).astype(int)
    return out.drop(columns=["PointServer", "PointWinner"])


def _finish(frame):
    """Derived context columns and ordinal scores, then the output column set."""
    tb = frame["Tiebreak"].to_numpy().astype(bool)
    s1 = [score_ordinal(t, b) for t, b in zip(frame["P1Score"], tb)]
    s2 = [score_ordinal(t, b) for t, b in zip(frame["P2Score"], tb)]
    frame = frame.copy()
    frame["P1Score"] = s1
    frame["P2Score"] = s2
    frame["BreakPointPending"] = [int(break_point_pending(a, b, t)) for a, b, t in zip(s1, s2, tb)]
    double_fault = frame["P1DoubleFault"].fillna(0).astype(int) + frame["P2DoubleFault"].fillna(0).astype(int)
    frame["Eligible"] = (frame["ServeNumber"].isin([1, 2]) & (double_fault == 0)).astype(int)
    frame["PointIndex"] = np.arange(len(frame))
    names = [name for name, _, _ in load_schema_document()]
    return frame[["match_id", "PointIndex", "ServeNumber", "Eligible", "label"] + names].reset_index(drop=True)


def match_rows(match):
    """Prepared rows for every point of one match (``Eligible`` marks landed serves)."""
    frame = match_frame(match)
    frame = accumulate(frame)
    frame = shift_outcomes(frame)
    frame = to_server_perspective(frame)
    return _finish(frame)


def prepare(dataset, n_jobs=None):
    """Prepared rows for all matches, concatenated in match-id order."""
    matches = sorted(dataset.matches, key=lambda m: m.match_id)
    if n_jobs and n_jobs != 1:
        from joblib import Parallel, delayed

        parts = Parallel(n_jobs=n_jobs)(delayed(match_rows)(m) for m in matches)
    else:
        parts = [match_rows(m) for m in matches]
    return pd.concat(parts, ignore_index=True)


def prediction_rows(rows):
    """Rows whose serve landed; double faults and unserved points stay history only."""
    return rows[rows["Eligible"] == 1].reset_index(drop=True)


def split_by_serve(rows):
    sn = rows["ServeNumber"]
    if not sn.isin([1, 2]).all():
        raise FeatureError("ServeNumber must be 1 or 2 on every row")
    return rows[sn == 1].reset_index(drop=True), rows[sn == 2].reset_index(drop=True)


# --- encoding --------------------------------------------------------------

@dataclass
class FeatureSchema:
    """Column layout plus standardization parameters fit on training rows."""

    numeric: list
    groups: dict  # name -> tuple of categories
    means: np.ndarray
    sds: np.ndarray
    version: int = SCHEMA_VERSION

    @classmethod
    def fit(cls, rows, version=SCHEMA_VERSION):
        entries = load_schema_document(version)
        numeric = [n for n, kind, _ in entries if kind == "numeric"]
        groups = {n: cats for n, kind, cats in entries if kind == "categorical"}
        values = rows[numeric].to_numpy(dtype=float)
        if len(values) == 0:
            raise FeatureError("cannot fit standardization on zero rows")
        means = values.mean(axis=0)
        sds = values.std(axis=0)
        sds[sds == 0] = 1.0
        return cls(numeric, groups, means, sds, version)

    @property
    def columns(self):
        cols = list(self.numeric)
        for name, cats in self.groups.items():
            cols += [f"{name}={c}" for c in cats]
        return cols

    @property
    def fingerprint(self):
        return hashlib.sha256(json.dumps([self.version, self.columns]).encode()).hexdigest()[:16]

    def transform(self, rows):
        values = rows[self.numeric].to_numpy(dtype=float)
        if np.isnan(values).any():
            raise FeatureError("missing numeric values reached the encoder")
        parts = [(values - self.means) / self.sds]
        for name, cats in self.groups.items():
            col = rows[name].to_numpy()
            block = np.zeros((len(rows), len(cats)))
            for j, c in enumerate(cats):
                block[:, j] = col == c
            unseen = sorted(set(col[block.sum(axis=1) == 0]))
            if unseen:
                warnings.warn(f"unseen {name} categories {unseen}; encoded as all zeros", stacklevel=2)
            parts.append(block)
        return np.hstack(parts)

    def to_dict(self):
        return {
            "version": self.version,
            "numeric": list(self.numeric),
            "groups": {k: list(v) for k, v in self.groups.items()},
            "means": [float(x) for x in self.means],
            "sds": [float(x) for x in self.sds],
            "fingerprint": self.fingerprint,
        }

    @classmethod
    def from_dict(cls, d):
        return cls(list(d["numeric"]), {k: tuple(v) for k, v in d["groups"].items()},
                   np.array(d["means"], dtype=float), np.array(d["sds"], dtype=float), d["version"])

    def to_text(self):
        lines = [f"# feature schema v{self.version} fingerprint {self.fingerprint}",
                 f"# {len(self.columns)} columns", "column\tkind\tmean\tsd"]
        for name, mu, sd in zip(self.numeric, self.means, self.sds):
            lines.append(f"{name}\tnumeric\t{mu!r}\t{sd!r}")
        for name, cats in self.groups.items():
            for c in cats:
                lines.append(f"{name}={c}\tone-hot:{name}\t\t")
        return "\n".join(lines) + "\n"


@dataclass
class FeatureMatrix:
    values: np.ndarray
    labels: np.ndarray
    match_ids: np.ndarray
    columns: list


def encode(rows, fit_rows, schema=None):
    """Encode ``rows`` with a schema fit on ``fit_rows`` (or the one given)."""
    schema = schema or FeatureSchema.fit(fit_rows)
    X = schema.transform(rows)
    return FeatureMatrix(X, rows["label"].to_numpy(dtype=int), rows["match_id"].to_numpy(),
                         schema.columns), schema


# --- split plan ------------------------------------------------------------

def _round_half_up(x):
    return int(np.floor(x + 0.5))


@dataclass
class SplitPlan:
    seed: int
    test: list
    train: list
    validation: list
    folds: dict = field(default_factory=dict)  # match_id -> fold index (train + validation)
    k: int = 10

    def fold_ids(self, k):
        return sorted(m for m, f in self.folds.items() if f == k)

    @property
    def development(self):
        return sorted(self.train + self.validation)

    @property
    def fingerprint(self):
        payload = json.dumps([self.seed, sorted(self.test), sorted(self.folds.items())])
        return hashlib.sha256(payload.encode()).hexdigest()[:16]

    def to_text(self):
        lines = [f"# split plan seed {self.seed} k {self.k} fingerprint {self.fingerprint}",
                 "match_id\trole\tfold"]
        roles = {m: "test" for m in self.test}
        roles.update({m: "train" for m in self.train})
        roles.update({m: "validation" for m in self.validation})
        for m in sorted(roles):
            fold = "" if roles[m] == "test" else str(self.folds[m])
            lines.append(f"{m}\t{roles[m]}\t{fold}")
        return "\n".join(lines) + "\n"

    @classmethod
    def from_text(cls, text):
        lines = text.splitlines()
        head = lines[0].split()
        seed, k = int(head[4]), int(head[6])
        test, train, val, folds = [], [], [], {}
        for line in lines[2:]:
            m, role, fold = line.split("\t")
            {"test": test, "train": train, "validation": val}[role].append(m)
            if fold:
                folds[m] = int(fold)
        return cls(seed, test, train, val, folds, k)


def make_split_plan(match_ids, seed, test_frac=0.10, train_frac=0.80, k=10, min_matches=20):
    """Match-level test/train/validation split and fold assignment.

    Counts round to nearest with ties up; the test set has at least one match.
    Folds are dealt round-robin over a seeded shuffle, so sizes differ by at
    most one.
    """
    ids = sorted(set(match_ids))
    if len(ids) < min_matches:
        raise TooFewMatches(f"{len(ids)} matches, need at least {min_matches}")
    rng = np.random.default_rng(seed)
    order = [ids[i] for i in rng.permutation(len(ids))]
    n_test = max(1, _round_half_up(test_frac * len(ids)))
    rest = order[n_test:]
    n_train = _round_half_up(train_frac * len(rest))
    test, train, val = order[:n_test], rest[:n_train], rest[n_train:]
    if k < 2 or k > len(rest):
        raise TooFewMatches(f"cannot make {k} folds from {len(rest)} development matches")
    dev = [rest[i] for i in rng.permutation(len(rest))]
    folds = {m: i % k for i, m in enumerate(dev)}
    return SplitPlan(seed, sorted(test), sorted(train), sorted(val), folds, k)
