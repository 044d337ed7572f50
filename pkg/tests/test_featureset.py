import dataclasses
import warnings

import hypothesis.strategies as st
import numpy as np
import pandas as pd
import pytest
from hypothesis import given

from pointwinner import featureset as fs
from pointwinner.ingest import EVENT_FLAGS
from pointwinner.scoring import game_token, tiebreak_games

SCHEMA_NAMES = [n for n, _, _ in fs.load_schema_document()]


def test_schema_document_width():
    entries = fs.load_schema_document()
    width = sum(1 if kind == "numeric" else len(cats) for _, kind, cats in entries)
    assert width == 57


# --- accumulate -------------------------------------------------------------

def _frame(aces):
    n = len(aces)
    f = pd.DataFrame({"match_id": "m", "SetNo": 1, "GameNo": 1, "PointNumber": np.arange(1, n + 1),
                      "PointServer": 1, "ServeWidth": "W", "ServeDepth": "CTL",
                      "ReturnDepth": "D", "SetWinner": 0})
    for col in fs.FLAG_COLUMNS:
        f[col] = 0
    f["P1Ace"] = aces
    return f


def test_prefix_sum_example():
    assert fs.accumulate(_frame([0, 1, 1, 0]))["P1AceA"].tolist() == [0, 0, 1, 2]


def test_unordered_points_raise():
    f = _frame([0, 0, 0])
    f["PointNumber"] = [1, 3, 2]
    with pytest.raises(fs.UnorderedPoints):
        fs.accumulate(f)


def test_accumulators_vs_brute_force(match20):
    raw = fs.match_frame(match20)
    acc = fs.accumulate(raw)
    pts = match20.points
    for i in range(len(pts)):
        for flag in EVENT_FLAGS:
            for p in (1, 2):
                want = sum(1 for q in pts[:i] if q.flag(p, flag) == 1)
                assert acc[f"P{p}{flag}A"].iat[i] == want
        for p in (1, 2):
            for w in ("B", "BC", "BW", "C", "W"):
                want = sum(1 for q in pts[:i] if q.point_server == p and q.serve_width == w)
                assert acc[f"P{p}ServeWidth{w}A"].iat[i] == want
            for d in ("D", "ND"):
                want = sum(1 for q in pts[:i] if q.point_server != p and q.return_depth == d)
                assert acc[f"P{p}ReturnDepth{d}A"].iat[i] == want
    first = acc.iloc[0]
    assert all(first[c] == 0 for c in acc.columns if c.endswith("A") and c[:2] in ("P1", "P2"))


# --- shift_outcomes vs an independent replay -------------------------------

def replay(match):
    """Pre-point scoreboard from point winners alone, following the rules of play."""
    meta = match.meta
    sets, games, pts, won = [0, 0], [0, 0], [0, 0], [0, 0]
    set_no = 1
    out = []
    for p in match.points:
        at = tiebreak_games(meta.tournament, meta.year, set_no)
        tb = at is not None and games == [at, at]
        tokens = [str(pts[0]), str(pts[1])] if tb else [game_token(pts[0], pts[1]), game_token(pts[1], pts[0])]
        out.append({"SetNo": set_no, "P1Score": tokens[0], "P2Score": tokens[1],
                    "P1GamesWon": games[0], "P2GamesWon": games[1],
                    "P1SetsWon": sets[0], "P2SetsWon": sets[1],
                    "P1PointsWon": won[0], "P2PointsWon": won[1], "Tiebreak": int(tb)})
        w = p.point_winner - 1
        won[w] += 1
        pts[w] += 1
        need = 7 if tb else 4
        if pts[w] >= need and pts[w] - pts[1 - w] >= 2:
            games[w] += 1
            pts = [0, 0]
            done = (tb and games[w] == at + 1) or (games[w] >= 6 and games[w] - games[1 - w] >= 2)
            if done:
                sets[w] += 1
                games = [0, 0]
                set_no += 1
    return pd.DataFrame(out)


def test_scoreboard_replay(match20):
    shifted = fs.shift_outcomes(fs.accumulate(fs.match_frame(match20)))
    want = replay(match20)
    for col in want.columns:
        got = shifted[col].tolist()
        assert [str(g) for g in got] == [str(x) for x in want[col]], col


def test_scoreboard_replay_full_matches(dataset3):
    for m in dataset3.matches:
        shifted = fs.shift_outcomes(fs.accumulate(fs.match_frame(m)))
        want = replay(m)
        for col in want.columns:
            assert [str(g) for g in shifted[col]] == [str(x) for x in want[col]], (m.match_id, col)


def test_first_row_starts_at_zero(dataset3):
    rows = fs.prepare(dataset3)
    first = rows[rows["PointIndex"] == 0]
    cols = ["P1Score", "P2Score", "P1GamesWon", "P2GamesWon", "P1SetsWon", "P2SetsWon"]
    assert (first[cols] == 0).all().all()


def test_second_point_shows_fifteen():
    rows = []
    # server wins point 1 of a game
    for i, winner in enumerate((1, 2)):
        rows.append({"match_id": "m", "SetNo": 1, "GameNo": 1, "PointNumber": i + 1,
                     "P1Score": ["15", "15"][i], "P2Score": ["0", "15"][i], "P1GamesWon": 0,
                     "P2GamesWon": 0, "P1PointsWon": 1, "P2PointsWon": i, "Tournament": "US Open",
                     "Year": 2019})
    out = fs.shift_outcomes(pd.DataFrame(rows))
    assert out["P1Score"].tolist() == ["0", "15"]


# --- server perspective -----------------------------------------------------

def test_swap_example():
    f = pd.DataFrame({"PointServer": [2, 1], "PointWinner": [2, 2], "P1Rank": [10, 10],
                      "P2Rank": [50, 50]})
    out = fs.to_server_perspective(f)
    assert out["P1Rank"].tolist() == [50, 10]
    assert out["P2Rank"].tolist() == [10, 50]
    assert out["label"].tolist() == [1, 0]


def test_unpaired_column():
    with pytest.raises(fs.UnpairedColumn):
        fs.paired_columns(["P1Ace", "P2Ace", "P1Lonely"])


def test_swap_involution(match20):
    frame = fs.shift_outcomes(fs.accumulate(fs.match_frame(match20)))
    mask = frame["PointServer"].to_numpy() == 2
    assert mask.any() and (~mask).any()
    twice = fs.swap_players(fs.swap_players(frame, mask), mask)
    pd.testing.assert_frame_equal(twice, frame)
    once = fs.swap_players(frame, mask)
    for a, b in fs.paired_columns(list(frame.columns)):
        assert (once.loc[mask, a].to_numpy() == frame.loc[mask, b].to_numpy()).all()
        assert (once.loc[~mask, a].to_numpy() == frame.loc[~mask, a].to_numpy()).all()


def test_server_rank_is_server(dataset3):
    rows = fs.prepare(dataset3)
    for m in dataset3.matches:
        sel = rows[rows["match_id"] == m.match_id]
        servers = [p.point_server for p in m.points]
        want = [m.p1_rank if s == 1 else m.p2_rank for s in servers]
        assert sel["P1Rank"].tolist() == want
        labels = [int(p.point_winner == p.point_server) for p in m.points]
        assert sel["label"].tolist() == labels


# --- leak-freedom -----------------------------------------------------------

OUTCOME_FIELDS = ["point_winner", "game_winner", "set_winner", "p1_score", "p2_score",
                  "p1_games_won", "p2_games_won", "p1_points_won", "p2_points_won",
                  "serve_width", "serve_depth", "return_depth", "speed_kmh", "speed_mph",
                  "rally_count", "winner_type", "winner_shot_type", "p1_distance_run",
                  "p2_distance_run"] + [f"p{p}_{f}" for p in (1, 2) for f in
                                        ("ace", "winner", "double_fault", "unf_err", "net_point",
                                         "net_point_won", "break_point", "break_point_won",
                                         "break_point_missed")]


def scramble(point, rng):
    """Replace every outcome field of a point with arbitrary values."""
    vals = {}
    for f in OUTCOME_FIELDS:
        if f in ("point_winner", "game_winner", "set_winner"):
            vals[f] = int(rng.integers(1, 3))
        elif f in ("p1_score", "p2_score"):
            vals[f] = str(rng.choice(["0", "15", "30", "40", "AD"]))
        elif f in ("serve_width", "serve_depth", "return_depth", "winner_type", "winner_shot_type"):
            vals[f] = str(rng.choice(["W", "B", "CTL", "ND", "X"]))
        elif f.startswith(("speed", "p1_distance", "p2_distance")):
            vals[f] = float(rng.uniform(0, 250))
        else:
            vals[f] = int(rng.integers(0, 2 if "_" in f and f[:3] in ("p1_", "p2_") else 60))
    return dataclasses.replace(point, **vals)


def test_leak_freedom_truncate_and_scramble(corpus):
    rng = np.random.default_rng(0)
    matches = sorted(corpus.matches, key=lambda m: m.match_id)
    full = {m.match_id: fs.match_rows(m) for m in matches}
    cols = ["ServeNumber"] + SCHEMA_NAMES
    checked = 0
    by_match = {}
    for _ in range(1000):
        m = matches[int(rng.integers(len(matches)))]
        by_match.setdefault(m.match_id, []).append(int(rng.integers(len(m.points))))
    for m in matches:
        for i in by_match.get(m.match_id, []):
            pts = list(m.points[: i + 1])
            pts[i] = scramble(pts[i], rng)
            cut = fs.match_rows(dataclasses.replace(m, points=tuple(pts)))
            got = cut.iloc[i][cols]
            want = full[m.match_id].iloc[i][cols]
            assert got.tolist() == want.tolist(), (m.match_id, i)
            checked += 1
    assert checked >= 1000


# --- encoding ---------------------------------------------------------------

def test_one_hot_and_constant_column(dataset3):
    rows = fs.prediction_rows(fs.prepare(dataset3))
    schema = fs.FeatureSchema.fit(rows)
    X = schema.transform(rows)
    cols = schema.columns
    assert X.shape[1] == len(cols) == 57
    for group, cats in schema.groups.items():
        idx = [cols.index(f"{group}={c}") for c in cats]
        assert (X[:, idx].sum(axis=1) <= 1).all()
    # every fixture match is at Wimbledon on grass
    assert (X[:, cols.index("Surface=Grass")] == 1).all()
    year_const = schema.numeric.index("P1Unranked")
    if rows["P1Unranked"].nunique() == 1:
        assert schema.sds[year_const] == 1.0 and (X[:, year_const] == 0).all()


def test_standardization_oracle(corpus):
    rows = fs.prediction_rows(fs.prepare(corpus)).iloc[:1000]
    schema = fs.FeatureSchema.fit(rows)
    X = schema.transform(rows)[:, : len(schema.numeric)]
    raw = rows[schema.numeric].to_numpy(float)
    varying = raw.std(axis=0) > 0
    assert np.abs(X.mean(axis=0)).max() < 1e-9
    assert np.abs(X.std(axis=0)[varying] - 1).max() < 1e-9
    assert (X[:, ~varying] == 0).all()


def test_transform_does_not_refit(corpus):
    rows = fs.prediction_rows(fs.prepare(corpus))
    fit, held = rows.iloc[:500], rows.iloc[500:]
    schema = fs.FeatureSchema.fit(fit)
    before = (schema.means.copy(), schema.sds.copy())
    schema.transform(held)
    assert (schema.means == before[0]).all() and (schema.sds == before[1]).all()


def test_unseen_category_warns(dataset3):
    rows = fs.prediction_rows(fs.prepare(dataset3))
    schema = fs.FeatureSchema.fit(rows)
    odd = rows.iloc[:3].copy()
    odd["Surface"] = "Clay"
    with pytest.warns(UserWarning, match="unseen"):
        X = schema.transform(odd)
    cols = schema.columns
    assert (X[:, [cols.index("Surface=Grass"), cols.index("Surface=Hard")]] == 0).all()


def test_schema_roundtrip(dataset3):
    rows = fs.prediction_rows(fs.prepare(dataset3))
    schema = fs.FeatureSchema.fit(rows)
    back = fs.FeatureSchema.from_dict(schema.to_dict())
    assert back.fingerprint == schema.fingerprint
    assert np.array_equal(back.transform(rows), schema.transform(rows))
    text = schema.to_text()
    assert all(c in text for c in schema.columns)


def test_split_by_serve():
    rows = pd.DataFrame({"ServeNumber": [1, 2, 1], "label": [1, 0, 1]})
    a, b = fs.split_by_serve(rows)
    assert (len(a), len(b)) == (2, 1)


def test_prediction_rows_are_landed_serves(dataset3):
    rows = fs.prepare(dataset3)
    kept = fs.prediction_rows(rows)
    landed = sum(p.serve_landed for m in dataset3.matches for p in m.points)
    assert len(rows) == dataset3.n_points
    assert len(kept) == landed
    first, second = fs.split_by_serve(kept)
    assert len(first) + len(second) == len(kept)


def test_parallel_prepare_matches_serial(dataset3):
    pd.testing.assert_frame_equal(fs.prepare(dataset3), fs.prepare(dataset3, n_jobs=2))


# --- split plan -------------------------------------------------------------

def test_split_arithmetic():
    plan = fs.make_split_plan([f"m{i:03d}" for i in range(709)], seed=0)
    assert (len(plan.test), len(plan.train), len(plan.validation)) == (71, 510, 128)


@given(st.integers(20, 300), st.integers(0, 2**31), st.integers(2, 10))
def test_split_hygiene(n, seed, k):
    ids = [f"m{i}" for i in range(n)]
    plan = fs.make_split_plan(ids, seed, k=k)
    test, train, val = set(plan.test), set(plan.train), set(plan.validation)
    assert not test & train and not test & val and not train & val
    assert test | train | val == set(ids)
    assert set(plan.folds) == train | val
    sizes = np.bincount(list(plan.folds.values()), minlength=k)
    assert sizes.max() - sizes.min() <= 1
    assert plan == fs.make_split_plan(ids, seed, k=k)
    assert fs.SplitPlan.from_text(plan.to_text()) == plan


def test_too_few_matches():
    with pytest.raises(fs.TooFewMatches):
        fs.make_split_plan(["a", "b"], 0)
