"""Simulated Grand Slam matches written in the public point-by-point layout.

Used to build test fixtures and smoke-test the pipeline without the real
files. Scores, games, sets, break points and serve rotation follow the rules
in :mod:`pointwinner.scoring`; event and placement rates are rough tour
averages and carry no claim about the real data.
"""
from __future__ import annotations

import csv
import datetime as dt
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .ingest import POINT_COLUMNS, tournament_start
from .scoring import break_point_pending, game_finished, game_token, set_finished, tiebreak_games

FIRST_WIDTH = {"W": 0.38, "BW": 0.30, "B": 0.07, "BC": 0.08, "C": 0.17}
SECOND_WIDTH = {"W": 0.13, "BW": 0.16, "B": 0.26, "BC": 0.25, "C": 0.20}
SLAM_CODES = {"Wimbledon": "wimbledon", "US Open": "usopen",
              "Australian Open": "ausopen", "Roland Garros": "frenchopen"}


@dataclass
class SimParams:
    first_in: float = 0.62
    second_in: float = 0.91
    p_first: float = 0.73
    p_second: float = 0.57
    rank_effect: float = 0.06
    ace_rate: float = 0.12
    first_ctl: float = 0.55
    second_ctl: float = 0.30


def _choice(rng, probs):
    keys = list(probs)
    p = np.array([probs[k] for k in keys], dtype=float)
    return keys[int(rng.choice(len(keys), p=p / p.sum()))]


def _clock(seconds):
    h, rem = divmod(int(seconds), 3600)
    m, s = divmod(rem, 60)
    return f"{h}:{m:02d}:{s:02d}"


def simulate_match(rng, match_id, tournament, year, rank1, rank2, params=SimParams(),
                   max_points=None, best_of=5):
    """Rows (dicts keyed by raw point-file column) for one simulated match."""
    strength = params.rank_effect * math.tanh(math.log(rank2 / rank1) / 2)

    rows = []
    sets = [0, 0]
    set_no = 1
    games = [0, 0]
    game_no = 1
    pts = [0, 0]
    won = [0, 0]
    first_server = int(rng.integers(1, 3))
    games_played = 0
    tb_points = 0
    clock = 0.0

    while max(sets) * 2 <= best_of:
        tb_at = tiebreak_games(tournament, year, set_no, best_of)
        tiebreak = tb_at is not None and games == [tb_at, tb_at]
        if tiebreak:
            # the player due to serve starts, then every two points
            server = 1 + (first_server - 1 + games_played + (tb_points + 1) // 2) % 2
        else:
            server = 1 + (first_server - 1 + games_played) % 2
        ret = 3 - server
        si, ri = server - 1, ret - 1

        edge = strength if server == 1 else -strength
        row = {col: "" for _, col, _, _ in POINT_COLUMNS}
        row.update({"match_id": match_id, "SetNo": set_no, "GameNo": game_no,
                    "PointNumber": len(rows) + 1, "PointServer": server,
                    "Serveindicator": server})
        for _, col, kind, _ in POINT_COLUMNS:
            if kind is int and col.startswith(("P1", "P2")) and col[2:] not in ("GamesWon", "PointsWon"):
                row[col] = 0

        srv_ord = pts[si] if tiebreak else min(pts[si], 3) + (pts[si] > pts[ri] >= 3)
        ret_ord = pts[ri] if tiebreak else min(pts[ri], 3) + (pts[ri] > pts[si] >= 3)
        bp = break_point_pending(srv_ord, ret_ord, tiebreak)

        double_fault = False
        if rng.random() < params.first_in:
            serve_number = 1
        elif rng.random() < params.second_in:
            serve_number = 2
        else:
            serve_number = 2
            double_fault = True
        row["ServeNumber"] = serve_number
        if double_fault:
            winner = ret
            row[f"P{server}DoubleFault"] = 1
            row["RallyCount"] = 0
            speed = 0
        else:
            first = serve_number == 1
            width = _choice(rng, FIRST_WIDTH if first else SECOND_WIDTH)
            ctl = params.first_ctl if first else params.second_ctl
            row["ServeWidth"] = width
            row["ServeDepth"] = "CTL" if rng.random() < ctl else "NCTL"
            base = params.p_first if first else params.p_second
            wide_bonus = 0.03 if width in ("W", "C") else -0.02
            p = min(max(base + edge + wide_bonus - 0.03 * bp, 0.02), 0.98)
            ace = first and rng.random() < params.ace_rate
            if ace:
                winner = server
                row[f"P{server}Ace"] = 1
                row["RallyCount"] = 1
            else:
                winner = server if rng.random() < p else ret
                row["ReturnDepth"] = "D" if rng.random() < 0.45 else "ND"
                row["RallyCount"] = int(2 + rng.geometric(0.25))
                if rng.random() < 0.3:
                    row[f"P{winner}Winner"] = 1
                elif rng.random() < 0.45:
                    row[f"P{3 - winner}UnfErr"] = 1
                for who in (1, 2):
                    if rng.random() < 0.1:
                        row[f"P{who}NetPoint"] = 1
                        row[f"P{who}NetPointWon"] = int(winner == who)
            speed = int(round(rng.normal(196 if first else 158, 11)))
            if rng.random() < 0.02:
                speed = 0  # untracked serve
        row["Speed_KMH"] = speed
        row["Speed_MPH"] = int(round(speed / 1.609344))
        rally = row["RallyCount"] or 0
        row["P1DistanceRun"] = round(float(rng.gamma(2.0, 2.0 + 2.5 * rally)), 3)
        row["P2DistanceRun"] = round(float(rng.gamma(2.0, 2.0 + 2.5 * rally)), 3)
        row["WinnerType"] = "0"
        row["WinnerShotType"] = "0" if not row[f"P{winner}Winner"] else ("F" if rng.random() < 0.6 else "B")
        if bp:
            row[f"P{ret}BreakPoint"] = 1
            row[f"P{ret}BreakPointWon" if winner == ret else f"P{ret}BreakPointMissed"] = 1

        clock += 25 + 3 * rally
        row["ElapsedTime"] = _clock(clock)
        row["PointWinner"] = winner
        won[winner - 1] += 1
        pts[winner - 1] += 1
        if tiebreak:
            tb_points += 1

        row["GameWinner"] = 0
        row["SetWinner"] = 0
        if game_finished(pts[0], pts[1], tiebreak):
            row["GameWinner"] = winner
            games[winner - 1] += 1
            games_played += 1
            pts = [0, 0]
            tb_points = 0
            row["P1Score"], row["P2Score"] = "0", "0"
            game_no += 1
        elif tiebreak:
            row["P1Score"], row["P2Score"] = str(pts[0]), str(pts[1])
        else:
            row["P1Score"], row["P2Score"] = game_token(pts[0], pts[1]), game_token(pts[1], pts[0])
        row["P1GamesWon"], row["P2GamesWon"] = games
        row["P1PointsWon"], row["P2PointsWon"] = won
        if row["GameWinner"] and set_finished(games[0], games[1], tb_at):
            row["SetWinner"] = winner
            sets[winner - 1] += 1
            set_no += 1
            games = [0, 0]
            game_no = 1
        rows.append(row)
        if max_points is not None and len(rows) >= max_points:
            break
    return rows


@dataclass
class Event:
    tournament: str
    year: int
    n_men: int = 4
    n_women: int = 0
    n_missing_placement: int = 0


def write_corpus(out_dir, events, seed=0, n_players=64, params=SimParams()):
    """Write matches/points files for each event plus rankings and a player directory."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    rng = np.random.default_rng(seed)
    first = ["Alex", "Bruno", "Carlos", "Dmitri", "Emil", "Felix", "Gael", "Hugo"]
    last = [f"Player{i:03d}" for i in range(n_players)]
    players = [(100000 + i, first[i % len(first)], last[i]) for i in range(n_players)]
    # rank 1..n with a few unranked players in the tail
    ranks = {pid: i + 1 for i, (pid, _, _) in enumerate(players[: n_players - 4])}

    with open(out / "atp_players.csv", "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["player_id", "name_first", "name_last", "hand", "dob", "ioc"])
        for pid, fn, ln in players:
            w.writerow([pid, fn, ln, "R", "19900101", "UNK"])

    snapshot_dates = set()
    for ev in events:
        start = tournament_start(ev.tournament, ev.year)
        snapshot_dates.add(start - dt.timedelta(days=7))
        snapshot_dates.add(start - dt.timedelta(days=70))
    with open(out / "atp_rankings_synth.csv", "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["ranking_date", "rank", "player", "points"])
        for date in sorted(snapshot_dates):
            for pid, rank in sorted(ranks.items(), key=lambda kv: kv[1]):
                w.writerow([date.strftime("%Y%m%d"), rank, pid, 10000 // rank])

    for ev in events:
        code = SLAM_CODES[ev.tournament]
        stem = f"{ev.year}-{code}"
        match_rows = []
        point_rows = []
        draws = [(1100 + i, "M") for i in range(ev.n_men)] + [(2100 + i, "W") for i in range(ev.n_women)]
        missing = set(range(ev.n_missing_placement))
        for k, (num, gender) in enumerate(draws):
            i, j = rng.choice(n_players, size=2, replace=False)
            (p1, f1, l1), (p2, f2, l2) = players[i], players[j]
            r1 = ranks.get(p1, n_players + 50)
            r2 = ranks.get(p2, n_players + 50)
            match_id = f"{stem}-{num}"
            rows = simulate_match(rng, match_id, ev.tournament, ev.year, r1, r2, params,
                                  best_of=5 if gender == "M" else 3)
            if k in missing:
                landed = [r for r in rows if r["ServeWidth"]]
                landed[len(landed) // 2]["ServeWidth"] = ""
            point_rows.extend(rows)
            match_rows.append([match_id, ev.year, code, num, f"{f1} {l1}", f"{f2} {l2}", "Complete",
                               1 + int(sum(r["SetWinner"] == 2 for r in rows) > sum(r["SetWinner"] == 1 for r in rows)),
                               "Men's Singles" if gender == "M" else "Women's Singles", "R1"])
        with open(out / f"{stem}-matches.csv", "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["match_id", "year", "slam", "match_num", "player1", "player2", "status",
                        "winner", "event_name", "round"])
            w.writerows(match_rows)
        cols = [col for _, col, _, _ in POINT_COLUMNS]
        with open(out / f"{stem}-points.csv", "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(cols)
            for r in point_rows:
                w.writerow([r[c] for c in cols])
    return out
