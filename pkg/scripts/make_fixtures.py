#!/usr/bin/env python3
"""Regenerate the bundled test fixtures under tests/data.

- points20/: one men's match cut to its first 20 points (scoreboard replay
  and swap checks)
- fixture3/: three men's singles matches plus one women's match, rankings,
  a player directory and a run config for the end-to-end pipeline
"""
import argparse
import csv
from pathlib import Path

import numpy as np

from pointwinner.ingest import POINT_COLUMNS
from pointwinner.synth import Event, simulate_match, write_corpus

ROOT = Path(__file__).resolve().parents[1] / "tests" / "data"

FIXTURE3_CONFIG = """\
# three-match fixture; k and min_matches are shrunk so the split is possible
data_dir = .
tournaments = Wimbledon
years = 2019
seed = 7
k = 2
min_matches = 3
search_budget = 2
params.forest.n_trees = 10
params.gbt.rounds = 20
params.adaboost.rounds = 10
params.logistic.epochs = 5
search.gbt.rounds = int 5 20
search.gbt.eta = loguniform 0.05 0.3
search.gbt.max_depth = int 2 4
"""


def write_points20(dest):
    dest.mkdir(parents=True, exist_ok=True)
    rng = np.random.default_rng(20)
    rows = simulate_match(rng, "2019-wimbledon-1101", "Wimbledon", 2019, 12, 40, max_points=20)
    cols = [col for _, col, _, _ in POINT_COLUMNS]
    with open(dest / "2019-wimbledon-points.csv", "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(cols)
        for r in rows:
            w.writerow([r[c] for c in cols])
    with open(dest / "2019-wimbledon-matches.csv", "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["match_id", "year", "slam", "match_num", "player1", "player2", "status",
                    "winner", "event_name", "round"])
        w.writerow(["2019-wimbledon-1101", 2019, "wimbledon", 1101, "Alex Player000",
                    "Bruno Player001", "Complete", 1, "Men's Singles", "R1"])


def main():
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("--out", type=Path, default=ROOT)
    args = p.parse_args()
    write_points20(args.out / "points20")
    f3 = args.out / "fixture3"
    write_corpus(f3, [Event("Wimbledon", 2019, n_men=3, n_women=1)], seed=3, n_players=16)
    (f3 / "run.cfg").write_text(FIXTURE3_CONFIG)
    print(f"fixtures written under {args.out}")


if __name__ == "__main__":
    main()
