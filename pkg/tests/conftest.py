from pathlib import Path

import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from pointwinner import ingest, synth

DATA = Path(__file__).parent / "data"
FIXTURE3 = DATA / "fixture3"
POINTS20 = DATA / "points20"

settings.register_profile("default", deadline=None,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("default")


def load_dir(root, scope=ingest.STUDY_SCOPE):
    points = [p for f in sorted(root.glob("*-points.csv")) for p in ingest.parse_points_file(f)]
    metas = [m for f in sorted(root.glob("*-matches.csv")) for m in ingest.parse_matches_file(f)]
    rankings = sorted(root.glob("atp_rankings_*.csv"))
    players = root / "atp_players.csv"
    table = ingest.parse_rankings(rankings, players if players.exists() else None) if rankings else None
    return ingest.assemble_dataset(points, metas, table, scope)


@pytest.fixture(scope="session")
def dataset3():
    return load_dir(FIXTURE3)


@pytest.fixture(scope="session")
def match20():
    return load_dir(POINTS20).matches[0]


@pytest.fixture(scope="session")
def corpus(tmp_path_factory):
    """A 24-match simulated corpus over two events."""
    root = tmp_path_factory.mktemp("corpus")
    synth.write_corpus(root, [synth.Event("Wimbledon", 2018, n_men=12, n_women=2, n_missing_placement=1),
                              synth.Event("US Open", 2019, n_men=13)], seed=11)
    return load_dir(root)


def learnable(n=100, d=4, seed=0, noise=0.1):
    """Labels from a noisy linear rule on the first two features."""
    rng = np.random.default_rng(seed)
    X = rng.normal(size=(n, d))
    y = ((X[:, 0] + 0.5 * X[:, 1] + noise * rng.normal(size=n)) > 0).astype(int)
    return X, y
