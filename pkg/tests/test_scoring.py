import hypothesis.strategies as st
from hypothesis import given

from pointwinner.scoring import (break_point_pending, court_side, game_finished, game_token,
                                 score_ordinal, set_finished, tiebreak_games)


def test_ordinals_follow_token_order():
    assert [score_ordinal(t) for t in ("0", "15", "30", "40", "AD")] == [0, 1, 2, 3, 4]


def test_tiebreak_scores_are_counts():
    assert score_ordinal("7", tiebreak=True) == 7


def test_game_tokens():
    assert game_token(0, 0) == "0"
    assert game_token(2, 1) == "30"
    assert game_token(3, 3) == "40"
    assert game_token(5, 4) == "AD"
    assert game_token(4, 5) == "40"


@given(st.integers(0, 30), st.integers(0, 30))
def test_game_needs_two_clear(a, b):
    if game_finished(a, b):
        assert max(a, b) >= 4 and abs(a - b) >= 2


def test_final_set_rules():
    assert tiebreak_games("Wimbledon", 2018, 5) is None
    assert tiebreak_games("Wimbledon", 2019, 5) == 12
    assert tiebreak_games("US Open", 2016, 5) == 6
    assert tiebreak_games("Wimbledon", 2016, 3) == 6


def test_set_end():
    assert set_finished(6, 4, 6)
    assert not set_finished(6, 5, 6)
    assert set_finished(7, 6, 6)
    assert not set_finished(7, 6, None)
    assert set_finished(13, 12, 12)


@given(st.integers(0, 40))
def test_courts_alternate(n):
    assert court_side(n) != court_side(n + 1)
    assert court_side(0) == "deuce"


def test_break_points():
    assert break_point_pending(2, 3, False)   # 30-40
    assert break_point_pending(3, 4, False)   # 40-AD
    assert not break_point_pending(3, 3, False)
    assert not break_point_pending(0, 3, True)
