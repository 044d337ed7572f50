"""Tennis scoring rules shared by feature engineering, analysis and the simulator."""

# in-game tokens, ordinal encoded
SCORE_TOKENS = ("0", "15", "30", "40", "AD")
SCORE_ORDINAL = {tok: i for i, tok in enumerate(SCORE_TOKENS)}

TOURNAMENT_CODES = {
    "ausopen": "Australian Open",
    "frenchopen": "Roland Garros",
    "wimbledon": "Wimbledon",
    "usopen": "US Open",
}

DEFAULT_SURFACE = {
    "Australian Open": "Hard",
    "Roland Garros": "Clay",
    "Wimbledon": "Grass",
    "US Open": "Hard",
}


def tiebreak_games(tournament, year, set_no, best_of=5):
    """Games-all score at which a tiebreak is played in this set, or None.

    Final-set rules for the slams in scope: Wimbledon played advantage final
    sets until 2018 and a tiebreak at 12-12 from 2019; the US Open always plays
    a tiebreak at 6-6.
    """
    if set_no < best_of:
        return 6
    if tournament == "Wimbledon":
        return 12 if year >= 2019 else None
    if tournament in ("Australian Open", "Roland Garros"):
        if tournament == "Australian Open" and year >= 2019:
            return 6
        return None
    return 6


def score_ordinal(token, tiebreak=False):
    """Encode a score token: 0-4 ordinal in a standard game, point count in a tiebreak."""
    token = str(token).strip()
    if tiebreak:
        return int(token)
    try:
        return SCORE_ORDINAL[token]
    except KeyError:
        raise ValueError(f"unknown score token {token!r}") from None


def game_token(points_won, opp_points_won):
    """Score token for one side of a standard game given point counts."""
    if points_won >= 3 and opp_points_won >= 3:
        if points_won == opp_points_won:
            return "40"
        return "AD" if points_won > opp_points_won else "40"
    return SCORE_TOKENS[min(points_won, 3)]


def game_finished(a, b, tiebreak=False):
    """True when a side has won the game (or tiebreak) with point counts a, b."""
    target = 7 if tiebreak else 4
    return max(a, b) >= target and abs(a - b) >= 2


def set_finished(a, b, tb_at):
    if tb_at is not None and a + b == 2 * tb_at + 1 and max(a, b) == tb_at + 1:
        return True
    return max(a, b) >= 6 and abs(a - b) >= 2


def court_side(points_played_in_game):
    """Court served into: an even count of points already played in the game -> deuce."""
    return "deuce" if points_played_in_game % 2 == 0 else "AD"


def break_point_pending(server_ord, returner_ord, tiebreak):
    """Returner is one point away from winning a standard game."""
    if tiebreak:
        return False
    return returner_ord == 4 or (returner_ord == 3 and server_ord <= 2)
