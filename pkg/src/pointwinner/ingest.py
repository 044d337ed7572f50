"""Parsing and merging of the public Grand Slam point-by-point files.

Three inputs are combined: the per-slam ``*-points.csv`` files, the matching
``*-matches.csv`` metadata files and the ATP ranking snapshots plus player
directory. The result is a :class:`MergedDataset` restricted to the men's
singles matches in scope, with every excluded match logged with a reason.
"""
from __future__ import annotations

import csv
import datetime as dt
import io
import logging
import re
import unicodedata
import warnings
from bisect import bisect_right
from dataclasses import dataclass, field, fields, replace
from pathlib import Path

from .scoring import DEFAULT_SURFACE, TOURNAMENT_CODES

log = logging.getLogger(__name__)

SERVE_WIDTHS = ("B", "BC", "BW", "C", "W")
SERVE_DEPTHS = ("CTL", "NCTL")
RETURN_DEPTHS = ("D", "ND")

EVENT_FLAGS = (
    "Ace", "Winner", "DoubleFault", "UnfErr", "NetPoint", "NetPointWon",
    "BreakPoint", "BreakPointWon", "BreakPointMissed",
)

_MISSING_TOKENS = {"", "na", "nan", "null", "none"}


class IngestError(Exception):
    pass


class MissingColumn(IngestError):
    def __init__(self, name):
        super().__init__(f"missing required column {name!r}")
        self.name = name


class MalformedRow(IngestError):
    def __init__(self, line, detail=""):
        msg = f"malformed row at line {line}"
        super().__init__(f"{msg}: {detail}" if detail else msg)
        self.line = line


class UnknownTournament(IngestError):
    pass


class EmptyScope(IngestError):
    pass


class OrphanPoints(IngestError):
    def __init__(self, match_id):
        super().__init__(f"points reference unknown match {match_id!r}")
        self.match_id = match_id


def _snake(name):
    return re.sub(r"(?<=[a-z0-9])(?=[A-Z])", "_", name).lower()


# (attribute, column, kind, required downstream)
POINT_COLUMNS = [
    ("match_id", "match_id", str, True),
    ("elapsed_time", "ElapsedTime", str, False),
    ("set_no", "SetNo", int, True),
    ("p1_games_won", "P1GamesWon", int, True),
    ("p2_games_won", "P2GamesWon", int, True),
    ("set_winner", "SetWinner", int, True),
    ("game_no", "GameNo", int, True),
    ("game_winner", "GameWinner", int, True),
    ("point_number", "PointNumber", int, True),
    ("point_winner", "PointWinner", int, True),
    ("point_server", "PointServer", int, True),
    ("speed_kmh", "Speed_KMH", float, False),
    ("p1_score", "P1Score", str, True),
    ("p2_score", "P2Score", str, True),
    ("p1_points_won", "P1PointsWon", int, True),
    ("p2_points_won", "P2PointsWon", int, True),
]
for _flag in EVENT_FLAGS:
    for _p in ("P1", "P2"):
        POINT_COLUMNS.append((f"{_p.lower()}_{_snake(_flag)}", f"{_p}{_flag}", int, True))
POINT_COLUMNS += [
    ("speed_mph", "Speed_MPH", float, False),
    ("serve_indicator", "Serveindicator", int, False),
    ("serve_number", "ServeNumber", int, True),
    ("winner_type", "WinnerType", str, False),
    ("winner_shot_type", "WinnerShotType", str, False),
    ("p1_distance_run", "P1DistanceRun", float, False),
    ("p2_distance_run", "P2DistanceRun", float, False),
    ("rally_count", "RallyCount", int, False),
    ("serve_width", "ServeWidth", str, True),
    ("serve_depth", "ServeDepth", str, True),
    ("return_depth", "ReturnDepth", str, True),
]
COLUMN_OF = {attr: col for attr, col, _, _ in POINT_COLUMNS}


def _flag_attr(player, flag):
    return f"p{player}_{_snake(flag)}"


@dataclass(slots=True, frozen=True)
class RawPoint:
    """One row of a point-by-point file; ``None`` marks a missing cell."""

    match_id: str
    elapsed_time: str | None = None
    set_no: int | None = None
    p1_games_won: int | None = None
    p2_games_won: int | None = None
    set_winner: int | None = None
    game_no: int | None = None
    game_winner: int | None = None
    point_number: int | None = None
    point_winner: int | None = None
    point_server: int | None = None
    speed_kmh: float | None = None
    p1_score: str | None = None
    p2_score: str | None = None
    p1_points_won: int | None = None
    p2_points_won: int | None = None
    p1_ace: int | None = None
    p2_ace: int | None = None
    p1_winner: int | None = None
    p2_winner: int | None = None
    p1_double_fault: int | None = None
    p2_double_fault: int | None = None
    p1_unf_err: int | None = None
    p2_unf_err: int | None = None
    p1_net_point: int | None = None
    p2_net_point: int | None = None
    p1_net_point_won: int | None = None
    p2_net_point_won: int | None = None
    p1_break_point: int | None = None
    p2_break_point: int | None = None
    p1_break_point_won: int | None = None
    p2_break_point_won: int | None = None
    p1_break_point_missed: int | None = None
    p2_break_point_missed: int | None = None
    speed_mph: float | None = None
    serve_indicator: int | None = None
    serve_number: int | None = None
    winner_type: str | None = None
    winner_shot_type: str | None = None
    p1_distance_run: float | None = None
    p2_distance_run: float | None = None
    rally_count: int | None = None
    serve_width: str | None = None
    serve_depth: str | None = None
    return_depth: str | None = None
    # unknown columns, plus verbatim text for cells whose typed value does not
    # format back to the source cell
    extra: dict = field(default_factory=dict, compare=False, hash=False)

    @property
    def double_fault(self):
        return bool(self.p1_double_fault or self.p2_double_fault)

    @property
    def placement_present(self):
        return self.serve_width in SERVE_WIDTHS and self.serve_depth in SERVE_DEPTHS

    @property
    def serve_landed(self):
        """A first or second serve went in, so a placement should have been recorded."""
        return self.serve_number in (1, 2) and not self.double_fault

    def flag(self, player, name):
        return getattr(self, _flag_attr(player, name))

    def to_cells(self, columns=None):
        """Source cells for the given raw point-file columns (all known columns by default)."""
        columns = columns or [col for _, col, _, _ in POINT_COLUMNS]
        attr_of = {col: attr for attr, col, _, _ in POINT_COLUMNS}
        out = {}
        for col in columns:
            if col in self.extra:
                out[col] = self.extra[col]
                continue
            if col not in attr_of:
                out[col] = ""
                continue
            out[col] = _format_cell(getattr(self, attr_of[col]))
        return out


def _format_cell(value):
    if value is None:
        return ""
    if isinstance(value, float):
        return str(int(value)) if value.is_integer() else repr(value)
    return str(value)


def _parse_cell(text, kind):
    """Typed value, or (None, verbatim) when the cell is missing or unparseable."""
    stripped = text.strip()
    if stripped.lower() in _MISSING_TOKENS:
        return None, (text if text != "" else None)
    if kind is str:
        return stripped, (text if stripped != text else None)
    try:
        value = kind(stripped)
    except ValueError:
        try:
            as_float = float(stripped)
        except ValueError:
            return None, text
        if kind is int and as_float.is_integer():
            value = int(as_float)
        else:
            return None, text
    return value, (text if _format_cell(value) != text else None)


@dataclass(frozen=True)
class Dialect:
    delimiter: str = ","
    encoding: str = "utf-8"


def _read_text(source, encoding):
    if isinstance(source, (str, Path)):
        return Path(source).read_bytes().decode(encoding)
    data = source.read()
    return data.decode(encoding) if isinstance(data, bytes) else data


def _resolve_header(header, wanted):
    """Map canonical column names to header positions, case-insensitively."""
    by_key = {}
    for i, name in enumerate(header):
        by_key.setdefault(name.strip().lower(), i)
    return {col: by_key[col.lower()] for col in wanted if col.lower() in by_key}


def parse_points_file(source, dialect=Dialect()):
    """Parse a point-by-point CSV into a list of :class:`RawPoint`."""
    text = _read_text(source, dialect.encoding)
    reader = csv.reader(io.StringIO(text, newline=""), delimiter=dialect.delimiter)
    try:
        header = next(reader)
    except StopIteration:
        raise MalformedRow(1, "empty file, header row required") from None
    positions = _resolve_header(header, COLUMN_OF.values())
    for attr, col, _, required in POINT_COLUMNS:
        if required and col not in positions:
            raise MissingColumn(col)
    known = set(positions.values())
    spill = [(i, name) for i, name in enumerate(header) if i not in known]

    points = []
    for row in reader:
        line = reader.line_num
        if not row:
            continue
        if len(row) != len(header):
            raise MalformedRow(line, f"expected {len(header)} cells, got {len(row)}")
        values = {}
        extra = {}
        for attr, col, kind, _ in POINT_COLUMNS:
            if col not in positions:
                continue
            cell = row[positions[col]]
            value, verbatim = _parse_cell(cell, kind)
            values[attr] = value
            if verbatim is not None:
                extra[col] = verbatim
        for i, name in spill:
            extra[name] = row[i]
        if values.get("match_id") is None:
            raise MalformedRow(line, "empty match_id")
        points.append(RawPoint(**values, extra=extra))
    return points


def write_points_file(points, dest, columns=None, delimiter=","):
    """Inverse of :func:`parse_points_file` for the raw point-file columns."""
    columns = columns or [col for _, col, _, _ in POINT_COLUMNS]
    buf = io.StringIO()
    writer = csv.writer(buf, delimiter=delimiter, lineterminator="\n")
    writer.writerow(columns)
    for p in points:
        cells = p.to_cells(columns)
        writer.writerow([cells[c] for c in columns])
    Path(dest).write_text(buf.getvalue(), encoding="utf-8")


# --- match metadata --------------------------------------------------------

# first Monday of play; used for the rank-at-match-time lookup
START_DATES = {
    ("Wimbledon", 2016): dt.date(2016, 6, 27),
    ("Wimbledon", 2017): dt.date(2017, 7, 3),
    ("Wimbledon", 2018): dt.date(2018, 7, 2),
    ("Wimbledon", 2019): dt.date(2019, 7, 1),
    ("US Open", 2016): dt.date(2016, 8, 29),
    ("US Open", 2017): dt.date(2017, 8, 28),
    ("US Open", 2018): dt.date(2018, 8, 27),
    ("US Open", 2019): dt.date(2019, 8, 26),
    ("US Open", 2020): dt.date(2020, 8, 31),
}
_FALLBACK_MONTH = {"Australian Open": 1, "Roland Garros": 5, "Wimbledon": 7, "US Open": 8}


def tournament_start(tournament, year):
    try:
        return START_DATES[(tournament, year)]
    except KeyError:
        return dt.date(year, _FALLBACK_MONTH[tournament], 1)


@dataclass(frozen=True)
class MatchMeta:
    match_id: str
    tournament: str
    year: int
    surface: str
    player1_name: str
    player2_name: str
    gender: str  # "M", "W" or "X" (anything else: juniors, doubles, mixed)
    match_num: int | None = None
    start_date: dt.date | None = None
    draw: str = ""

    @property
    def date(self):
        return self.start_date or tournament_start(self.tournament, self.year)


_ID_RE = re.compile(r"^(?P<year>\d{4})-(?P<slam>[a-z]+)-(?P<num>\d+)$")


def _tournament_name(code):
    key = re.sub(r"[^a-z]", "", code.lower())
    if key in TOURNAMENT_CODES:
        return TOURNAMENT_CODES[key]
    for name in TOURNAMENT_CODES.values():
        if re.sub(r"[^a-z]", "", name.lower()) == key:
            return name
    raise UnknownTournament(f"unrecognized slam code {code!r}")


def _gender(event_name, match_num):
    event = (event_name or "").lower()
    if "singles" in event and not any(k in event for k in ("boys", "girls", "wheelchair", "mixed")):
        if "women" in event or "ladies" in event:
            return "W"
        if "men" in event or "gentlemen" in event:
            return "M"
    if event:
        return "X"
    if match_num is not None:
        return {1: "M", 2: "W"}.get(match_num // 1000, "X")
    return "X"


def parse_matches_file(source, dialect=Dialect()):
    """Parse a ``*-matches.csv`` metadata file into :class:`MatchMeta` records.

    Tournament, year and match number come from explicit columns when present
    and from the ``YYYY-slam-NNNN`` identifier otherwise. Men's singles are the
    1xxx match numbers unless an ``event_name`` column says otherwise.
    """
    text = _read_text(source, dialect.encoding)
    reader = csv.reader(io.StringIO(text, newline=""), delimiter=dialect.delimiter)
    try:
        header = next(reader)
    except StopIteration:
        raise MalformedRow(1, "empty file, header row required") from None
    pos = _resolve_header(header, ["match_id", "year", "slam", "match_num", "player1",
                                   "player2", "event_name", "surface", "start_date"])
    for col in ("match_id", "player1", "player2"):
        if col not in pos:
            raise MissingColumn(col)

    def cell(row, col):
        return row[pos[col]].strip() if col in pos else ""

    metas = []
    for row in reader:
        line = reader.line_num
        if not row:
            continue
        if len(row) != len(header):
            raise MalformedRow(line, f"expected {len(header)} cells, got {len(row)}")
        match_id = cell(row, "match_id")
        m = _ID_RE.match(match_id)
        try:
            year = int(cell(row, "year") or (m and m["year"]) or "")
            code = cell(row, "slam") or (m and m["slam"]) or ""
            num_text = cell(row, "match_num") or (m and m["num"]) or ""
            match_num = int(num_text) if num_text else None
        except ValueError as exc:
            raise MalformedRow(line, str(exc)) from None
        tournament = _tournament_name(code)
        start = cell(row, "start_date")
        metas.append(MatchMeta(
            match_id=match_id,
            tournament=tournament,
            year=year,
            surface=cell(row, "surface") or DEFAULT_SURFACE[tournament],
            player1_name=cell(row, "player1"),
            player2_name=cell(row, "player2"),
            gender=_gender(cell(row, "event_name"), match_num),
            match_num=match_num,
            start_date=_parse_date(start) if start else None,
            draw=cell(row, "event_name"),
        ))
    return metas


# --- rankings --------------------------------------------------------------

def _parse_date(text):
    text = text.strip()
    if re.fullmatch(r"\d{8}", text):
        return dt.date(int(text[:4]), int(text[4:6]), int(text[6:]))
    return dt.date.fromisoformat(text)


def normalize_name(name):
    """Accent-, case- and punctuation-insensitive key for player names."""
    text = unicodedata.normalize("NFKD", name)
    text = "".join(ch for ch in text if not unicodedata.combining(ch)).lower()
    text = re.sub(r"[^a-z0-9]+", " ", text)
    return " ".join(text.split())


class RankingTable:
    """Ranking snapshots queried with the latest-on-or-before rule."""

    def __init__(self, entries=(), players=None, aliases=None):
        self._by_player = {}
        best = {}
        for date, player, rank, points in entries:
            if rank < 1:
                raise ValueError(f"rank must be >= 1, got {rank} for {player} on {date}")
            key = (date, player)
            if key in best:
                warnings.warn(f"duplicate ranking entry for player {player} on {date}; "
                              f"keeping the better rank", stacklevel=2)
                if rank >= best[key][0]:
                    continue
            best[key] = (rank, points)
        for (date, player), (rank, points) in sorted(best.items()):
            self._by_player.setdefault(player, ([], [], []))
            dates, ranks, pts = self._by_player[player]
            dates.append(date)
            ranks.append(rank)
            pts.append(points)
        self.players = dict(players or {})
        self._ids_by_name = {}
        for pid, name in sorted(self.players.items()):
            self._ids_by_name.setdefault(normalize_name(name), pid)
        for name, pid in (aliases or {}).items():
            self._ids_by_name[normalize_name(name)] = pid

    def __len__(self):
        return sum(len(v[0]) for v in self._by_player.values())

    def player_id(self, name):
        return self._ids_by_name.get(normalize_name(name))

    def lookup(self, player, date):
        """Rank of ``player`` (id or name) on ``date``; ``None`` means not ranked."""
        if isinstance(player, str) and player not in self._by_player:
            player = self.player_id(player)
        if player is None or player not in self._by_player:
            return None
        dates, ranks, _ = self._by_player[player]
        i = bisect_right(dates, date)
        return ranks[i - 1] if i else None

    @property
    def max_rank(self):
        return max((max(r) for _, r, _ in self._by_player.values()), default=0)


def parse_rankings(sources, players=None, aliases=None, dialect=Dialect()):
    """Build a :class:`RankingTable` from ranking snapshot files and a player directory.

    Ranking files hold ``ranking_date, rank, player, points`` rows, with or
    without a header. The directory holds ``player_id, name_first, name_last``.
    """
    entries = []
    for src in sources:
        text = _read_text(src, dialect.encoding)
        rows = csv.reader(io.StringIO(text, newline=""), delimiter=dialect.delimiter)
        for i, row in enumerate(rows, start=1):
            if not row or (i == 1 and not row[0].strip().isdigit()):
                continue
            if len(row) < 3:
                raise MalformedRow(i, f"expected >= 3 cells, got {len(row)}")
            try:
                date = _parse_date(row[0])
                rank = int(row[1])
                player = int(row[2])
                points = int(float(row[3])) if len(row) > 3 and row[3].strip() else None
            except ValueError as exc:
                raise MalformedRow(i, str(exc)) from None
            entries.append((date, player, rank, points))
    directory = {}
    if players is not None:
        text = _read_text(players, dialect.encoding)
        rows = csv.reader(io.StringIO(text, newline=""), delimiter=dialect.delimiter)
        for i, row in enumerate(rows, start=1):
            if not row or (i == 1 and not row[0].strip().isdigit()):
                continue
            if len(row) < 3:
                raise MalformedRow(i, f"expected >= 3 cells, got {len(row)}")
            directory[int(row[0])] = f"{row[1].strip()} {row[2].strip()}".strip()
    return RankingTable(entries, directory, aliases)


# --- assembly --------------------------------------------------------------

@dataclass(frozen=True)
class Scope:
    tournaments: frozenset = frozenset({"Wimbledon", "US Open"})
    years: frozenset = frozenset(range(2016, 2021))
    gender: str = "M"


STUDY_SCOPE = Scope()


@dataclass(frozen=True)
class Match:
    meta: MatchMeta
    points: tuple
    p1_rank: int
    p2_rank: int
    p1_ranked: bool = True
    p2_ranked: bool = True

    @property
    def match_id(self):
        return self.meta.match_id


@dataclass(frozen=True)
class MergedDataset:
    matches: tuple
    exclusions: tuple = ()  # (match_id, reason) pairs

    @property
    def n_points(self):
        return sum(len(m.points) for m in self.matches)

    def match(self, match_id):
        for m in self.matches:
            if m.match_id == match_id:
                return m
        raise KeyError(match_id)

    def all_points(self):
        return [p for m in self.matches for p in m.points]


def _point_order(p):
    return (p.set_no, p.game_no, p.point_number)


def assemble_dataset(points, matches, rankings, scope=STUDY_SCOPE):
    """Merge parsed points, metadata and rankings into the in-scope dataset.

    Whole matches are dropped when they are out of scope, have no points or
    have any landed serve without a recorded placement. Points whose winner is
    0 are dropped individually.
    """
    metas = {}
    for m in matches:
        if m.match_id in metas:
            raise IngestError(f"duplicate match metadata for {m.match_id!r}")
        metas[m.match_id] = m

    by_match = {}
    for p in points:
        if p.match_id not in metas:
            raise OrphanPoints(p.match_id)
        by_match.setdefault(p.match_id, []).append(p)

    exclusions = []
    kept = []
    for match_id in sorted(metas):
        meta = metas[match_id]
        if meta.gender != scope.gender:
            exclusions.append((match_id, "not_mens_singles" if scope.gender == "M" else "wrong_draw"))
            continue
        if meta.tournament not in scope.tournaments:
            exclusions.append((match_id, "tournament_out_of_scope"))
            continue
        if meta.year not in scope.years:
            exclusions.append((match_id, "year_out_of_scope"))
            continue
        pts = [p for p in by_match.get(match_id, []) if p.point_winner in (1, 2)]
        if not pts:
            exclusions.append((match_id, "no_points"))
            continue
        if any(None in _point_order(p) for p in pts):
            exclusions.append((match_id, "unordered_points"))
            continue
        pts.sort(key=_point_order)
        if any(_point_order(a) >= _point_order(b) for a, b in zip(pts, pts[1:])):
            exclusions.append((match_id, "unordered_points"))
            continue
        if any(p.serve_landed and not p.placement_present for p in pts):
            exclusions.append((match_id, "missing_serve_placement"))
            continue
        kept.append((meta, tuple(pts)))

    if not kept:
        raise EmptyScope("no matches survive the scope filter")

    ranks = []
    for meta, _ in kept:
        pair = []
        for name in (meta.player1_name, meta.player2_name):
            pair.append(rankings.lookup(name, meta.date) if rankings is not None else None)
        ranks.append(pair)
    observed = [r for pair in ranks for r in pair if r is not None]
    sentinel = (max(observed) if observed else 0) + 1

    out = []
    for (meta, pts), (r1, r2) in zip(kept, ranks):
        out.append(Match(
            meta=meta, points=pts,
            p1_rank=r1 if r1 is not None else sentinel,
            p2_rank=r2 if r2 is not None else sentinel,
            p1_ranked=r1 is not None, p2_ranked=r2 is not None,
        ))
    for match_id, reason in exclusions:
        log.debug("excluded %s: %s", match_id, reason)
    return MergedDataset(matches=tuple(out), exclusions=tuple(exclusions))


def reassemble(dataset, scope=STUDY_SCOPE):
    """Run :func:`assemble_dataset` on an already merged dataset, keeping its ranks."""
    ranks = _FixedRanks({m.match_id: (m.p1_rank if m.p1_ranked else None,
                                       m.p2_rank if m.p2_ranked else None)
                         for m in dataset.matches},
                        {m.match_id: m.meta for m in dataset.matches})
    merged = assemble_dataset(dataset.all_points(), [m.meta for m in dataset.matches], ranks, scope)
    # the sentinel is recomputed from the same observed ranks, so it is stable
    return replace(merged, exclusions=dataset.exclusions + merged.exclusions)


class _FixedRanks:
    def __init__(self, ranks, metas):
        self._lookup = {}
        for match_id, (r1, r2) in ranks.items():
            meta = metas[match_id]
            self._lookup[(meta.player1_name, meta.date)] = r1
            self._lookup[(meta.player2_name, meta.date)] = r2

    def lookup(self, player, date):
        return self._lookup.get((player, date))


# --- dataset file ----------------------------------------------------------

DATASET_FORMAT = "pointwinner-dataset"
DATASET_VERSION = 1
_MATCH_COLUMNS = [
    ("tournament", str), ("year", int), ("surface", str), ("player1", str), ("player2", str),
    ("gender", str), ("match_num", int), ("start_date", str), ("draw", str),
    ("p1_rank", int), ("p2_rank", int), ("p1_ranked", int), ("p2_ranked", int),
]


def _clean(text):
    return str(text).replace("\t", " ").replace("\n", " ")


def write_dataset(dataset, dest, header=None):
    """Write the merged dataset as a typed, tab-separated columnar text file.

    Layout: ``#``-prefixed key/value header lines, one ``#types`` line naming the
    type of every column, the column header, then one row per point. Matches
    appear in ``match_id`` order with points in play order.
    """
    point_cols = [col for _, col, _, _ in POINT_COLUMNS]
    type_name = {str: "str", int: "int", float: "float"}
    types = ["str"] + [type_name[k] for _, k in _MATCH_COLUMNS] + \
        [type_name[k] for _, _, k, _ in POINT_COLUMNS[1:]]
    lines = [f"# format: {DATASET_FORMAT} v{DATASET_VERSION}"]
    for key, value in (header or {}).items():
        lines.append(f"# {key}: {value}")
    lines.append(f"# matches: {len(dataset.matches)}")
    lines.append(f"# points: {dataset.n_points}")
    lines.append("#types\t" + "\t".join(types))
    lines.append("\t".join(["match_id"] + [c for c, _ in _MATCH_COLUMNS] + point_cols[1:]))
    for m in dataset.matches:
        meta = m.meta
        mcells = [
            meta.tournament, str(meta.year), meta.surface, meta.player1_name, meta.player2_name,
            meta.gender, "" if meta.match_num is None else str(meta.match_num),
            meta.start_date.isoformat() if meta.start_date else "", meta.draw,
            str(m.p1_rank), str(m.p2_rank), str(int(m.p1_ranked)), str(int(m.p2_ranked)),
        ]
        for p in m.points:
            cells = p.to_cells(point_cols[1:])
            lines.append("\t".join([meta.match_id] + [_clean(c) for c in mcells] +
                                   [_clean(cells[c]) for c in point_cols[1:]]))
    Path(dest).write_text("\n".join(lines) + "\n", encoding="utf-8")


def read_dataset(path):
    """Load a dataset written by :func:`write_dataset`; returns ``(dataset, header)``."""
    header = {}
    body = []
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            line = line.rstrip("\n")
            if line.startswith("#types"):
                continue
            if line.startswith("# "):
                key, _, value = line[2:].partition(": ")
                header[key] = value
                continue
            body.append(line)
    if header.get("format") != f"{DATASET_FORMAT} v{DATASET_VERSION}":
        raise IngestError(f"{path}: not a {DATASET_FORMAT} v{DATASET_VERSION} file")
    cols = body[0].split("\t")
    n_meta = 1 + len(_MATCH_COLUMNS)
    point_header = ",".join(["match_id"] + cols[n_meta:])
    point_rows = []
    matches = {}
    for row in body[1:]:
        cells = row.split("\t")
        mid = cells[0]
        if mid not in matches:
            mc = dict(zip([c for c, _ in _MATCH_COLUMNS], cells[1:n_meta]))
            meta = MatchMeta(
                match_id=mid, tournament=mc["tournament"], year=int(mc["year"]),
                surface=mc["surface"], player1_name=mc["player1"], player2_name=mc["player2"],
                gender=mc["gender"], match_num=int(mc["match_num"]) if mc["match_num"] else None,
                start_date=dt.date.fromisoformat(mc["start_date"]) if mc["start_date"] else None,
                draw=mc["draw"],
            )
            matches[mid] = (meta, [int(mc["p1_rank"]), int(mc["p2_rank"]),
                                   mc["p1_ranked"] == "1", mc["p2_ranked"] == "1"])
        point_rows.append([mid] + cells[n_meta:])
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(point_header.split(","))
    w.writerows(point_rows)
    points = parse_points_file(io.StringIO(buf.getvalue()))
    grouped = {}
    for p in points:
        grouped.setdefault(p.match_id, []).append(p)
    out = []
    for mid, (meta, (r1, r2, k1, k2)) in matches.items():
        out.append(Match(meta=meta, points=tuple(grouped.get(mid, ())),
                         p1_rank=r1, p2_rank=r2, p1_ranked=k1, p2_ranked=k2))
    return MergedDataset(matches=tuple(out)), header


def write_exclusions(dataset, dest):
    lines = [f"{mid}\t{reason}" for mid, reason in dataset.exclusions]
    Path(dest).write_text("".join(line + "\n" for line in lines), encoding="utf-8")


def point_fields():
    return [f.name for f in fields(RawPoint) if f.name != "extra"]
