"""Descriptive serve statistics and the figure artifacts built from them."""
from __future__ import annotations

from dataclasses import dataclass
from xml.sax.saxutils import escape

import numpy as np
import pandas as pd

from .ingest import SERVE_DEPTHS, SERVE_WIDTHS
from .scoring import court_side

# serve widths counted as "close to the sideline"
WIDE_CELLS = ("W", "BW")
COURTS = ("AD", "deuce")


class EmptySelection(ValueError):
    pass


def serve_table(dataset):
    """One row per point: serve number, landed flag, court side, placement, outcome.

    The court comes from the points already played in the current game
    (even -> deuce, odd -> AD), counted over the match's ordered points.
    """
    recs = []
    for match in sorted(dataset.matches, key=lambda m: m.match_id):
        game, played = None, 0
        for p in match.points:
            key = (p.set_no, p.game_no)
            if key != game:
                game, played = key, 0
            recs.append((match.match_id, p.serve_number, int(p.serve_landed), court_side(played),
                         p.serve_width, p.serve_depth, int(p.point_winner == p.point_server)))
            played += 1
    return pd.DataFrame(recs, columns=["match_id", "serve_number", "landed", "court", "width",
                                       "depth", "server_won"])


@dataclass(frozen=True)
class PlacementGrid:
    serve_number: int
    court: str  # "AD", "deuce" or "both"
    cells: dict  # (width, depth) -> percentage
    n: int

    def share(self, widths):
        return sum(v for (w, _), v in self.cells.items() if w in widths)

    def wide_share(self, widths=WIDE_CELLS):
        return self.share(widths)

    def as_array(self):
        return np.array([[self.cells[(w, d)] for d in SERVE_DEPTHS] for w in SERVE_WIDTHS])


def placement_grid(table, serve_number, court=None):
    """Percentage of landed serves in each (width, depth) cell; ``court=None`` pools both sides."""
    sel = table[(table["serve_number"] == serve_number) & (table["landed"] == 1)
                & table["width"].isin(SERVE_WIDTHS) & table["depth"].isin(SERVE_DEPTHS)]
    if court is not None:
        sel = sel[sel["court"] == court]
    n = len(sel)
    if n == 0:
        raise EmptySelection(f"no landed serves for serve {serve_number}, court {court}")
    counts = sel.groupby(["width", "depth"]).size()
    cells = {(w, d): 100.0 * counts.get((w, d), 0) / n for w in SERVE_WIDTHS for d in SERVE_DEPTHS}
    return PlacementGrid(serve_number, court or "both", cells, n)


@dataclass(frozen=True)
class WinRateSummary:
    p_first: float
    p_second: float
    p_overall: float
    n_first: int
    n_second: int
    n_overall: int


def _win_rates(serve_number, landed, won):
    serve_number = np.asarray(serve_number)
    landed = np.asarray(landed).astype(bool)
    won = np.asarray(won).astype(int)
    if len(won) == 0:
        raise EmptySelection("no points")
    first = landed & (serve_number == 1)
    second = landed & (serve_number == 2)
    if not first.any() or not second.any():
        raise EmptySelection("need landed first and second serves")
    return WinRateSummary(
        p_first=float(won[first].mean()), p_second=float(won[second].mean()),
        p_overall=float(won.mean()), n_first=int(first.sum()), n_second=int(second.sum()),
        n_overall=len(won),
    )


def win_rate_summary(points):
    """Server win rates on landed first serves, landed second serves, and all points."""
    points = list(points)
    return _win_rates([p.serve_number for p in points], [p.serve_landed for p in points],
                      [p.point_winner == p.point_server for p in points])


def win_rate_from_rows(rows):
    """The same summary from prepared server-perspective rows."""
    return _win_rates(rows["ServeNumber"].to_numpy(), rows["Eligible"].to_numpy(),
                      rows["label"].to_numpy())


def win_rate_table(summary):
    return ("serve\tpoints\tserver_win_pct\n"
            f"first\t{summary.n_first}\t{100 * summary.p_first:.1f}\n"
            f"second\t{summary.n_second}\t{100 * summary.p_second:.1f}\n"
            f"overall\t{summary.n_overall}\t{100 * summary.p_overall:.1f}\n")


def grid_table(grid):
    lines = [f"# serve {grid.serve_number} court {grid.court} n {grid.n}", "width\tdepth\tpct"]
    for w in SERVE_WIDTHS:
        for d in SERVE_DEPTHS:
            lines.append(f"{w}\t{d}\t{grid.cells[(w, d)]:.2f}")
    return "\n".join(lines) + "\n"


# --- SVG -------------------------------------------------------------------

def _shade(frac):
    """White to dark blue; frac in [0, 1]."""
    frac = min(max(frac, 0.0), 1.0)
    lo, hi = (247, 251, 255), (8, 48, 107)
    r, g, b = (round(a + (c - a) * frac) for a, c in zip(lo, hi))
    return f"#{r:02x}{g:02x}{b:02x}"


def _svg_open(width, height):
    return [f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" '
            f'viewBox="0 0 {width} {height}" font-family="sans-serif">',
            f'<rect x="0" y="0" width="{width}" height="{height}" fill="#ffffff"/>']


# left-to-right order from sideline to centre line
COURT_ORDER = ("W", "BW", "B", "BC", "C")


def render_court_heatmap(grid, title=None, cell_w=90, cell_h=80):
    """Quarter-court heatmap: widths across, depth rows (CTL nearest the service line on top).

    Shading is relative to the grid's largest cell; every cell carries its
    code and percentage.
    """
    pad, top = 20, 50
    width = 2 * pad + cell_w * len(COURT_ORDER)
    height = top + 2 * cell_h + 40
    vmax = max(grid.cells.values()) or 1.0
    out = _svg_open(width, height)
    title = title or f"Serve {grid.serve_number}, {grid.court} court (n={grid.n})"
    out.append(f'<text x="{width / 2:.1f}" y="28" text-anchor="middle" font-size="15">'
               f'{escape(title)}</text>')
    for j, w in enumerate(COURT_ORDER):
        for i, d in enumerate(SERVE_DEPTHS):
            v = grid.cells[(w, d)]
            x, y = pad + j * cell_w, top + i * cell_h
            frac = v / vmax
            ink = "#ffffff" if frac > 0.5 else "#000000"
            out.append(f'<rect x="{x}" y="{y}" width="{cell_w}" height="{cell_h}" '
                       f'fill="{_shade(frac)}" stroke="#333333" stroke-width="1"/>')
            out.append(f'<text x="{x + cell_w / 2:.1f}" y="{y + cell_h / 2 - 6:.1f}" '
                       f'text-anchor="middle" font-size="11" fill="{ink}">{w}/{d}</text>')
            out.append(f'<text x="{x + cell_w / 2:.1f}" y="{y + cell_h / 2 + 14:.1f}" '
                       f'text-anchor="middle" font-size="14" fill="{ink}">{v:.1f}%</text>')
    # court lines: sideline on the left, centre service line on the right
    base = top + 2 * cell_h
    out.append(f'<line x1="{pad}" y1="{top}" x2="{pad}" y2="{base}" stroke="#000000" stroke-width="3"/>')
    out.append(f'<line x1="{width - pad}" y1="{top}" x2="{width - pad}" y2="{base}" '
               f'stroke="#000000" stroke-width="3"/>')
    out.append(f'<line x1="{pad}" y1="{top}" x2="{width - pad}" y2="{top}" stroke="#000000" '
               f'stroke-width="3"/>')
    out.append(f'<text x="{pad}" y="{base + 22}" font-size="11">sideline</text>')
    out.append(f'<text x="{width - pad}" y="{base + 22}" text-anchor="end" font-size="11">'
               f'centre line</text>')
    out.append("</svg>")
    return "\n".join(out) + "\n"


def importance_report(importances, threshold=0.01):
    """Entries with share above ``threshold``, sorted descending (ties by name), plus a bar chart.

    Returns ``(entries, table_text, svg_text)``.
    """
    entries = sorted(((k, float(v)) for k, v in importances.items() if v > threshold),
                     key=lambda kv: (-kv[1], kv[0]))
    table = "feature\tgain_share\n" + "".join(f"{k}\t{v:.6f}\n" for k, v in entries)
    if not entries:
        table += f"# no feature above {threshold}\n"
    label_w, bar_w, row_h, pad = 220, 360, 22, 20
    height = 2 * pad + 30 + max(1, len(entries)) * row_h
    width = label_w + bar_w + 90
    out = _svg_open(width, height)
    out.append(f'<text x="{width / 2:.1f}" y="{pad + 8}" text-anchor="middle" font-size="14">'
               f'Feature importance (gain share &gt; {threshold})</text>')
    if not entries:
        out.append(f'<text x="{width / 2:.1f}" y="{pad + 40}" text-anchor="middle" font-size="12">'
                   'no feature above threshold</text>')
    vmax = entries[0][1] if entries else 1.0
    for i, (name, v) in enumerate(entries):
        y = pad + 30 + i * row_h
        length = bar_w * v / vmax
        out.append(f'<text x="{label_w - 6}" y="{y + 15}" text-anchor="end" font-size="11">'
                   f'{escape(name)}</text>')
        out.append(f'<rect x="{label_w}" y="{y + 3}" width="{length:.2f}" height="{row_h - 6}" '
                   f'fill="#3b6ea5"/>')
        out.append(f'<text x="{label_w + length + 4:.2f}" y="{y + 15}" font-size="11">{v:.3f}</text>')
    out.append("</svg>")
    return entries, table, "\n".join(out) + "\n"
