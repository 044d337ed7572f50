"""Command-line pipeline: ingest -> prepare -> train -> tune -> evaluate -> report.

Settings come from a ``key = value`` config file; command-line flags win.
Every artifact records the config hash, the seed and the feature schema
version. Exit codes: 0 success, 1 internal error, 2 usage or input error.

The default data directory is read from ``POINTWINNER_DATA_DIR``.
"""
from __future__ import annotations

import argparse
import hashlib
import io
import json
import logging
import os
import re
import sys
from dataclasses import dataclass, field, fields, replace
from pathlib import Path

import numpy as np
import pandas as pd

from . import analysis, evaluation, featureset, ingest, models
from .featureset import SCHEMA_VERSION, FeatureSchema, SplitPlan

log = logging.getLogger("pointwinner")

DATA_DIR_ENV = "POINTWINNER_DATA_DIR"
SERVES = (1, 2)


class UsageError(Exception):
    """Bad configuration or input; exit code 2."""


class LeakageDetected(UsageError):
    pass


# --- configuration ---------------------------------------------------------

def _parse_years(text):
    years = set()
    for part in re.split(r"[,\s]+", text.strip()):
        if not part:
            continue
        if "-" in part:
            a, b = part.split("-")
            years.update(range(int(a), int(b) + 1))
        else:
            years.add(int(part))
    return tuple(sorted(years))


def _parse_value(text):
    text = text.strip()
    if text.lower() in ("none", "null", ""):
        return None
    if text.lower() in ("true", "false"):
        return text.lower() == "true"
    for cast in (int, float):
        try:
            return cast(text)
        except ValueError:
            pass
    return text


def _parse_dist(text):
    kind, *args = text.split()
    kinds = {"uniform": evaluation.Uniform, "loguniform": evaluation.LogUniform,
             "int": evaluation.IntUniform, "choice": evaluation.Choice}
    if kind not in kinds:
        raise UsageError(f"unknown distribution {kind!r} (use {', '.join(kinds)})")
    if kind == "choice":
        return evaluation.Choice(tuple(_parse_value(a) for a in args))
    if len(args) != 2:
        raise UsageError(f"{kind} needs two bounds, got {text!r}")
    lo, hi = (_parse_value(a) for a in args)
    if lo > hi:
        raise UsageError(f"empty range in {text!r}")
    return kinds[kind](lo, hi)


@dataclass
class RunConfig:
    data_dir: str = ""
    out: str = "runs/default"
    tournaments: tuple = ("US Open", "Wimbledon")
    years: tuple = tuple(range(2016, 2021))
    gender: str = "M"
    seed: int = 0
    test_frac: float = 0.10
    train_frac: float = 0.80
    k: int = 10
    min_matches: int = 20
    model: str = "gbt"
    serve: int = 1
    params: dict = field(default_factory=dict)  # family -> {name: value}
    search_budget: int = 20
    search: dict = field(default_factory=dict)  # family -> {name: distribution text}
    wide_cells: tuple = analysis.WIDE_CELLS
    importance_threshold: float = 0.01
    n_jobs: int = 1

    def validate(self):
        if not 0 < self.test_frac < 1 or not 0 < self.train_frac < 1:
            raise UsageError("split ratios must lie in (0, 1)")
        if self.k < 2:
            raise UsageError("k must be >= 2")
        if self.model not in models.FAMILIES:
            raise UsageError(f"unknown model {self.model!r}")
        if self.serve not in SERVES:
            raise UsageError("serve must be 1 or 2")
        for family, p in self.params.items():
            try:
                models.resolve_params(family, p)
            except ValueError as exc:
                raise UsageError(str(exc)) from None
        return self

    def model_params(self, family=None):
        family = family or self.model
        p = dict(self.params.get(family, {}))
        if "seed" in models.DEFAULTS[family] and "seed" not in p:
            p["seed"] = self.seed
        return p

    def search_space(self, family=None):
        family = family or self.model
        if family == "baseline":
            raise UsageError("the baseline has no hyperparameters to tune")
        declared = self.search.get(family)
        dists = ({k: _parse_dist(v) for k, v in declared.items()} if declared
                 else dict(evaluation.SEARCH_SPACES[family]))
        return evaluation.SearchSpace(dists, budget=self.search_budget, seed=self.seed)

    def canonical(self):
        """Sorted ``key = value`` text of every setting that affects results."""
        lines = []
        for f in fields(self):
            if f.name in ("data_dir", "out", "n_jobs"):
                continue
            v = getattr(self, f.name)
            if isinstance(v, dict):
                for fam in sorted(v):
                    for name in sorted(v[fam]):
                        lines.append(f"{f.name}.{fam}.{name} = {v[fam][name]}")
            elif isinstance(v, tuple):
                lines.append(f"{f.name} = {', '.join(str(x) for x in v)}")
            else:
                lines.append(f"{f.name} = {v}")
        return "\n".join(lines) + "\n"

    @property
    def hash(self):
        return hashlib.sha256(self.canonical().encode()).hexdigest()[:16]

    @property
    def scope(self):
        return ingest.Scope(frozenset(self.tournaments), frozenset(self.years), self.gender)


_SIMPLE = {"data_dir": str, "out": str, "gender": str, "seed": int, "test_frac": float,
           "train_frac": float, "k": int, "min_matches": int, "model": str, "serve": int,
           "search_budget": int, "importance_threshold": float, "n_jobs": int}


def parse_config(text, base=None):
    """Apply ``key = value`` lines to ``base`` (defaults when omitted).

    Keys: the RunConfig field names, ``tournaments`` (comma list), ``years``
    (``2016-2020`` or a list), ``wide_cells``, ``params.<family>.<name>`` and
    ``search.<family>.<name> = <uniform|loguniform|int|choice> args``.
    """
    cfg = replace(base) if base else RunConfig()
    cfg.params = {k: dict(v) for k, v in cfg.params.items()}
    cfg.search = {k: dict(v) for k, v in cfg.search.items()}
    for n, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise UsageError(f"config line {n}: expected key = value")
        key, value = (s.strip() for s in line.split("=", 1))
        try:
            if key in _SIMPLE:
                setattr(cfg, key, _SIMPLE[key](value))
            elif key == "tournaments":
                cfg.tournaments = tuple(sorted(s.strip() for s in value.split(",") if s.strip()))
            elif key == "years":
                cfg.years = _parse_years(value)
            elif key == "wide_cells":
                cfg.wide_cells = tuple(s.strip() for s in value.split(",") if s.strip())
            elif key.startswith("params."):
                _, fam, name = key.split(".", 2)
                cfg.params.setdefault(fam, {})[name] = _parse_value(value)
            elif key.startswith("search."):
                _, fam, name = key.split(".", 2)
                _parse_dist(value)
                cfg.search.setdefault(fam, {})[name] = value
            else:
                raise UsageError(f"config line {n}: unknown key {key!r}")
        except ValueError as exc:
            raise UsageError(f"config line {n}: {exc}") from None
    return cfg


def load_config(args):
    cfg = RunConfig(data_dir=os.environ.get(DATA_DIR_ENV, ""))
    if args.config:
        path = Path(args.config)
        if not path.is_file():
            raise UsageError(f"config file not found: {path}")
        cfg = parse_config(path.read_text(), cfg)
        # relative data paths in a config file are relative to that file
        if cfg.data_dir and not Path(cfg.data_dir).is_absolute():
            cfg.data_dir = str((path.parent / cfg.data_dir).resolve())
    for name in ("seed", "out", "serve", "model", "data_dir"):
        value = getattr(args, name, None)
        if value is not None:
            setattr(cfg, name, value)
    return cfg.validate()


# --- artifacts -------------------------------------------------------------

def stamp(cfg):
    return {"config_hash": cfg.hash, "seed": cfg.seed, "schema_version": SCHEMA_VERSION}


def write_json(path, payload):
    Path(path).write_text(json.dumps(payload, indent=1, sort_keys=True) + "\n")


def _header_lines(cfg, **extra):
    items = {**stamp(cfg), **extra}
    return "".join(f"# {k}: {v}\n" for k, v in items.items())


def _out(cfg):
    out = Path(cfg.out)
    out.mkdir(parents=True, exist_ok=True)
    return out


def _need(path, stage):
    if not path.exists():
        raise UsageError(f"{path} not found; run `{stage}` first")
    return path


def _tag(family, serve, tuned=False):
    return f"{family}{'_tuned' if tuned else ''}_serve{serve}"


def _sha(path):
    return hashlib.sha256(Path(path).read_bytes()).hexdigest()[:16]


# --- ingest ----------------------------------------------------------------

_STEM = re.compile(r"^(?P<year>\d{4})-(?P<slam>[a-z]+)-(points|matches)\.csv$")


def _input_files(cfg):
    if not cfg.data_dir:
        raise UsageError(f"no data directory: set {DATA_DIR_ENV}, data_dir in the config, "
                         "or --data-dir")
    root = Path(cfg.data_dir)
    if not root.is_dir():
        raise UsageError(f"data directory not found: {root}")
    codes = {c for t in cfg.tournaments for c, name in ingest.TOURNAMENT_CODES.items() if name == t}

    def wanted(p):
        m = _STEM.match(p.name)
        return m is not None and int(m["year"]) in cfg.years and m["slam"] in codes

    points = sorted(p for p in root.glob("*-points.csv") if wanted(p))
    matches = sorted(p for p in root.glob("*-matches.csv") if wanted(p))
    if not points or not matches:
        raise UsageError(f"no in-scope *-points.csv / *-matches.csv files in {root}")
    rankings = sorted(root.glob("atp_rankings_*.csv"))
    players = root / "atp_players.csv"
    return points, matches, rankings, players if players.exists() else None


def load_inputs(cfg):
    """Parse and merge the raw files under the data directory."""
    points_files, match_files, ranking_files, players = _input_files(cfg)
    points = [p for f in points_files for p in ingest.parse_points_file(f)]
    metas = [m for f in match_files for m in ingest.parse_matches_file(f)]
    rankings = ingest.parse_rankings(ranking_files, players) if ranking_files else None
    if rankings is None:
        log.warning("no atp_rankings_*.csv files; every player is unranked")
    dataset = ingest.assemble_dataset(points, metas, rankings, cfg.scope)
    inputs = points_files + match_files + ranking_files + ([players] if players else [])
    return dataset, {f.name: _sha(f) for f in inputs}


def cmd_ingest(cfg):
    dataset, digests = load_inputs(cfg)
    out = _out(cfg)
    header = {**stamp(cfg), "inputs": json.dumps(digests, sort_keys=True)}
    ingest.write_dataset(dataset, out / "dataset.tsv", header)
    ingest.write_exclusions(dataset, out / "exclusions.log")
    print(f"{len(dataset.matches)} matches, {dataset.n_points} points "
          f"({len(dataset.exclusions)} matches excluded) -> {out / 'dataset.tsv'}")
    return dataset


# --- prepare ---------------------------------------------------------------

PREPARED_FORMAT = "pointwinner-prepared v1"


def write_prepared(rows, path, cfg, serve):
    buf = io.StringIO()
    rows.to_csv(buf, sep="\t", index=False, lineterminator="\n")
    Path(path).write_text(f"# format: {PREPARED_FORMAT}\n" + _header_lines(cfg, serve=serve)
                          + buf.getvalue())


def read_prepared(path):
    lines = Path(path).read_text().splitlines(keepends=True)
    if not lines or lines[0].strip() != f"# format: {PREPARED_FORMAT}":
        raise UsageError(f"{path}: not a {PREPARED_FORMAT} file")
    body = "".join(line for line in lines if not line.startswith("# "))
    return pd.read_csv(io.StringIO(body), sep="\t", keep_default_na=False, na_values=[""])


def cmd_prepare(cfg):
    out = _out(cfg)
    dataset, _ = ingest.read_dataset(_need(out / "dataset.tsv", "ingest"))
    rows = featureset.prepare(dataset, n_jobs=cfg.n_jobs)
    plan = featureset.make_split_plan(sorted({m.match_id for m in dataset.matches}), cfg.seed,
                                      cfg.test_frac, cfg.train_frac, cfg.k, cfg.min_matches)
    (out / "split_plan.txt").write_text(_header_lines(cfg) + plan.to_text())
    usable = featureset.prediction_rows(rows)
    dev_ids = set(plan.development)
    for serve, part in zip(SERVES, featureset.split_by_serve(usable)):
        write_prepared(part, out / f"prepared_serve{serve}.tsv", cfg, serve)
        schema = FeatureSchema.fit(part[part["match_id"].isin(dev_ids)])
        (out / f"schema_serve{serve}.txt").write_text(_header_lines(cfg, serve=serve) + schema.to_text())
        print(f"serve {serve}: {len(part)} rows, server win prior {part['label'].mean():.3f}, "
              f"{len(schema.columns)} encoded columns")
    print(f"{len(rows)} points, {len(rows) - len(usable)} without a landed serve; "
          f"split {len(plan.train)} train / {len(plan.validation)} validation / {len(plan.test)} test")
    return plan


def _load_plan(out):
    text = _need(out / "split_plan.txt", "prepare").read_text()
    return SplitPlan.from_text("".join(line + "\n" for line in text.splitlines() if not line.startswith("# ")
                                       or line.startswith("# split plan")))


def _load_rows(out, serve):
    return read_prepared(_need(out / f"prepared_serve{serve}.tsv", "prepare"))


# --- train / tune ----------------------------------------------------------

def fit_final(cfg, family, params, rows, plan, serve, tuned=False):
    """Refit on all train + validation rows and save the model with its schema."""
    dev = rows[rows["match_id"].isin(set(plan.development))]
    schema = FeatureSchema.fit(dev)
    model = models.fit(family, schema.transform(dev), dev["label"].to_numpy(), params)
    model.schema_fingerprint = schema.fingerprint
    meta = {**stamp(cfg), "serve": serve, "schema": schema.to_dict(), "split": plan.fingerprint,
            "train_match_ids": sorted(set(dev["match_id"])), "tuned": tuned}
    path = _out(cfg) / f"model_{_tag(family, serve, tuned)}.json"
    models.save_model(model, path, meta)
    return model, path


def _report_payload(cfg, report, serve, kind):
    return {**stamp(cfg), "kind": kind, "serve": serve, "report": json.loads(report.to_json())}


def cmd_train(cfg):
    out = _out(cfg)
    plan = _load_plan(out)
    rows = _load_rows(out, cfg.serve)
    params = cfg.model_params()
    report = evaluation.cross_validate(cfg.model, params, rows, plan)
    tag = _tag(cfg.model, cfg.serve)
    write_json(out / f"cv_{tag}.json", _report_payload(cfg, report, cfg.serve, "cross_validation"))
    _, path = fit_final(cfg, cfg.model, params, rows, plan, cfg.serve)
    print(evaluation.SUMMARY_HEADER)
    print(report.summary_row(tag))
    print(f"model -> {path}")
    return report


def cmd_tune(cfg):
    out = _out(cfg)
    if cfg.search_budget < 1:
        raise UsageError("search budget must be >= 1")
    plan = _load_plan(out)
    rows = _load_rows(out, cfg.serve)
    space = cfg.search_space()
    best, report, trials = evaluation.random_search(space, cfg.model, rows, plan)
    params = dict(best)
    if "seed" in models.DEFAULTS[cfg.model]:
        params.setdefault("seed", cfg.seed)
    tag = _tag(cfg.model, cfg.serve, tuned=True)
    (out / f"trials_{tag}.tsv").write_text(_header_lines(cfg, serve=cfg.serve)
                                           + evaluation.trial_log_text(trials))
    write_json(out / f"best_{tag}.json", {**stamp(cfg), "family": cfg.model, "serve": cfg.serve,
                                          "params": params, "mean": report.to_dict()["mean"]})
    write_json(out / f"cv_{tag}.json", _report_payload(cfg, report, cfg.serve, "cross_validation"))
    _, path = fit_final(cfg, cfg.model, params, rows, plan, cfg.serve, tuned=True)
    print(f"{len(trials)} trials; best {json.dumps(params, sort_keys=True)}")
    print(evaluation.SUMMARY_HEADER)
    print(report.summary_row(tag))
    print(f"model -> {path}")
    return params, report


# --- evaluate --------------------------------------------------------------

def check_leakage(eval_ids, train_ids):
    overlap = sorted(set(eval_ids) & set(train_ids))
    if overlap:
        raise LeakageDetected(f"{len(overlap)} evaluation matches were used in fitting, "
                              f"e.g. {overlap[0]}")


def evaluate_model(model, rows, match_ids):
    """Score ``model`` on the rows of ``match_ids`` after the leakage guard."""
    check_leakage(match_ids, model.meta.get("train_match_ids", []))
    sel = rows[rows["match_id"].isin(set(match_ids))]
    if len(sel) == 0:
        raise UsageError("no rows to evaluate")
    schema = FeatureSchema.from_dict(model.meta["schema"])
    proba = models.predict_proba(model, schema.transform(sel), schema.fingerprint)
    scores, cm = evaluation.evaluate_predictions(sel["label"].to_numpy(), proba)
    return evaluation.EvalReport(
        family=model.family, params=model.params, per_fold=[scores], mean=dict(scores),
        confusion=[vars(cm)], zero_division=[evaluation.degenerate_ratios(cm, 0)],
        train_match_ids=model.meta.get("train_match_ids", []),
    )


def _default_model_path(out, family, serve):
    tuned = out / f"model_{_tag(family, serve, True)}.json"
    return tuned if tuned.exists() else out / f"model_{_tag(family, serve)}.json"


def cmd_evaluate(cfg, model_file=None, split="test"):
    out = _out(cfg)
    path = Path(model_file) if model_file else _default_model_path(out, cfg.model, cfg.serve)
    model = models.load_model(_need(path, "train"))
    serve = model.meta.get("serve", cfg.serve)
    plan = _load_plan(out)
    rows = _load_rows(out, serve)
    ids = {"test": plan.test, "train": plan.train, "validation": plan.validation}[split]
    report = evaluate_model(model, rows, ids)
    report.split = plan.fingerprint
    report.seed = cfg.seed
    tag = path.stem.removeprefix("model_")
    write_json(out / f"test_{tag}.json", _report_payload(cfg, report, serve, f"held_out_{split}"))
    print(evaluation.SUMMARY_HEADER)
    print(report.summary_row(tag))
    return report


# --- report ----------------------------------------------------------------

def cmd_report(cfg):
    out = _out(cfg)
    dataset, _ = ingest.read_dataset(_need(out / "dataset.tsv", "ingest"))
    bundle = out / "report"
    bundle.mkdir(exist_ok=True)
    head = _header_lines(cfg)
    links = []

    summary = analysis.win_rate_summary(dataset.all_points())
    (bundle / "win_rates.tsv").write_text(head + analysis.win_rate_table(summary))
    links.append(("win_rates.tsv", "Server win rates"))

    table = analysis.serve_table(dataset)
    wide_lines = ["serve\tcourt\twide_cells\twide_pct\tn"]
    for serve in SERVES:
        for court in analysis.COURTS:
            grid = analysis.placement_grid(table, serve, court)
            stem = f"placement_serve{serve}_{court}"
            (bundle / f"{stem}.svg").write_text(analysis.render_court_heatmap(grid))
            (bundle / f"{stem}.tsv").write_text(head + analysis.grid_table(grid))
            wide_lines.append(f"{serve}\t{court}\t{','.join(cfg.wide_cells)}\t"
                              f"{grid.wide_share(cfg.wide_cells):.2f}\t{grid.n}")
            links.append((f"{stem}.svg", f"Placement, serve {serve}, {court} court"))
    (bundle / "wide_share.tsv").write_text(head + "\n".join(wide_lines) + "\n")
    links.append(("wide_share.tsv", "Share of serves near the sideline"))

    notices = []
    for serve in SERVES:
        path = _default_model_path(out, "gbt", serve)
        if not path.exists():
            notices.append(f"no boosted-tree model for serve {serve}; importance chart skipped")
            continue
        model = models.load_model(path)
        names = FeatureSchema.from_dict(model.meta["schema"]).columns
        try:
            shares = models.importance_gain(model, names)
        except models.NoSplits:
            shares = {}
        _, text, svg = analysis.importance_report(shares, cfg.importance_threshold)
        (bundle / f"importance_serve{serve}.tsv").write_text(head + text)
        (bundle / f"importance_serve{serve}.svg").write_text(svg)
        links.append((f"importance_serve{serve}.svg", f"Feature importance, serve {serve}"))

    rows = []
    for path in sorted(out.glob("cv_*.json")) + sorted(out.glob("test_*.json")):
        rep = evaluation.EvalReport(**json.loads(path.read_text())["report"])
        rep.mean = {k: float("nan") if v is None else v for k, v in rep.mean.items()}
        rows.append(rep.summary_row(path.stem))
    if rows:
        (bundle / "metrics.tsv").write_text(head + evaluation.SUMMARY_HEADER + "\n" + "\n".join(rows) + "\n")
        links.append(("metrics.tsv", "Model metrics (percent)"))

    for msg in notices:
        print(msg)
    html = ["<!DOCTYPE html>", "<html><head><meta charset=\"utf-8\"><title>pointwinner report</title>"
            "</head><body>", "<h1>pointwinner report</h1>",
            f"<p>config {cfg.hash}, seed {cfg.seed}, schema v{SCHEMA_VERSION}; "
            f"{len(dataset.matches)} matches, {dataset.n_points} points</p>", "<ul>"]
    html += [f'<li><a href="{href}">{title}</a></li>' for href, title in links]
    html.append("</ul>")
    html += [f"<p>{m}</p>" for m in notices]
    html += [f'<div><img src="{href}" alt="{title}"></div>' for href, title in links if href.endswith(".svg")]
    html.append("</body></html>")
    (bundle / "index.html").write_text("\n".join(html) + "\n")
    print(f"report -> {bundle / 'index.html'}")
    return bundle


# --- entry point -----------------------------------------------------------

def build_parser():
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="key = value config file")
    common.add_argument("--seed", type=int)
    common.add_argument("--out", help="output directory")
    common.add_argument("--serve", type=int, choices=SERVES)
    common.add_argument("--model", choices=models.FAMILIES)
    common.add_argument("--data-dir", dest="data_dir", help=f"raw data directory (default ${DATA_DIR_ENV})")
    common.add_argument("-v", "--verbose", action="store_true")
    p = argparse.ArgumentParser(prog="pointwinner", parents=[common],
                                description="Point-outcome prediction pipeline")
    sub = p.add_subparsers(dest="command", required=True)
    for name, help_text in [("ingest", "merge raw files into dataset.tsv"),
                            ("prepare", "build features, schema and split plan"),
                            ("train", "cross-validate and fit one model family"),
                            ("tune", "random search, then refit the winner"),
                            ("evaluate", "score a model on held-out matches"),
                            ("report", "figures and tables bundle")]:
        sp = sub.add_parser(name, parents=[common], help=help_text)
        if name == "evaluate":
            sp.add_argument("--model-file", help="model json (default: tuned, else trained)")
            sp.add_argument("--split", choices=("test", "train", "validation"), default="test")
    return p


def run(argv=None):
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    cfg = load_config(args)
    if args.command == "evaluate":
        return cmd_evaluate(cfg, args.model_file, args.split)
    return {"ingest": cmd_ingest, "prepare": cmd_prepare, "train": cmd_train, "tune": cmd_tune,
            "report": cmd_report}[args.command](cfg)


INPUT_ERRORS = (UsageError, FileNotFoundError, ingest.IngestError, featureset.FeatureError,
                models.SchemaMismatch)


def main(argv=None):
    try:
        run(argv)
    except SystemExit as exc:  # argparse
        return exc.code if isinstance(exc.code, int) else 2
    except INPUT_ERRORS as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except Exception as exc:  # noqa: BLE001
        log.exception("internal error")
        print(f"internal error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
