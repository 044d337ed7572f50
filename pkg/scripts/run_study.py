"""Full study over the public data: descriptive stats, CV for every family and
serve, tuned boosted trees on held-out matches, and the report bundle.

    POINTWINNER_DATA_DIR=/path/to/tennis_slam_pointbypoint python3 scripts/run_study.py --out runs/study

The data directory needs the YYYY-{usopen,wimbledon}-{points,matches}.csv files
plus atp_rankings_*.csv and atp_players.csv from the ATP repository.
"""
import argparse
import dataclasses
import sys
import time

from pointwinner import cli, evaluation, models


def main(argv=None):
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("--config", help="key = value config file")
    p.add_argument("--out", default="runs/study")
    p.add_argument("--data-dir")
    p.add_argument("--seed", type=int)
    p.add_argument("--families", default=",".join(f for f in models.FAMILIES))
    p.add_argument("--skip-tune", action="store_true")
    args = p.parse_args(argv)
    ns = argparse.Namespace(config=args.config, out=args.out, data_dir=args.data_dir, seed=args.seed,
                            serve=None, model=None)
    cfg = cli.load_config(ns)

    t0 = time.perf_counter()
    cli.cmd_ingest(cfg)
    print(f"ingest {time.perf_counter() - t0:.1f}s")
    cli.cmd_prepare(cfg)

    table = [evaluation.SUMMARY_HEADER]
    for serve in cli.SERVES:
        for family in args.families.split(","):
            t = time.perf_counter()
            report = cli.cmd_train(dataclasses.replace(cfg, model=family, serve=serve))
            table.append(report.summary_row(f"cv_{family}_serve{serve}"))
            print(f"  {family} serve {serve}: {time.perf_counter() - t:.1f}s")
        if not args.skip_tune:
            tuned = dataclasses.replace(cfg, model="gbt", serve=serve)
            cli.cmd_tune(tuned)
            report = cli.cmd_evaluate(tuned)
            table.append(report.summary_row(f"test_gbt_tuned_serve{serve}"))
    cli.cmd_report(cfg)
    print("\n".join(table))
    print(f"total {time.perf_counter() - t0:.1f}s")
    return 0


if __name__ == "__main__":
    sys.exit(main())
