"""Command-line entry point: ``ranking-metrics {rank,climate,optimize,verify}``.

Exit status: 0 success, 1 invalid input or configuration, 2 a must-hold
property suite was violated.
"""

from __future__ import annotations

import argparse
import csv
import json
import logging
import os
import sys

from . import pipelines as pl
from .axioms import DistSampler, verify_builtins
from .keys import parse_metric_key
from .optimize import maximize_metric
from .scenarios import ScenarioDist

EXIT_OK, EXIT_INVALID, EXIT_SUITE = 0, 1, 2

DEFAULT_RANK_METRICS = "glr,omega,raroc:cvar:0.05,lvar:two_step:0.55:0.65,h,h2,halpha:0.5,w"
DEFAULT_OPT_METRIC = "raroc:tcvar:0.05"

log = logging.getLogger("ranking_metrics")


class _Parser(argparse.ArgumentParser):
    # argparse exits with 2 on bad usage; 2 is reserved for suite failures
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_INVALID, f"{self.prog}: error: {message}\n")


def _positive_int(s):
    v = int(s)
    if v < 1:
        raise argparse.ArgumentTypeError(f"expected a positive integer, got {s!r}")
    return v


def _nonneg_int(s):
    v = int(s)
    if v < 0:
        raise argparse.ArgumentTypeError(f"expected a nonnegative integer, got {s!r}")
    return v


def _positive_float(s):
    v = float(s)
    if not v > 0:
        raise argparse.ArgumentTypeError(f"expected a positive number, got {s!r}")
    return v


def _keys(s):
    return [k.strip() for k in s.split(",") if k.strip()]


def build_parser():
    ap = _Parser(prog="ranking-metrics", description=__doc__.splitlines()[0])
    ap.add_argument("-v", "--verbose", action="store_true")
    sub = ap.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("rank", help="rank equal-weight portfolios from a returns panel")
    p.add_argument("--input", required=True, help="returns CSV (date,TICKER...)")
    p.add_argument("--groups", required=True, help="portfolio_name,ticker CSV")
    p.add_argument("--metrics", type=_keys, default=_keys(DEFAULT_RANK_METRICS))
    p.add_argument("--out", required=True)

    p = sub.add_parser("climate", help="rank zones by resilience certainty equivalent")
    p.add_argument("--input", required=True, help="losses CSV (country,YEAR...)")
    p.add_argument("--zones", required=True, help="country,zone CSV")
    p.add_argument("--metrics", type=_keys, default=list(pl.CLIMATE_DEFAULT))
    p.add_argument("--out", required=True)

    p = sub.add_parser("optimize", help="metric-maximising weights over all assets")
    p.add_argument("--input", required=True, help="returns CSV (date,TICKER...)")
    p.add_argument("--metric", action="append", default=None,
                   help=f"metric key, repeatable (default {DEFAULT_OPT_METRIC})")
    p.add_argument("--starts", type=_positive_int, default=100)
    p.add_argument("--seed", type=_nonneg_int, default=0)
    p.add_argument("--tol", type=_positive_float, default=1e-9)
    p.add_argument("--out", required=True)

    p = sub.add_parser("verify", help="run the axiom suites on every built-in metric")
    p.add_argument("--seed", type=_nonneg_int, action="append", default=None,
                   help="repeatable; default 1")
    p.add_argument("--trials", type=_positive_int, default=10_000)
    p.add_argument("--out", default=None)
    return ap


def _outdir(path):
    os.makedirs(path, exist_ok=True)
    return path


def _number(v):
    s = pl.fmt(v)
    return s if s in ("inf", "-inf") else float(s)


def cmd_rank(args):
    panel, rep = pl.load_returns(args.input)
    groups = pl.load_groups(args.groups)
    for k in args.metrics:
        parse_metric_key(k)
    rows = pl.rank_portfolios(panel, groups, args.metrics)
    out = _outdir(args.out)
    pl.write_leaderboard(rows, os.path.join(out, "leaderboard.csv"))
    pl.write_plot_data(rows, out)
    print(f"ranked {len(groups)} portfolio(s) on {len(args.metrics)} metric(s); "
          f"{rep.rows_dropped} row(s) dropped, returns are {panel.return_kind}")
    return EXIT_OK


def cmd_climate(args):
    losses, rep = pl.load_losses(args.input)
    zones = pl.load_zone_map(args.zones)
    for k in args.metrics:
        parse_metric_key(k)
    rows = pl.climate_study(losses, zones, args.metrics)
    out = _outdir(args.out)
    pl.write_leaderboard(rows, os.path.join(out, "climate_leaderboard.csv"))
    pl.write_plot_data(rows, out)
    for e, key, v, rank in rows:
        print(f"{rank:>3}  {e:<16} {key:<24} {pl.fmt(v)}")
    return EXIT_OK


def cmd_optimize(args):
    panel, rep = pl.load_returns(args.input)
    keys = args.metric or [DEFAULT_OPT_METRIC]
    pooled = ScenarioDist(panel.returns.ravel())
    metrics = [parse_metric_key(k, pooled=pooled) for k in keys]
    out = _outdir(args.out)
    for key, metric in zip(keys, metrics):
        res = maximize_metric(panel.returns, metric, n_starts=args.starts,
                              seed=args.seed, tol=args.tol)
        meta = {k: (_number(v) if isinstance(v, float) else v)
                for k, v in res.metadata.items()}
        doc = {
            "metric": key,
            "tickers": panel.tickers,
            "weights": [_number(w) for w in res.best_weights.weights],
            "value": _number(res.best_value.value),
            "provenance": res.best_value.provenance,
            "n_starts": res.n_starts,
            "n_converged": res.n_converged,
            "ties_averaged": res.ties_averaged,
            "metadata": {**meta, "return_kind": panel.return_kind,
                         "shared_configuration": True},
        }
        path = os.path.join(out, "optimize_" + pl.plot_filename(key)[5:-4] + ".json")
        with open(path, "w") as fh:
            json.dump(doc, fh, indent=2, sort_keys=True)
            fh.write("\n")
        print(f"{key:<24} value={pl.fmt(res.best_value.value)} "
              f"weights={[pl.fmt(w) for w in res.best_weights.weights]}")
    return EXIT_OK


def cmd_verify(args):
    seeds = args.seed or [1]
    must, info = verify_builtins(args.trials, seeds=seeds, sampler=DistSampler())
    for r in must:
        print(r)
    print("informational (falsification):")
    for r in info:
        print(r)
    if args.out:
        out = _outdir(args.out)
        with open(os.path.join(out, "property_reports.csv"), "w", newline="") as fh:
            fields = list(must[0].row()) + ["must_hold"]
            w = csv.DictWriter(fh, fieldnames=fields, lineterminator="\n")
            w.writeheader()
            for r, flag in [(r, True) for r in must] + [(r, False) for r in info]:
                row = r.row()
                row["worst_violation"] = pl.fmt(row["worst_violation"])
                w.writerow({**row, "must_hold": flag})
        found = [r.counterexample for r in info if r.counterexample]
        with open(os.path.join(out, "counterexamples.json"), "w") as fh:
            json.dump(found, fh, indent=2, sort_keys=True)
            fh.write("\n")
    failed = [r for r in must if not r.passed]
    if failed:
        print(f"{len(failed)} must-hold suite(s) violated", file=sys.stderr)
        return EXIT_SUITE
    return EXIT_OK


COMMANDS = {"rank": cmd_rank, "climate": cmd_climate,
            "optimize": cmd_optimize, "verify": cmd_verify}


def main(argv=None):
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return COMMANDS[args.command](args)
    except (ValueError, OSError) as exc:  # key, ingestion and shape errors
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID


if __name__ == "__main__":
    sys.exit(main())
