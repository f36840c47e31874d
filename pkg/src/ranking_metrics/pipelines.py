"""CSV ingestion and the two end-to-end studies.

* Portfolio ranking: equal-weight portfolios from a return panel scored by
  a list of metric keys and ranked per metric.
* Climate resilience: mean-centred losses aggregated by zone and ranked by
  a kinked-utility certainty equivalent.

File layouts
------------
returns   ``date,TICKER1,TICKER2,...`` one row per date, decimal simple returns
losses    ``country,YEAR1,YEAR2,...`` one row per country, nonnegative
zones     ``country,zone``
groups    ``portfolio_name,ticker`` (equal weights within a portfolio)
"""

from __future__ import annotations

import csv
import logging
import math
import os
import re
from dataclasses import dataclass, field

import numpy as np

from .bibliometric import build_profile
from .keys import parse_metric_key
from .metrics import MetricValue, r_certainty_equiv
from .risk import UtilityFn
from .scenarios import ScenarioDist, quantile

log = logging.getLogger(__name__)

FLOAT_FMT = ".12g"


class IngestionError(ValueError):
    """Malformed input file; the message carries file, row and column."""


@dataclass
class IngestionReport:
    path: str
    rows_read: int = 0
    rows_dropped: int = 0
    dropped_labels: list = field(default_factory=list)
    excluded_columns: list = field(default_factory=list)


@dataclass
class ReturnPanel:
    dates: list
    tickers: list
    returns: np.ndarray  # [date x asset]
    return_kind: str = "simple"

    def __post_init__(self):
        self.returns = np.asarray(self.returns, dtype=float)
        if self.returns.shape != (len(self.dates), len(self.tickers)):
            raise ValueError("return matrix does not match the date/ticker labels")

    def columns(self, tickers):
        idx = [self.tickers.index(t) for t in tickers]
        return self.returns[:, idx]


@dataclass
class LossPanel:
    countries: list
    years: list
    losses: np.ndarray  # [country x year]

    def __post_init__(self):
        self.losses = np.asarray(self.losses, dtype=float)
        if self.losses.shape != (len(self.countries), len(self.years)):
            raise ValueError("loss matrix does not match the country/year labels")
        if (self.losses < 0).any():
            raise ValueError("losses must be nonnegative")


def fmt(v) -> str:
    """Fixed 12-significant-digit rendering used in every output file."""
    v = float(v)
    if math.isinf(v):
        return "inf" if v > 0 else "-inf"
    return format(v, FLOAT_FMT)


def _read_rows(path):
    try:
        with open(path, newline="") as fh:
            return list(csv.reader(fh))
    except OSError as exc:
        raise IngestionError(f"{path}: cannot read ({exc.strerror})") from None


def _wide_table(path, first_col):
    """Parse ``first_col,label1,label2,...``; blanks become NaN."""
    rows = _read_rows(path)
    rows = [r for r in rows if any(c.strip() for c in r)]
    if not rows:
        raise IngestionError(f"{path}: empty file")
    header = [h.strip() for h in rows[0]]
    if len(header) < 2 or header[0].lower() != first_col:
        raise IngestionError(
            f"{path}: row 1: malformed header, expected '{first_col},<label>,...'")
    labels = header[1:]
    seen = set()
    for j, lab in enumerate(labels, start=2):
        if not lab:
            raise IngestionError(f"{path}: row 1, column {j}: empty label")
        if lab in seen:
            raise IngestionError(f"{path}: row 1, column {j}: duplicate label {lab!r}")
        seen.add(lab)
    keys, data = [], []
    for i, row in enumerate(rows[1:], start=2):
        if len(row) != len(header):
            raise IngestionError(
                f"{path}: row {i}: expected {len(header)} fields, got {len(row)}")
        vals = []
        for j, cell in enumerate(row[1:], start=2):
            cell = cell.strip()
            if not cell:
                vals.append(math.nan)
                continue
            try:
                v = float(cell)
            except ValueError:
                raise IngestionError(
                    f"{path}: row {i}, column {j} ({labels[j - 2]}): "
                    f"non-numeric cell {cell!r}") from None
            if not math.isfinite(v):
                raise IngestionError(f"{path}: row {i}, column {j}: non-finite value {cell!r}")
            vals.append(v)
        keys.append(row[0].strip())
        data.append(vals)
    return labels, keys, np.array(data, dtype=float).reshape(len(keys), len(labels))


def _drop_gaps(path, labels, keys, mat):
    rep = IngestionReport(str(path), rows_read=len(keys))
    if mat.size:
        empty = np.isnan(mat).all(axis=0)
        rep.excluded_columns = [lab for lab, e in zip(labels, empty) if e]
        labels = [lab for lab, e in zip(labels, empty) if not e]
        mat = mat[:, ~empty]
    gap = np.isnan(mat).any(axis=1)
    rep.rows_dropped = int(gap.sum())
    rep.dropped_labels = [k for k, g in zip(keys, gap) if g]
    keys = [k for k, g in zip(keys, gap) if not g]
    mat = mat[~gap]
    if rep.rows_dropped or rep.excluded_columns:
        log.info("%s: dropped %d row(s), excluded %s", path, rep.rows_dropped,
                 rep.excluded_columns)
    return labels, keys, mat, rep


def load_returns(path):
    """Read a returns panel; returns ``(ReturnPanel, IngestionReport)``.

    Rows with a blank cell are dropped and counted; columns that are blank
    throughout are excluded first.
    """
    tickers, dates, mat = _wide_table(path, "date")
    tickers, dates, mat, rep = _drop_gaps(path, tickers, dates, mat)
    if not dates or not tickers:
        raise IngestionError(f"{path}: no complete rows left after dropping gaps")
    return ReturnPanel(dates, tickers, mat), rep


def load_losses(path):
    """Read a loss panel; returns ``(LossPanel, IngestionReport)``."""
    years, countries, mat = _wide_table(path, "country")
    if len(set(countries)) != len(countries):
        dup = next(c for c in countries if countries.count(c) > 1)
        raise IngestionError(f"{path}: duplicate country {dup!r}")
    neg = np.argwhere(mat < 0)
    if neg.size:
        i, j = neg[0]
        raise IngestionError(f"{path}: row {i + 2}, column {j + 2}: negative loss")
    years, countries, mat, rep = _drop_gaps(path, years, countries, mat)
    if not countries or not years:
        raise IngestionError(f"{path}: no complete rows left after dropping gaps")
    return LossPanel(countries, years, mat), rep


def _pairs(path, header):
    out = []
    for i, row in enumerate(_read_rows(path), start=1):
        if not any(c.strip() for c in row):
            continue
        if len(row) != 2:
            raise IngestionError(f"{path}: row {i}: expected '{','.join(header)}'")
        a, b = row[0].strip(), row[1].strip()
        if i == 1 and [a.lower(), b.lower()] == header:
            continue
        if not a or not b:
            raise IngestionError(f"{path}: row {i}: empty field")
        out.append((i, a, b))
    return out


def load_zone_map(path) -> dict:
    """``country -> zone`` from a two-column CSV."""
    zm = {}
    for i, country, zone in _pairs(path, ["country", "zone"]):
        if country in zm and zm[country] != zone:
            raise IngestionError(f"{path}: row {i}: country {country!r} mapped twice")
        zm[country] = zone
    return zm


def load_groups(path) -> dict:
    """``portfolio -> [tickers]`` in file order."""
    groups: dict = {}
    for i, name, ticker in _pairs(path, ["portfolio_name", "ticker"]):
        members = groups.setdefault(name, [])
        if ticker in members:
            raise IngestionError(f"{path}: row {i}: ticker {ticker!r} repeated in {name!r}")
        members.append(ticker)
    return groups


# ---------------------------------------------------------------------------
# climate study
# ---------------------------------------------------------------------------


def mean_center_losses(p: LossPanel) -> np.ndarray:
    """Resilience scores ``Y = -(L - grand mean)`` per country and year."""
    L = p.losses
    return -(L - L.mean())


def aggregate_zones(resilience, countries, zone_map: dict, zone_weights=None) -> dict:
    """Sum country scores within each zone into an equal-weight yearly dist.

    ``zone_weights`` optionally scales each zone's series (default off).
    """
    Y = np.asarray(resilience, dtype=float)
    missing = [c for c in countries if c not in zone_map]
    if missing:
        raise ValueError(f"countries without a zone: {missing}")
    zones: dict = {}
    for row, c in zip(Y, countries):
        z = zone_map[c]
        zones[z] = zones[z] + row if z in zones else row.copy()
    out = {}
    for z in sorted(zones):
        series = zones[z] * (zone_weights.get(z, 1.0) if zone_weights else 1.0)
        out[z] = ScenarioDist(series)
    return out


def climate_ce(dist: ScenarioDist, theta_q: float = 0.75, m: float = 0.1) -> MetricValue:
    """Certainty equivalent with the kink at the dist's ``theta_q``-quantile."""
    theta = quantile(dist, theta_q)
    return r_certainty_equiv(dist, UtilityFn.piecewise_linear(theta, m))


CLIMATE_DEFAULT = ["ce:plinear:0.75q:0.1"]


def climate_study(losses: LossPanel, zone_map: dict, metrics=CLIMATE_DEFAULT,
                  zone_weights=None):
    """Leaderboard rows for zones under each metric key."""
    Y = mean_center_losses(losses)
    zones = aggregate_zones(Y, losses.countries, zone_map, zone_weights)
    pooled = ScenarioDist(np.concatenate([d.raw_outcomes for d in zones.values()]))
    table = {}
    for key in metrics:
        metric = parse_metric_key(key, pooled=pooled)
        if metric.domain == "profile":
            raise ValueError(f"metric {key!r} needs asset profiles, not zone series")
        table[key] = {z: metric(d) for z, d in zones.items()}
    return leaderboard(table)


# ---------------------------------------------------------------------------
# portfolio study
# ---------------------------------------------------------------------------


def dense_rank(values: dict) -> dict:
    """Rank 1 for the largest value; ties share a rank, no gaps."""
    distinct = sorted(set(values.values()), reverse=True)
    pos = {v: i + 1 for i, v in enumerate(distinct)}
    return {k: pos[v] for k, v in values.items()}


def leaderboard(table: dict) -> list:
    """Rows ``(entity, metric, value, rank)`` from ``{metric: {entity: value}}``."""
    rows = []
    for key, vals in table.items():
        nums = {e: float(v) for e, v in vals.items()}
        ranks = dense_rank(nums)
        for e in sorted(nums, key=lambda e: (ranks[e], e)):
            rows.append((e, key, nums[e], ranks[e]))
    return rows


def portfolio_series(panel: ReturnPanel, groups: dict) -> dict:
    """Equal-weight return series per portfolio."""
    out = {}
    for name, tickers in groups.items():
        if not tickers:
            raise ValueError(f"portfolio {name!r} is empty")
        unknown = [t for t in tickers if t not in panel.tickers]
        if unknown:
            raise ValueError(f"portfolio {name!r} references unknown tickers {unknown}")
        out[name] = panel.columns(tickers).mean(axis=1)
    return out


def rank_portfolios(panel: ReturnPanel, groups: dict, metrics) -> list:
    """Score every portfolio under every metric key and rank per metric.

    Profile metrics use per-asset expected returns with equal weights and a
    benchmark shared by all portfolios.  Two-step Lambda keys without a
    threshold take it from the pooled returns of all portfolios.
    """
    series = portfolio_series(panel, groups)
    pooled = ScenarioDist(np.concatenate([series[n] for n in groups]))
    names = list(groups)
    profiles = None
    table = {}
    for key in metrics:
        metric = parse_metric_key(key, pooled=pooled)
        if metric.domain == "profile":
            if profiles is None:
                mus = [panel.columns(groups[n]).mean(axis=0) for n in names]
                wts = [np.full(len(groups[n]), 1.0 / len(groups[n])) for n in names]
                profiles = dict(zip(names, build_profile(mus, wts)))
            table[key] = {n: metric(profiles[n]) for n in names}
        else:
            table[key] = {n: metric(ScenarioDist(series[n])) for n in names}
    return leaderboard(table)


# ---------------------------------------------------------------------------
# output
# ---------------------------------------------------------------------------


def write_leaderboard(rows, path):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["entity", "metric", "value", "rank"])
        for e, key, v, rank in rows:
            w.writerow([e, key, fmt(v), rank])


def plot_filename(key: str) -> str:
    return "plot_" + re.sub(r"[^A-Za-z0-9_.-]+", "_", key) + ".csv"


def write_plot_data(rows, outdir) -> list:
    """One ``entity,value`` CSV per metric, sorted by descending value."""
    paths = []
    by_metric: dict = {}
    for e, key, v, rank in rows:
        by_metric.setdefault(key, []).append((rank, e, v))
    for key, items in by_metric.items():
        path = os.path.join(outdir, plot_filename(key))
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["entity", "value"])
            for _, e, v in sorted(items):
                w.writerow([e, fmt(v)])
        paths.append(path)
    return paths
