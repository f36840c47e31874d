"""Ranking metrics from performance-curve families (h-index and relatives).

A portfolio is summarised by a ranked profile ``X(1) >= X(2) >= ... >= X(N)``
of nonnegative asset scores, with ``X(p) = 0`` beyond ``N``.  A curve family
``f_x(p)`` states what the profile must reach at every rank to attain level
``x``; the metric is the largest integer level attained.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field

import numpy as np

from .metrics import MetricValue, RankingMetric

BENCHMARK_RTOL = 1e-9


class BenchmarkUndefinedError(ValueError):
    """No strictly positive weighted expected return to rescale by."""


@dataclass(frozen=True)
class RankedProfile:
    """Nonnegative scores sorted descending.

    Integer scores come out of :func:`build_profile`; real-valued profiles are
    accepted so that mixtures can be ranked before discretisation.
    """

    values: np.ndarray

    def __post_init__(self):
        v = np.asarray(self.values, dtype=float).ravel()
        if v.size == 0:
            raise ValueError("a profile needs at least one asset")
        if not (np.isfinite(v).all() and v.min() >= 0):
            raise ValueError("profile values must be finite and nonnegative")
        if (v[1:] > v[:-1]).any():
            raise ValueError("profile values must be sorted descending")
        v.flags.writeable = False
        object.__setattr__(self, "values", v)

    @classmethod
    def from_scores(cls, scores):
        """Sort arbitrary nonnegative asset scores into a profile."""
        return cls(np.sort(np.asarray(scores, dtype=float).ravel())[::-1])

    @property
    def n_assets(self):
        return self.values.size

    def __getitem__(self, p):
        """``X(p)`` for rank ``p >= 1``; zero beyond the last asset."""
        return float(self.values[p - 1]) if 1 <= p <= self.values.size else 0.0


@dataclass(frozen=True)
class PerfCurveFamily:
    """Level-indexed performance curves ``f_x(p)``.

    Built-ins (``h``, ``h2``, ``h_alpha``, ``w``) are supported on ``(0, x]``.
    A ``custom`` family is a table ``{level: {rank: value}}``, zero at ranks
    not listed and defined only at listed levels.
    """

    kind: str
    alpha: float = 1.0
    table: dict = field(default_factory=dict, compare=False)

    def __post_init__(self):
        if self.kind not in ("h", "h2", "h_alpha", "w", "custom"):
            raise ValueError(f"unknown curve family {self.kind!r}")
        if self.kind == "h_alpha" and not self.alpha > 0:
            raise ValueError("h_alpha needs alpha > 0")
        if self.kind == "custom":
            _check_custom_monotone(self.table)

    @classmethod
    def h(cls):
        return cls("h")

    @classmethod
    def h2(cls):
        return cls("h2")

    @classmethod
    def h_alpha(cls, alpha):
        return cls("h_alpha", float(alpha))

    @classmethod
    def w(cls):
        return cls("w")

    @classmethod
    def custom(cls, table):
        norm = {int(x): {int(p): float(v) for p, v in row.items()}
                for x, row in table.items()}
        return cls("custom", table=norm)

    @property
    def name(self):
        return f"h_alpha:{self.alpha:g}" if self.kind == "h_alpha" else self.kind

    def curve(self, x: int, n_ranks: int) -> np.ndarray:
        """``f_x(p)`` for ``p = 1..n_ranks``."""
        p = np.arange(1, n_ranks + 1, dtype=float)
        if self.kind == "custom":
            row = self.table.get(int(x), {})
            out = np.zeros(n_ranks)
            for rank, v in row.items():
                if 1 <= rank <= n_ranks:
                    out[rank - 1] = v
            return out
        inside = p <= x
        if self.kind == "h":
            height = np.full(n_ranks, float(x))
        elif self.kind == "h2":
            height = np.full(n_ranks, float(x) ** 2)
        elif self.kind == "h_alpha":
            height = np.full(n_ranks, self.alpha * x)
        else:
            height = x + 1.0 - p
        return np.where(inside, height, 0.0)

    def levels(self, profile: RankedProfile):
        """Candidate levels, ascending, that can possibly be attained."""
        if self.kind == "custom":
            return sorted(self.table)
        # every built-in curve is positive at rank N+1 once x > N
        return range(1, profile.n_assets + 1)

    def support(self, x: int, profile: RankedProfile) -> int:
        """Number of ranks that must be checked at level ``x``."""
        if self.kind == "custom":
            row = self.table.get(int(x), {})
            return max([profile.n_assets, *row.keys()])
        return max(profile.n_assets, int(math.floor(x)))


def curve_eval(fam: PerfCurveFamily, x: float, p: float) -> float:
    """Single value ``f_x(p)`` of a curve family."""
    if x <= 0 or p <= 0:
        raise ValueError("levels and ranks must be positive")
    if fam.kind == "custom":
        if float(p).is_integer():
            return fam.table.get(int(x), {}).get(int(p), 0.0) if float(x).is_integer() else 0.0
        return 0.0
    if p > x:
        return 0.0
    if fam.kind == "h":
        return float(x)
    if fam.kind == "h2":
        return float(x) ** 2
    if fam.kind == "h_alpha":
        return fam.alpha * x
    return -p + x + 1.0


def _check_custom_monotone(table):
    levels = sorted(table)
    if not levels:
        raise ValueError("custom family needs at least one level")
    ranks = sorted({p for row in table.values() for p in row})
    for x in levels:
        for p, v in table[x].items():
            if v < 0:
                raise ValueError(f"negative curve value at level {x}, rank {p}")
    for lo, hi in zip(levels, levels[1:]):
        for p in ranks:
            if table[lo].get(p, 0.0) > table[hi].get(p, 0.0):
                raise ValueError(
                    f"curve family not nondecreasing in the level: f_{lo}({p}) > f_{hi}({p})")


def _attains(profile: RankedProfile, fam: PerfCurveFamily, x) -> bool:
    n = fam.support(x, profile)
    vals = np.zeros(n)
    vals[: profile.n_assets] = profile.values[:n]
    return bool(np.all(vals >= fam.curve(x, n)))


def srm_rank(profile, fam: PerfCurveFamily) -> int:
    """Largest level ``x`` with ``X(p) >= f_x(p)`` at every rank; 0 if none.

    Curves are nondecreasing in the level, so attained levels form a down-set
    and a binary search over the candidate levels is exact.
    """
    if not isinstance(profile, RankedProfile):
        profile = RankedProfile.from_scores(profile)
    if fam.kind != "custom":
        return _srm_builtin(profile.values, fam)
    levels = list(fam.levels(profile))
    lo, hi = 0, len(levels)  # levels[:lo] attained, levels[hi:] not
    while lo < hi:
        mid = (lo + hi) // 2
        if _attains(profile, fam, levels[mid]):
            lo = mid + 1
        else:
            hi = mid
    return int(levels[lo - 1]) if lo else 0


def _srm_builtin(v: np.ndarray, fam: PerfCurveFamily) -> int:
    # Level x is attained iff the binding rank condition holds, and the
    # attained levels are 1..answer, so counting the hits is exact.
    p = np.arange(1, v.size + 1, dtype=float)
    if fam.kind == "h":
        hits = v >= p
    elif fam.kind == "h2":
        hits = v >= p * p
    elif fam.kind == "h_alpha":
        hits = v >= fam.alpha * p
    else:
        # f_x(p) = x + 1 - p on p <= x: need min_{p<=x} (X(p) + p) >= x + 1
        hits = np.minimum.accumulate(v + p) >= p + 1.0
    return int(np.count_nonzero(hits))


def srm_metric(fam: PerfCurveFamily) -> RankingMetric:
    """Profile-domain ranking metric for a curve family."""
    return RankingMetric(
        fam.name,
        lambda prof: MetricValue(float(srm_rank(prof, fam)), f"srm:{fam.name}"),
        {"monotone", "quasiconcave", "cash_quasiconcave"},
        domain="profile",
    )


def shift_profile(profile: RankedProfile, k: float, horizon: int | None = None):
    """The profile of ``X + k``, cash added at every rank.

    Ranks beyond ``N`` become ``k``; they are materialised up to ``horizon``
    (default ``N + ceil(X(1) + k) + 1``), which covers every level the
    built-in families with ``alpha >= 1`` can attain on the shifted profile.
    """
    if k < 0:
        raise ValueError("cash shifts of profiles must be nonnegative")
    v = profile.values
    if horizon is None:
        horizon = v.size + int(math.ceil(v[0] + k)) + 1
    pad = max(horizon - v.size, 0) if k > 0 else 0
    return RankedProfile(np.concatenate((v + k, np.full(pad, float(k)))))


def build_profile(expected_returns, weights, benchmark: float | None = None):
    """Integer ranked profiles from weighted expected asset returns.

    Parameters
    ----------
    expected_returns : sequence of array_like
        One vector of asset expected returns per portfolio; portfolios may
        hold different numbers of assets.  A 2-D array is read row-wise.
    weights : array_like or sequence of array_like
        Per-asset weights; a single vector is shared by every portfolio.
    benchmark : float, optional
        Rescaling constant.  Defaults to the smallest strictly positive
        weighted expected return across all portfolios and assets.

    Returns
    -------
    list of RankedProfile
        ``floor(max(w_p E[Y_p], 0) / benchmark)`` sorted descending per
        portfolio.
    """
    rows = [np.asarray(r, dtype=float).ravel() for r in expected_returns]
    try:
        shared = np.asarray(weights, dtype=float)
    except ValueError:  # ragged per-portfolio weights
        shared = None
    if shared is not None and shared.ndim == 1:
        wts = [shared] * len(rows)
    else:
        wts = [np.asarray(w, dtype=float).ravel() for w in weights]
    if len(wts) != len(rows):
        raise ValueError("one weight vector per portfolio is required")
    scores = []
    for r, w in zip(rows, wts):
        if r.shape != w.shape:
            raise ValueError(f"weights ({w.size}) do not match assets ({r.size})")
        scores.append(np.maximum(w * r, 0.0))
    if benchmark is None:
        pos = np.concatenate(scores)
        pos = pos[pos > 0]
        if pos.size == 0:
            raise BenchmarkUndefinedError(
                "benchmark undefined: no strictly positive weighted expected return")
        benchmark = float(pos.min())
    elif not benchmark > 0:
        raise BenchmarkUndefinedError("benchmark must be strictly positive")
    # relative slack absorbs representation error, e.g. 0.02/0.005
    return [RankedProfile.from_scores(np.floor(s / benchmark * (1 + BENCHMARK_RTOL)))
            for s in scores]


def load_curve_table(path) -> PerfCurveFamily:
    """Read a custom family from ``level, rank, value`` lines.

    Blank lines and lines starting with ``#`` are ignored, as is a header
    line whose first field is ``level``.
    """
    table: dict = {}
    with open(path, newline="") as fh:
        for lineno, row in enumerate(csv.reader(fh), start=1):
            if not row or not "".join(row).strip() or row[0].lstrip().startswith("#"):
                continue
            if row[0].strip().lower() == "level":
                continue
            if len(row) != 3:
                raise ValueError(f"{path}:{lineno}: expected 'level, rank, value'")
            try:
                x, p, v = int(row[0]), int(row[1]), float(row[2])
            except ValueError as exc:
                raise ValueError(f"{path}:{lineno}: {exc}") from None
            if x < 1 or p < 1:
                raise ValueError(f"{path}:{lineno}: levels and ranks start at 1")
            table.setdefault(x, {})[p] = v
    return PerfCurveFamily.custom(table)
