"""Metric-maximising portfolio weights on the unit simplex.

Each start runs Nelder-Mead on free coordinates ``z`` with
``w = softmax(0, z)`` (the first coordinate pinned for identifiability),
so every iterate is strictly feasible.  The simplex vertices are evaluated
as extra deterministic candidates.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import minimize
from scipy.special import softmax

from .bibliometric import BenchmarkUndefinedError, build_profile
from .metrics import MetricValue, RankingMetric
from .scenarios import ScenarioDist

WEIGHT_TOL = 1e-10
SEARCH_CLIP = 1e12
MAX_RETRIES = 5
NM_OPTIONS = {"xatol": 1e-8, "fatol": math.inf, "maxiter": 2000}
# edge length of the initial simplex in softmax coordinates; scipy's default
# (5% of each coordinate) is far too local for kinked, stepwise objectives
INITIAL_STEP = 1.0


@dataclass(frozen=True)
class PortfolioWeights:
    weights: np.ndarray

    def __post_init__(self):
        w = np.array(self.weights, dtype=float).ravel()
        if w.size == 0 or not np.isfinite(w).all():
            raise ValueError("weights must be a nonempty finite vector")
        if w.min() < 0 or abs(w.sum() - 1.0) > WEIGHT_TOL:
            raise ValueError(f"weights are not on the unit simplex: {w.tolist()}")
        w.flags.writeable = False
        object.__setattr__(self, "weights", w)

    def __len__(self):
        return self.weights.size

    def tolist(self):
        return self.weights.tolist()


@dataclass
class OptResult:
    best_weights: PortfolioWeights
    best_value: MetricValue
    n_starts: int
    n_converged: int
    ties_averaged: bool
    metadata: dict = field(default_factory=dict)


def _as_panel(asset_returns):
    R = np.asarray(asset_returns, dtype=float)
    if R.ndim == 1:
        R = R[:, None]
    if R.ndim != 2 or R.size == 0:
        raise ValueError("asset returns must be a nonempty [time x asset] matrix")
    if not np.isfinite(R).all():
        raise ValueError("asset returns must be finite")
    return R


def portfolio_returns(asset_returns, w) -> ScenarioDist:
    """Equal-weight scenario distribution of the weighted return series."""
    R = _as_panel(asset_returns)
    w = w.weights if isinstance(w, PortfolioWeights) else np.asarray(w, dtype=float).ravel()
    if w.size != R.shape[1]:
        raise ValueError(f"{w.size} weights for {R.shape[1]} assets")
    return ScenarioDist(R @ w)


def random_simplex(n: int, seed=None) -> PortfolioWeights:
    """Uniform point on the simplex from normalised exponential draws.

    ``seed`` may be an int or a ``numpy.random.Generator``.
    """
    if n < 1:
        raise ValueError("need at least one asset")
    rng = seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)
    e = rng.exponential(size=n)
    w = e / e.sum()
    w[-1] = 1.0 - w[:-1].sum()
    return PortfolioWeights(np.clip(w, 0.0, None))


def _weights_from_z(z):
    w = softmax(np.concatenate(([0.0], z)))
    assert w.min() >= 0 and abs(w.sum() - 1.0) <= WEIGHT_TOL
    return w


def make_objective(asset_returns, metric: RankingMetric, benchmark: float | None = None):
    """``w -> MetricValue`` for return-domain or profile-domain metrics.

    Profile metrics score the weighted expected asset returns against a
    benchmark held fixed across candidates (default: the equal-weight one),
    so that values are comparable between weight vectors.
    """
    R = _as_panel(asset_returns)
    if metric.domain != "profile":
        return lambda w: metric(ScenarioDist(R @ w))
    mu = R.mean(axis=0)
    if benchmark is None:
        eq = np.maximum(mu / mu.size, 0.0)
        if not (eq > 0).any():
            raise BenchmarkUndefinedError(
                "benchmark undefined: no asset has a positive expected return")
        benchmark = float(eq[eq > 0].min())
    return lambda w: metric(build_profile([mu], w, benchmark)[0])


def _safe_eval(obj, w):
    try:
        v = obj(w)
    except (ValueError, ArithmeticError):
        return None
    if "undefined" in v.provenance:
        return None
    return v


def maximize_metric(asset_returns, metric: RankingMetric, n_starts: int = 100,
                    seed: int = 0, tol: float = 1e-9, benchmark: float | None = None
                    ) -> OptResult:
    """Multistart Nelder-Mead maximisation of a ranking metric over weights.

    Local optima within ``tol * (1 + |best|)`` of the best value are
    averaged, renormalised and re-evaluated; if the average leaves the band
    or falls below the best single-asset portfolio, the single best
    candidate is kept.  Deterministic given ``seed``.
    """
    if n_starts < 1:
        raise ValueError("n_starts must be at least 1")
    R = _as_panel(asset_returns)
    n = R.shape[1]
    obj = make_objective(R, metric, benchmark)
    rng = np.random.default_rng(seed)
    meta = {"optimizer": "Nelder-Mead", "parameterization": "softmax, first coordinate pinned",
            "xatol": NM_OPTIONS["xatol"], "maxiter": NM_OPTIONS["maxiter"],
            "initial_step": INITIAL_STEP,
            "seed": seed, "tol": tol, "metric": metric.name,
            "restarts": 0, "dropped_starts": 0}

    if n == 1:
        w = PortfolioWeights([1.0])
        return OptResult(w, obj(w.weights), n_starts, 0, False,
                         {**meta, "note": "single asset"})

    cands = []  # (value, weights) in start order, vertices last
    n_conv = 0

    def neg(z):
        v = _safe_eval(obj, _weights_from_z(z))
        if v is None:
            return SEARCH_CLIP
        return -min(v.value, SEARCH_CLIP)

    for _ in range(n_starts):
        for attempt in range(MAX_RETRIES + 1):
            w0 = random_simplex(n, rng).weights
            if _safe_eval(obj, w0) is not None:
                break
            meta["restarts"] += 1
        else:
            meta["dropped_starts"] += 1
            continue
        w0 = np.maximum(w0, 1e-300)
        z0 = np.log(w0[1:]) - np.log(w0[0])
        sim = np.vstack([z0, z0 + INITIAL_STEP * np.eye(n - 1)])
        res = minimize(neg, z0, method="Nelder-Mead",
                       options={**NM_OPTIONS, "initial_simplex": sim})
        n_conv += bool(res.success)
        w = _weights_from_z(res.x)
        v = _safe_eval(obj, w)
        if v is not None:
            cands.append((v.value, w))

    vertex_best = -math.inf
    for i in range(n):
        e = np.zeros(n)
        e[i] = 1.0
        v = _safe_eval(obj, e)
        if v is not None:
            cands.append((v.value, e))
            vertex_best = max(vertex_best, v.value)

    if not cands:
        raise ValueError(f"metric {metric.name!r} is undefined at every start")

    vals = np.array([c[0] for c in cands])
    best_i = int(np.argmax(vals))
    best = vals[best_i]
    if math.isinf(best):
        band = vals == best
    else:
        band = vals >= best - tol * (1.0 + abs(best))
    w_best = cands[best_i][1]
    ties = False
    if band.sum() > 1:
        avg = np.mean([c[1] for c, b in zip(cands, band) if b], axis=0)
        avg = avg / avg.sum()
        v_avg = _safe_eval(obj, avg)
        # the average must stay in the band and never fall below a vertex
        if v_avg is not None and (v_avg.value == best or (
                not math.isinf(best) and v_avg.value >= best - tol * (1.0 + abs(best))
                and v_avg.value >= vertex_best)):
            w_best, ties = avg, True
        else:
            meta["average_rejected"] = True
    meta["candidates"] = len(cands)
    meta["tie_set_size"] = int(band.sum())
    weights = PortfolioWeights(w_best)
    return OptResult(weights, obj(weights.weights), n_starts, n_conv, ties, meta)


def grid_search(asset_returns, metric: RankingMetric, step: float = 0.01,
                benchmark: float | None = None):
    """Exhaustive search over the simplex grid of the given resolution.

    Returns ``(best_value, best_weights)``; meant as an oracle for 2-3 assets.
    """
    R = _as_panel(asset_returns)
    n = R.shape[1]
    obj = make_objective(R, metric, benchmark)
    m = int(round(1.0 / step))
    best, best_w = -math.inf, None

    def rec(prefix, left):
        nonlocal best, best_w
        if len(prefix) == n - 1:
            w = np.array(prefix + [left], dtype=float) / m
            v = _safe_eval(obj, w)
            if v is not None and v.value > best:
                best, best_w = v.value, w
            return
        for k in range(left + 1):
            rec(prefix + [k], left - k)

    rec([], m)
    return best, best_w
