"""Risk functionals on finite scenario distributions.

Sign convention: a risk functional ``rho`` is decreasing in the position, so
larger values mean riskier positions, and cash-additive members satisfy
``rho(X + c) = rho(X) - c``.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from typing import Callable

import numpy as np
from scipy import stats

from .scenarios import (
    ScenarioDist,
    empirical_cdf,
    expectation,
    quantile,
)

BISECTION_TOL = 1e-10


class ParametricFitError(ValueError):
    """Raised when a parametric tail fit is undefined for the sample."""


class FitFallbackWarning(RuntimeWarning):
    """The Student-t fit fell back to the near-Gaussian degrees of freedom."""


# ---------------------------------------------------------------------------
# Level functions for Lambda-quantiles
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class LambdaFn:
    """Right-continuous step function with values in (0, 1].

    ``values[i]`` applies on ``[breakpoints[i-1], breakpoints[i])`` with the
    outer pieces extending to -inf and +inf, so ``len(values) ==
    len(breakpoints) + 1``.  Use the ``constant``, ``two_step`` and
    ``step_table`` constructors.
    """

    breakpoints: tuple = ()
    values: tuple = (0.5,)
    kind: str = "step_table"

    def __post_init__(self):
        b = tuple(float(v) for v in self.breakpoints)
        v = tuple(float(x) for x in self.values)
        if len(v) != len(b) + 1:
            raise ValueError("need exactly one more value than breakpoints")
        if any(not 0.0 < x <= 1.0 for x in v):
            raise ValueError(f"Lambda values must lie in (0, 1], got {v}")
        if any(b1 >= b2 for b1, b2 in zip(b, b[1:])):
            raise ValueError("breakpoints must be strictly increasing")
        object.__setattr__(self, "breakpoints", b)
        object.__setattr__(self, "values", v)

    @classmethod
    def constant(cls, lam):
        return cls((), (lam,), "constant")

    @classmethod
    def two_step(cls, lam_min, lam_max, threshold):
        """``lam_min`` below ``threshold``, ``lam_max`` from ``threshold`` on.

        No ordering between the two levels is imposed: ``lam_min < lam_max``
        gives an increasing Lambda, the reverse a decreasing one.
        """
        for lam in (lam_min, lam_max):
            if not 0.0 < lam < 1.0:
                raise ValueError(f"two-step levels must lie in (0, 1), got {lam!r}")
        return cls((threshold,), (lam_min, lam_max), "two_step")

    @classmethod
    def step_table(cls, breakpoints, values):
        return cls(tuple(breakpoints), tuple(values), "step_table")

    def __call__(self, y):
        idx = np.searchsorted(self.breakpoints, y, side="right")
        out = np.asarray(self.values)[idx]
        return float(out) if np.ndim(out) == 0 else out

    @property
    def is_decreasing(self):
        return all(a >= b for a, b in zip(self.values, self.values[1:]))

    @property
    def is_increasing(self):
        return all(a <= b for a, b in zip(self.values, self.values[1:]))


# ---------------------------------------------------------------------------
# Utility functions for certainty equivalents
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class UtilityFn:
    """Strictly increasing, concave, piecewise-linear utility.

    Represented by knots ``xs`` with values ``ys``; beyond the outer knots the
    end slopes continue.  With no knots the utility is the identity.
    """

    xs: tuple = ()
    ys: tuple = ()
    kind: str = "identity"
    _slopes: tuple = field(default=(), repr=False, compare=False)

    def __post_init__(self):
        xs = tuple(float(v) for v in self.xs)
        ys = tuple(float(v) for v in self.ys)
        if len(xs) != len(ys):
            raise ValueError("knot abscissae and values differ in length")
        if len(xs) == 1:
            raise ValueError("a utility table needs at least two knots")
        if any(a >= b for a, b in zip(xs, xs[1:])):
            raise ValueError("utility knots must be strictly increasing")
        slopes = tuple((y2 - y1) / (x2 - x1)
                       for x1, x2, y1, y2 in zip(xs, xs[1:], ys, ys[1:]))
        if any(s <= 0 for s in slopes):
            raise ValueError("utility must be strictly increasing")
        if any(s2 > s1 * (1 + 1e-12) for s1, s2 in zip(slopes, slopes[1:])):
            raise ValueError("utility must be concave (nonincreasing slopes)")
        object.__setattr__(self, "xs", xs)
        object.__setattr__(self, "ys", ys)
        object.__setattr__(self, "_slopes", slopes)

    @classmethod
    def identity(cls):
        return cls()

    @classmethod
    def piecewise_linear(cls, theta, m):
        """``u(y) = y`` above ``theta``; slope ``1 + m`` at and below it."""
        if m < 0:
            raise ValueError("penalty increment m must be nonnegative")
        if m == 0:
            return cls.identity()
        return cls((theta - 1.0, theta, theta + 1.0),
                   (theta - (1.0 + m), theta, theta + 1.0), "piecewise_linear")

    @classmethod
    def custom_table(cls, xs, ys):
        return cls(tuple(xs), tuple(ys), "custom_table")

    def __call__(self, y):
        y = np.asarray(y, dtype=float)
        if not self.xs:
            out = y
        else:
            xs, ys, s = self.xs, self.ys, self._slopes
            out = np.interp(y, xs, ys)
            out = np.where(y < xs[0], ys[0] + s[0] * (y - xs[0]), out)
            out = np.where(y > xs[-1], ys[-1] + s[-1] * (y - xs[-1]), out)
        return float(out) if out.ndim == 0 else out

    def inverse(self, v: float) -> float:
        """``u^{-1}(v)``; closed form for identity and two-knot utilities."""
        if not self.xs:
            return float(v)
        xs, ys, s = self.xs, self.ys, self._slopes
        if self.kind == "piecewise_linear":
            theta = xs[1]
            return theta + (v - theta) / s[0] if v <= theta else float(v)
        return _bisect_increasing(lambda y: self(y) - v, xs[0], xs[-1], BISECTION_TOL)


def _bisect_increasing(g, lo, hi, tol):
    """Root of an increasing function, expanding the bracket as needed."""
    width = max(hi - lo, 1.0)
    while g(lo) > 0:
        lo -= width
        width *= 2
    width = max(hi - lo, 1.0)
    while g(hi) < 0:
        hi += width
        width *= 2
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        if g(mid) < 0:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


# ---------------------------------------------------------------------------
# Risk functionals
# ---------------------------------------------------------------------------


def var(d: ScenarioDist, alpha: float) -> float:
    """Value-at-Risk: the negative lower alpha-quantile."""
    return -quantile(d, alpha)


def cvar_historical(d: ScenarioDist, alpha: float) -> float:
    """Historical CVaR: negative mean of the lower alpha-tail.

    The atom straddling the alpha boundary enters with its fractional mass, so
    non-integer ``alpha * n`` is well defined.
    """
    if not 0.0 < alpha < 1.0:
        raise ValueError(f"CVaR level must lie in (0, 1), got {alpha!r}")
    p = d.probabilities
    if d.equal_weights:
        # exact masses avoid a drifting running sum
        before = np.arange(d.n) / d.n
    else:
        before = np.concatenate(([0.0], np.cumsum(p)[:-1]))
    mass = np.clip(alpha - before, 0.0, p)
    return -float(np.dot(mass, d.outcomes)) / alpha


@dataclass(frozen=True)
class StudentTFit:
    """Location-scale Student-t fitted by the method of moments."""

    loc: float
    scale: float
    df: float
    fallback: bool = False


def fit_student_t(d: ScenarioDist, min_size: int = 8) -> StudentTFit:
    """Moment fit: degrees of freedom from the excess kurtosis.

    ``df = 4 + 6 / excess`` clamped to [2.5, 100]; ``scale**2 =
    var * (df - 2) / df`` so the fitted variance equals the sample variance.
    Moments are probability-weighted (population convention).  A sample with
    no excess kurtosis falls back to ``df = 100`` and sets ``fallback``.
    """
    if d.n < min_size:
        raise ParametricFitError(
            f"parametric fit undefined: need at least {min_size} scenarios, got {d.n}")
    x, p = d.outcomes, d.probabilities
    mu = float(np.dot(p, x))
    dev = x - mu
    var_ = float(np.dot(p, dev ** 2))
    if var_ <= 1e-300 or np.ptp(x) == 0:
        raise ParametricFitError("parametric fit undefined: zero variance")
    kurt = float(np.dot(p, dev ** 4)) / var_ ** 2
    fallback = kurt <= 3.0
    if fallback:
        df = 100.0
    else:
        df = float(np.clip(4.0 + 6.0 / (kurt - 3.0), 2.5, 100.0))
    scale = math.sqrt(var_ * (df - 2.0) / df)
    return StudentTFit(mu, scale, df, fallback)


def student_t_cvar(alpha: float, loc: float = 0.0, scale: float = 1.0,
                   df: float = math.inf) -> float:
    """Closed-form lower-tail CVaR of ``loc + scale * T_df``.

    ``df = inf`` gives the Gaussian limit.
    """
    if not 0.0 < alpha < 1.0:
        raise ValueError(f"CVaR level must lie in (0, 1), got {alpha!r}")
    if math.isinf(df):
        q = stats.norm.ppf(1.0 - alpha)
        tail = stats.norm.pdf(q) / alpha
    else:
        if df <= 1:
            raise ValueError("tail mean requires df > 1")
        q = stats.t.ppf(1.0 - alpha, df)
        tail = stats.t.pdf(q, df) / alpha * (df + q * q) / (df - 1.0)
    return -loc + scale * float(tail)


def cvar_student_t(d: ScenarioDist, alpha: float) -> float:
    """CVaR of a Student-t fitted to ``d`` by moments.

    Emits :class:`FitFallbackWarning` when the sample shows no excess
    kurtosis; use :func:`fit_student_t` to inspect the flag directly.
    """
    fit = fit_student_t(d)
    if fit.fallback:
        warnings.warn("kurtosis <= 3; Student-t fit fell back to df=100",
                      FitFallbackWarning, stacklevel=2)
    return student_t_cvar(alpha, fit.loc, fit.scale, fit.df)


def expectile(d: ScenarioDist, p: float, tol: float = BISECTION_TOL) -> float:
    """The p-expectile: root of ``p E[(X-y)+] - (1-p) E[(X-y)-]``.

    The map is continuous and strictly decreasing in ``y`` with a sign change
    over [min, max], so plain bisection converges to the unique root.
    """
    if not 0.0 < p < 1.0:
        raise ValueError(f"expectile level must lie in (0, 1), got {p!r}")
    x, w = d.outcomes, d.probabilities
    lo, hi = float(x[0]), float(x[-1])
    if lo == hi:
        return lo

    def g(y):
        diff = x - y
        return p * np.dot(w, np.maximum(diff, 0.0)) - (1.0 - p) * np.dot(w, np.maximum(-diff, 0.0))

    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        if g(mid) > 0:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def evar_expectile(d: ScenarioDist, p: float) -> float:
    """Expectile-based risk measure ``-e_p(X)``."""
    return -expectile(d, p)


def lambda_quantile(d: ScenarioDist, lam: LambdaFn):
    """``inf{y : P(X <= y) > Lambda(y)}``, or ``None`` when no point qualifies.

    Both the CDF and Lambda are right-continuous step functions, so the set is
    a union of left-closed intervals and its infimum is attained at an
    outcome or at a breakpoint of Lambda.  Points below the smallest outcome
    never qualify because the CDF vanishes there and Lambda is positive.
    """
    x = d.outcomes
    bps = np.asarray(lam.breakpoints)
    if bps.size:
        cand = np.union1d(x, bps[bps > x[0]])
    else:
        cand = x
    hit = empirical_cdf(d, cand) > lam(cand)
    i = int(np.argmax(hit))
    if not hit[i]:
        return None
    return float(cand[i])


def lambda_var(d: ScenarioDist, lam: LambdaFn):
    """Lambda-VaR ``-q_Lambda(X)``; ``None`` when the quantile is undefined."""
    q = lambda_quantile(d, lam)
    return None if q is None else -q


def expected_loss(d: ScenarioDist, f: Callable) -> float:
    """``E[f(-X)]`` for an increasing convex loss function ``f``."""
    return float(np.dot(d.probabilities, f(-d.outcomes)))


def put_payoff(strike: float) -> Callable:
    """``y -> (y + strike)+``, the loss of a put struck at ``strike``."""
    return lambda y: np.maximum(np.asarray(y, dtype=float) + strike, 0.0)


def shifted(f: Callable, x: float) -> Callable:
    """``y -> f(y) + x``."""
    return lambda y: f(y) + x


def piecewise_linear_loss(xs, ys) -> Callable:
    """Increasing convex loss from knots, extended linearly at the ends."""
    xs = np.asarray(xs, dtype=float)
    ys = np.asarray(ys, dtype=float)
    s = np.diff(ys) / np.diff(xs)
    if xs.size < 2 or np.any(np.diff(xs) <= 0):
        raise ValueError("need at least two strictly increasing knots")
    if np.any(s < 0) or np.any(np.diff(s) < -1e-12):
        raise ValueError("loss must be increasing and convex")

    def f(y):
        y = np.asarray(y, dtype=float)
        out = np.interp(y, xs, ys)
        out = np.where(y < xs[0], ys[0] + s[0] * (y - xs[0]), out)
        return np.where(y > xs[-1], ys[-1] + s[-1] * (y - xs[-1]), out)

    return f


def certainty_equiv_rho(d: ScenarioDist, u: UtilityFn) -> float:
    """``-u^{-1}(E[u(X)])``."""
    return -u.inverse(float(np.dot(d.probabilities, u(d.outcomes))))


# ---------------------------------------------------------------------------
# Level-indexed families
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class RiskFamily:
    """Level-indexed risk functionals ``x -> rho_x``, nondecreasing in ``x``.

    ``monotone_certificate`` records that the family is declared increasing
    in the level; the axiom harness checks the claim empirically.
    """

    evaluator: Callable[[float, ScenarioDist], float]
    name: str = "family"
    monotone_certificate: bool = True

    def __call__(self, x: float, d: ScenarioDist) -> float:
        return self.evaluator(x, d)

    @classmethod
    def shift(cls, rho: Callable[[ScenarioDist], float], name="shift"):
        """``rho_x = rho + x``."""
        return cls(lambda x, d: rho(d) + x, name)

    @classmethod
    def reward_risk(cls, rho: Callable[[ScenarioDist], float],
                    reward: Callable[[ScenarioDist], float] = expectation,
                    name="reward_risk"):
        """``rho_x = -reward + x * rho``; increasing when ``rho >= 0``."""
        return cls(lambda x, d: -reward(d) + x * rho(d), name)

    @classmethod
    def expectile(cls, schedule: Callable[[float], float] | None = None,
                  name="expectile"):
        """``rho_x = EVaR^{p(x)}`` with ``p`` decreasing in the level.

        The default schedule is ``p(x) = 1 / (1 + x)``.
        """
        sched = schedule or (lambda x: 1.0 / (1.0 + x))
        return cls(lambda x, d: evar_expectile(d, sched(x)), name)

    @classmethod
    def expected_loss(cls, losses: Callable[[float], Callable], name="expected_loss"):
        """``rho_x = E[f_x(-X)]`` from a level-indexed loss family."""
        return cls(lambda x, d: expected_loss(d, losses(x)), name)

    @classmethod
    def lambda_levels(cls, lambdas: Callable[[float], LambdaFn], name="lambda_levels"):
        """``rho_x = Lambda^x VaR`` for an increasing family of Lambda functions.

        An undefined quantile counts as ``-inf`` risk (the infimum of the empty
        set is ``+inf``).
        """
        def ev(x, d):
            v = lambda_var(d, lambdas(x))
            return -math.inf if v is None else v

        return cls(ev, name)
