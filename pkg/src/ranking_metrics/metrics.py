"""Ranking metrics: reward-risk ratios, risk-generated metrics and the
level-set representation engine.

Every evaluator returns a :class:`MetricValue` in ``[0, +inf]`` carrying the
branch of its case split that produced the value.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable

from .risk import (
    LambdaFn,
    RiskFamily,
    UtilityFn,
    certainty_equiv_rho,
    cvar_historical,
    lambda_quantile,
)
from .scenarios import (
    ScenarioDist,
    expectation,
    neg_part_expectation,
    pos_part_expectation,
)

INF = math.inf

PROPERTIES = frozenset({
    "monotone",
    "cash_quasiconcave",
    "quasiconcave",
    "cash_subadditive",
    "cash_additive_on_support",
    "scale_invariant",
})


class FamilyNotIncreasingError(ValueError):
    """A risk family decreased in the level during the representation search."""


@dataclass(frozen=True)
class MetricValue:
    value: float
    provenance: str = ""

    def __post_init__(self):
        if math.isnan(self.value) or self.value < 0:
            raise ValueError(f"ranking metric values lie in [0, inf], got {self.value!r}")

    def __float__(self):
        return float(self.value)

    @property
    def is_infinite(self):
        return math.isinf(self.value)

    @property
    def censored(self):
        return "right-censored" in self.provenance


@dataclass(frozen=True)
class RankingMetric:
    """A named evaluator with the properties it is claimed to satisfy.

    ``domain`` is ``"dist"`` for metrics of a :class:`ScenarioDist` and
    ``"profile"`` for bibliometric metrics of a ranked profile.
    """

    name: str
    evaluator: Callable[[object], MetricValue]
    declared_properties: frozenset = field(default_factory=frozenset)
    domain: str = "dist"

    def __post_init__(self):
        props = frozenset(self.declared_properties)
        unknown = props - PROPERTIES
        if unknown:
            raise ValueError(f"unknown properties: {sorted(unknown)}")
        object.__setattr__(self, "declared_properties", props)

    def __call__(self, x) -> MetricValue:
        return self.evaluator(x)


def glr(d: ScenarioDist) -> MetricValue:
    """Gain-loss ratio ``E[X] / E[X-]`` for a positive mean, else 0.

    A positive mean with no downside is ranked ``+inf``.
    """
    mean = expectation(d)
    if mean <= 0:
        return MetricValue(0.0, "E[X] <= 0")
    loss = neg_part_expectation(d)
    if loss == 0:
        return MetricValue(INF, "E[X] > 0, E[X-] = 0")
    return MetricValue(mean / loss, "ratio")


def omega(d: ScenarioDist, mode: str = "infinity") -> MetricValue:
    """Omega ratio ``E[X+] / E[X-]``.

    ``mode`` sets the value when there is no downside: ``"infinity"`` (the
    default) or ``"zero"``.
    """
    if mode not in ("infinity", "zero"):
        raise ValueError(f"unknown Omega normalization {mode!r}")
    loss = neg_part_expectation(d)
    if loss == 0:
        return MetricValue(INF if mode == "infinity" else 0.0, f"E[X-] = 0, mode={mode}")
    return MetricValue(pos_part_expectation(d) / loss, "ratio")


def raroc(d: ScenarioDist, rho: Callable[[ScenarioDist], float]) -> MetricValue:
    """Risk-adjusted return on capital ``E[X] / rho(X)`` with its case split."""
    risk = rho(d)
    if risk <= 0:
        return MetricValue(INF, "rho <= 0")
    mean = expectation(d)
    if mean <= 0:
        return MetricValue(0.0, "E[X] <= 0, rho > 0")
    return MetricValue(mean / risk, "ratio")


def r_lambda_var(d: ScenarioDist, lam: LambdaFn) -> MetricValue:
    """``max(0, q_Lambda(X))``; an undefined quantile maps to 0."""
    q = lambda_quantile(d, lam)
    if q is None:
        return MetricValue(0.0, "undefined Lambda-quantile")
    if q <= 0:
        return MetricValue(0.0, "q_Lambda <= 0")
    return MetricValue(q, "q_Lambda")


def r_certainty_equiv(d: ScenarioDist, u: UtilityFn) -> MetricValue:
    """``max(0, u^{-1}(E[u(X)]))``."""
    ce = -certainty_equiv_rho(d, u)
    if ce <= 0:
        return MetricValue(0.0, "certainty equivalent <= 0")
    return MetricValue(ce, "certainty equivalent")


def r_from_family(d: ScenarioDist, fam: RiskFamily, bracket_max: float = 1e6,
                  tol: float = 1e-8) -> MetricValue:
    """``sup{x > 0 : rho_x(X) <= 0}`` by bisection on the level.

    The returned level ``x`` satisfies ``rho_x(X) <= 0 < rho_{x+tol}(X)``.
    The search is right-censored at ``bracket_max``.

    Raises
    ------
    FamilyNotIncreasingError
        If the family is seen to decrease in the level by more than 1e-9.
    """
    if bracket_max <= 0 or tol <= 0:
        raise ValueError("bracket_max and tol must be positive")
    lo, hi = tol, float(bracket_max)
    r_lo, r_hi = fam(lo, d), fam(hi, d)
    if r_lo > r_hi + 1e-9:
        raise FamilyNotIncreasingError(
            f"family not increasing: rho({lo:g}) = {r_lo:g} > rho({hi:g}) = {r_hi:g}")
    if r_lo > 0:
        return MetricValue(0.0, "rho_x > 0 at the smallest level")
    if r_hi <= 0:
        return MetricValue(hi, "right-censored at bracket_max")
    # half-width target leaves rho_{lo + tol} > 0 by monotonicity
    while hi - lo > 0.5 * tol:
        mid = 0.5 * (lo + hi)
        r_mid = fam(mid, d)
        if r_mid < r_lo - 1e-9 or r_mid > r_hi + 1e-9:
            raise FamilyNotIncreasingError(
                f"family not increasing around level {mid:g}")
        if r_mid <= 0:
            lo, r_lo = mid, r_mid
        else:
            hi, r_hi = mid, r_mid
    return MetricValue(lo, "level-set bisection")


def acceptance_member(d, x: float, r: RankingMetric) -> bool:
    """Whether ``d`` lies in the upper level set ``{r >= x}``."""
    if x <= 0:
        raise ValueError("acceptance levels must be positive")
    return r(d).value >= x


# ---------------------------------------------------------------------------
# Built-in metric objects
# ---------------------------------------------------------------------------

_RATIO_PROPS = {"monotone", "cash_quasiconcave", "quasiconcave", "scale_invariant"}


def glr_metric() -> RankingMetric:
    return RankingMetric("glr", glr, _RATIO_PROPS)


def omega_metric(mode: str = "infinity") -> RankingMetric:
    # zero mode ranks riskless positions at 0 while a dominated position with
    # some downside ranks higher, so it is not monotone.
    if mode == "infinity":
        props = {"monotone", "cash_quasiconcave", "scale_invariant"}
    else:
        props = {"cash_quasiconcave", "scale_invariant"}
    return RankingMetric("omega" if mode == "infinity" else "omega:zero",
                         lambda d: omega(d, mode), props)


def raroc_metric(rho: Callable[[ScenarioDist], float] | None = None,
                 name: str = "raroc:cvar:0.05", positively_homogeneous: bool = True
                 ) -> RankingMetric:
    rho = rho or (lambda d: cvar_historical(d, 0.05))
    props = {"monotone", "cash_quasiconcave", "quasiconcave"}
    if positively_homogeneous:
        props.add("scale_invariant")
    return RankingMetric(name, lambda d: raroc(d, rho), props)


def lambda_var_metric(lam: LambdaFn, name: str | None = None) -> RankingMetric:
    props = {"monotone", "cash_quasiconcave"}
    if lam.is_decreasing:
        props.add("cash_subadditive")
    if lam.kind == "constant":
        props.add("cash_additive_on_support")
    return RankingMetric(name or f"lvar:{lam.kind}", lambda d: r_lambda_var(d, lam), props)


def certainty_equiv_metric(u: UtilityFn, name: str | None = None) -> RankingMetric:
    props = {"monotone", "cash_quasiconcave", "quasiconcave"}
    if u.kind == "identity":
        # max(0, E[X]) is positively homogeneous, not scale invariant
        props |= {"cash_subadditive", "cash_additive_on_support"}
    return RankingMetric(name or f"ce:{u.kind}", lambda d: r_certainty_equiv(d, u), props)


def family_metric(fam: RiskFamily, bracket_max: float = 1e6, tol: float = 1e-8,
                  properties=("monotone", "cash_quasiconcave"),
                  name: str | None = None) -> RankingMetric:
    return RankingMetric(name or f"family:{fam.name}",
                         lambda d: r_from_family(d, fam, bracket_max, tol),
                         frozenset(properties))
