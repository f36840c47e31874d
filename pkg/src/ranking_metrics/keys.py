"""String keys addressing metric configurations.

Grammar (fields separated by ``:``)::

    glr | omega | omega:zero
    raroc:{cvar|tcvar}:<alpha> | raroc:evar:<p>
    lvar:const:<lambda> | lvar:two_step:<lambda_min>:<lambda_max>[:<threshold>]
    ce:identity | ce:plinear:<theta>:<m>      theta is a number or "<q>q"
    family:shift:{cvar|evar}:<level> | family:raroc:cvar:<alpha>
    h | h2 | halpha:<alpha> | w

A two-step key without a threshold takes it from ``pooled`` (the pooled
quantile at ``(lambda_min + lambda_max) / 2``), or 0 when nothing is pooled.
``<q>q`` makes the utility kink the ``q``-quantile of the ranked position
itself.
"""

from __future__ import annotations

from . import bibliometric as bib
from .metrics import (
    MetricValue,
    RankingMetric,
    certainty_equiv_metric,
    family_metric,
    glr_metric,
    lambda_var_metric,
    omega_metric,
    r_certainty_equiv,
    raroc_metric,
)
from .risk import (
    LambdaFn,
    RiskFamily,
    UtilityFn,
    cvar_historical,
    cvar_student_t,
    evar_expectile,
)
from .scenarios import ScenarioDist, quantile


class MetricKeyError(ValueError):
    """A metric key does not parse under the grammar."""


def _num(token, key, lo=None, hi=None, open_lo=True, open_hi=True):
    try:
        v = float(token)
    except ValueError:
        raise MetricKeyError(f"metric key {key!r}: {token!r} is not a number") from None
    if lo is not None and (v <= lo if open_lo else v < lo):
        raise MetricKeyError(f"metric key {key!r}: {token!r} out of range")
    if hi is not None and (v >= hi if open_hi else v > hi):
        raise MetricKeyError(f"metric key {key!r}: {token!r} out of range")
    return v


def _arity(parts, key, *allowed):
    if len(parts) not in allowed:
        raise MetricKeyError(f"metric key {key!r}: wrong number of fields")


RISKS = {
    "cvar": lambda a: (lambda d: cvar_historical(d, a)),
    "tcvar": lambda a: (lambda d: cvar_student_t(d, a)),
    "evar": lambda p: (lambda d: evar_expectile(d, p)),
}


def two_step_threshold(pooled: ScenarioDist | None, lam_min, lam_max) -> float:
    """Threshold of a two-step Lambda: the pooled quantile at the mid level."""
    if pooled is None:
        return 0.0
    return quantile(pooled, 0.5 * (lam_min + lam_max))


def quantile_kink_ce(q: float, m: float, name: str) -> RankingMetric:
    """Certainty equivalent whose kink is the position's own ``q``-quantile."""
    def ev(d):
        val = r_certainty_equiv(d, UtilityFn.piecewise_linear(quantile(d, q), m))
        return MetricValue(val.value, f"{val.provenance}, theta=q{q:g}")
    # the kink moves with the position, so no axiom is claimed up front
    return RankingMetric(name, ev, frozenset())


def parse_metric_key(key: str, pooled: ScenarioDist | None = None) -> RankingMetric:
    """Build the metric a key names.

    Raises
    ------
    MetricKeyError
        Naming the offending key and token.
    """
    if not isinstance(key, str) or not key.strip():
        raise MetricKeyError(f"empty metric key {key!r}")
    key = key.strip()
    parts = key.split(":")
    head = parts[0]

    if head == "glr":
        _arity(parts, key, 1)
        return glr_metric()
    if head == "omega":
        _arity(parts, key, 1, 2)
        if len(parts) == 2 and parts[1] not in ("zero", "infinity"):
            raise MetricKeyError(f"metric key {key!r}: unknown Omega mode {parts[1]!r}")
        return omega_metric(parts[1] if len(parts) == 2 else "infinity")

    if head == "raroc":
        _arity(parts, key, 3)
        risk = parts[1]
        if risk not in RISKS:
            raise MetricKeyError(f"metric key {key!r}: unknown risk measure {risk!r}")
        level = _num(parts[2], key, 0.0, 1.0)
        return raroc_metric(RISKS[risk](level), name=key)

    if head == "lvar":
        if len(parts) < 2:
            raise MetricKeyError(f"metric key {key!r}: missing Lambda kind")
        if parts[1] == "const":
            _arity(parts, key, 3)
            return lambda_var_metric(LambdaFn.constant(_num(parts[2], key, 0.0, 1.0)), key)
        if parts[1] == "two_step":
            _arity(parts, key, 4, 5)
            lo = _num(parts[2], key, 0.0, 1.0)
            hi = _num(parts[3], key, 0.0, 1.0)
            thr = (_num(parts[4], key) if len(parts) == 5
                   else two_step_threshold(pooled, lo, hi))
            return lambda_var_metric(LambdaFn.two_step(lo, hi, thr), key)
        raise MetricKeyError(f"metric key {key!r}: unknown Lambda kind {parts[1]!r}")

    if head == "ce":
        if len(parts) == 2 and parts[1] == "identity":
            return certainty_equiv_metric(UtilityFn.identity(), key)
        if len(parts) == 4 and parts[1] == "plinear":
            m = _num(parts[3], key, 0.0, open_lo=False)
            theta = parts[2]
            if theta.endswith("q"):
                return quantile_kink_ce(_num(theta[:-1], key, 0.0, 1.0), m, key)
            return certainty_equiv_metric(UtilityFn.piecewise_linear(_num(theta, key), m), key)
        raise MetricKeyError(f"metric key {key!r}: expected ce:identity or ce:plinear:<theta>:<m>")

    if head == "family":
        _arity(parts, key, 4)
        kind, risk = parts[1], parts[2]
        if risk not in RISKS:
            raise MetricKeyError(f"metric key {key!r}: unknown risk measure {risk!r}")
        rho = RISKS[risk](_num(parts[3], key, 0.0, 1.0))
        if kind == "shift":
            props = ("monotone", "cash_quasiconcave", "cash_subadditive",
                     "cash_additive_on_support")
            return family_metric(RiskFamily.shift(rho, key), tol=1e-12,
                                 properties=props, name=key)
        if kind == "raroc":
            props = ("monotone", "cash_quasiconcave", "quasiconcave", "scale_invariant")
            return family_metric(RiskFamily.reward_risk(rho, name=key), properties=props,
                                 name=key)
        raise MetricKeyError(f"metric key {key!r}: unknown family kind {kind!r}")

    if head in ("h", "h2", "w"):
        _arity(parts, key, 1)
        return bib.srm_metric(bib.PerfCurveFamily(head))
    if head == "halpha":
        _arity(parts, key, 2)
        return bib.srm_metric(bib.PerfCurveFamily.h_alpha(_num(parts[1], key, 0.0)))

    raise MetricKeyError(f"unknown metric key {key!r} (token {head!r})")
