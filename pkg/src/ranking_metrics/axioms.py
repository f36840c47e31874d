"""Randomised verification of ranking-metric axioms.

Each ``check_*`` function draws positions from a seeded :class:`DistSampler`,
evaluates both sides of one inequality and aggregates the outcome into a
:class:`PropertyReport`.  Suites are deterministic given ``(seed, trials)``.
Metrics on ranked profiles (``domain == "profile"``) are exercised with
nonnegative profiles, constants being flat profiles of the same length.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field, replace

import numpy as np

from . import bibliometric as bib
from .metrics import (
    MetricValue,
    RankingMetric,
    acceptance_member,
    certainty_equiv_metric,
    family_metric,
    glr_metric,
    lambda_var_metric,
    omega_metric,
    raroc_metric,
)
from .risk import LambdaFn, RiskFamily, UtilityFn, cvar_historical
from .scenarios import ScenarioDist, expectation, mix_with_constant

SLACK = 1e-9


@dataclass(frozen=True)
class DistSampler:
    """Seeded generator of test positions.

    ``lattice_share`` of the draws use integer outcomes so that ties and
    exact boundary cases occur regularly.
    """

    n_outcomes: tuple = (2, 12)
    magnitude: tuple = (-5.0, 5.0)
    scheme: str = "equal"
    seed: int = 0
    lattice_share: float = 0.3
    profile_size: tuple = (1, 20)
    profile_high: float = 25.0

    def __post_init__(self):
        if self.scheme not in ("equal", "random-simplex"):
            raise ValueError(f"unknown probability scheme {self.scheme!r}")

    def rng(self, seed=None):
        return np.random.default_rng(self.seed if seed is None else seed)

    def _values(self, rng, n, low, high):
        if rng.random() < self.lattice_share:
            return rng.integers(math.ceil(low), math.floor(high) + 1, n).astype(float)
        return rng.uniform(low, high, n)

    def _probs(self, rng, n):
        if self.scheme == "equal":
            return None
        p = rng.dirichlet(np.ones(n)) + 1e-6
        return p / p.sum()

    def dist(self, rng) -> ScenarioDist:
        n = int(rng.integers(self.n_outcomes[0], self.n_outcomes[1] + 1))
        return ScenarioDist(self._values(rng, n, *self.magnitude), self._probs(rng, n))

    def pair(self, rng):
        """Two comonotone positions on one probability grid."""
        n = int(rng.integers(self.n_outcomes[0], self.n_outcomes[1] + 1))
        p = self._probs(rng, n)
        x = np.sort(self._values(rng, n, *self.magnitude))
        y = np.sort(self._values(rng, n, *self.magnitude))
        return ScenarioDist(x, p), ScenarioDist(y, p)

    def profile(self, rng) -> bib.RankedProfile:
        n = int(rng.integers(self.profile_size[0], self.profile_size[1] + 1))
        return bib.RankedProfile.from_scores(self._values(rng, n, 0.0, self.profile_high))

    def draw(self, rng, domain):
        return self.profile(rng) if domain == "profile" else self.dist(rng)

    def constant(self, rng, domain):
        lo, hi = (0.0, self.profile_high) if domain == "profile" else self.magnitude
        if rng.random() < self.lattice_share:
            return float(rng.integers(math.ceil(lo), math.floor(hi) + 1))
        return float(rng.uniform(lo, hi))


@dataclass
class PropertyReport:
    """Outcome of one randomised property suite."""

    property: str
    metric: str
    trials: int
    seed: int
    violations: int = 0
    skipped: int = 0
    worst_violation: float = 0.0
    counterexample: dict | None = None
    verdict: str = "holds_on_sample"
    mode: str = ""
    extra: dict = field(default_factory=dict)

    def record(self, magnitude, inputs):
        self.violations += 1
        inputs = {"seed": self.seed, **inputs}
        if self.counterexample is None or magnitude > self.worst_violation:
            self.worst_violation = float(magnitude)
            self.counterexample = inputs

    def finish(self):
        if self.violations:
            self.verdict = "violated"
        elif self.trials and self.skipped == self.trials:
            self.verdict = "not_applicable"
        return self

    @property
    def passed(self):
        return self.violations == 0

    def row(self):
        return {
            "property": self.property,
            "metric": self.metric,
            "trials": self.trials,
            "violations": self.violations,
            "skipped": self.skipped,
            "seed": self.seed,
            "verdict": self.verdict,
            "worst_violation": self.worst_violation,
            "mode": self.mode,
        }

    def as_dict(self):
        return asdict(self)

    def __str__(self):
        s = (f"{self.metric:<24} {self.property:<26} trials={self.trials:<6} "
             f"violations={self.violations:<5} skipped={self.skipped:<6} "
             f"seed={self.seed} -> {self.verdict}")
        if self.mode:
            s += f" [{self.mode}]"
        return s


# ---------------------------------------------------------------------------
# position arithmetic shared by both domains
# ---------------------------------------------------------------------------


def _payload(x):
    if isinstance(x, ScenarioDist):
        return {"outcomes": x.outcomes.tolist(), "probabilities": x.probabilities.tolist()}
    if isinstance(x, bib.RankedProfile):
        return {"profile": x.values.tolist()}
    return x


def _const_like(x, k):
    if isinstance(x, bib.RankedProfile):
        return bib.RankedProfile(np.full(x.n_assets, float(k)))
    return ScenarioDist.constant(k)


def _mix(x, y, lam):
    """``lam * x + (1 - lam) * y`` for aligned positions or a constant ``y``."""
    if isinstance(x, bib.RankedProfile):
        yv = y.values if isinstance(y, bib.RankedProfile) else float(y)
        return bib.RankedProfile(lam * x.values + (1.0 - lam) * yv)
    if not isinstance(y, ScenarioDist):
        return mix_with_constant(x, lam, float(y))
    return ScenarioDist(lam * x.outcomes + (1.0 - lam) * y.outcomes, x.probabilities)


def _perturb_up(x, rng):
    if isinstance(x, bib.RankedProfile):
        n = x.n_assets
        eps = rng.uniform(0.0, 3.0, n) * (rng.random(n) < 0.5)
        if rng.random() < 0.5:
            eps = np.round(eps)
        return bib.RankedProfile.from_scores(x.values + eps)
    n = x.n
    eps = rng.uniform(0.0, 2.0, n) * (rng.random(n) < 0.5)
    return ScenarioDist(x.outcomes + eps, x.probabilities)


def _shift(x, k):
    if isinstance(x, bib.RankedProfile):
        return bib.shift_profile(x, k)
    return x + k


def _skip(*vals: MetricValue):
    return any(v.censored for v in vals)


def _lam(rng):
    u = rng.random()
    if u < 0.05:
        return 0.0
    if u < 0.1:
        return 1.0
    return float(rng.random())


# ---------------------------------------------------------------------------
# suites
# ---------------------------------------------------------------------------


def check_monotonicity(r: RankingMetric, s: DistSampler, trials: int,
                       seed: int | None = None) -> PropertyReport:
    """``X <= Y`` implies ``r(X) <= r(Y)``, with ``Y = X + eps``, ``eps >= 0``."""
    seed = s.seed if seed is None else seed
    rng = s.rng(seed)
    rep = PropertyReport("monotonicity", r.name, trials, seed)
    for t in range(trials):
        x = s.draw(rng, r.domain)
        y = _perturb_up(x, rng)
        rx, ry = r(x), r(y)
        if _skip(rx, ry):
            rep.skipped += 1
        elif not rx.value <= ry.value + SLACK:
            rep.record(rx.value - ry.value,
                       {"trial": t, "X": _payload(x), "Y": _payload(y)})
    return rep.finish()


def check_cash_quasiconcavity(r: RankingMetric, s: DistSampler, trials: int,
                              seed: int | None = None) -> PropertyReport:
    """``r(lam X + (1-lam) k) >= min(r(X), r(k))`` for constants ``k``."""
    seed = s.seed if seed is None else seed
    rng = s.rng(seed)
    rep = PropertyReport("cash_quasiconcavity", r.name, trials, seed)
    for t in range(trials):
        x = s.draw(rng, r.domain)
        lam = _lam(rng)
        k = s.constant(rng, r.domain)
        rx, rk, rm = r(x), r(_const_like(x, k)), r(_mix(x, k, lam))
        if _skip(rx, rk, rm):
            rep.skipped += 1
            continue
        bound = min(rx.value, rk.value)
        if not rm.value >= bound - SLACK:
            rep.record(bound - rm.value,
                       {"trial": t, "X": _payload(x), "lam": lam, "k": k})
    return rep.finish()


def check_quasiconcavity(r: RankingMetric, s: DistSampler, trials: int,
                         seed: int | None = None, falsify: bool = False) -> PropertyReport:
    """``r(lam X + (1-lam) Y) >= min(r(X), r(Y))`` on comonotone pairs.

    With ``falsify=True`` the search stops at the first counterexample and an
    exhausted budget is reported as ``inconclusive``.
    """
    seed = s.seed if seed is None else seed
    rng = s.rng(seed)
    rep = PropertyReport("quasiconcavity", r.name, trials, seed,
                         mode="falsification" if falsify else "")
    for t in range(trials):
        if r.domain == "profile":
            x = s.profile(rng)
            raw = rng.uniform(0.0, s.profile_high, x.n_assets)
            if rng.random() < s.lattice_share:
                raw = np.round(raw)
            y = bib.RankedProfile.from_scores(raw)
        else:
            x, y = s.pair(rng)
        lam = _lam(rng)
        rx, ry, rm = r(x), r(y), r(_mix(x, y, lam))
        if _skip(rx, ry, rm):
            rep.skipped += 1
            continue
        bound = min(rx.value, ry.value)
        if not rm.value >= bound - SLACK:
            rep.record(bound - rm.value, {"trial": t, "X": _payload(x),
                                          "Y": _payload(y), "lam": lam,
                                          "r_X": rx.value, "r_Y": ry.value,
                                          "r_mix": rm.value})
            if falsify:
                rep.trials = t + 1
                break
    rep.finish()
    if falsify and not rep.violations:
        rep.verdict = "inconclusive"
    return rep


def check_cash_subadditivity(r: RankingMetric, s: DistSampler, trials: int,
                             on_support: bool = False, seed: int | None = None,
                             k_range=(0.0, 5.0), integer_k: bool | None = None,
                             additive: bool = False) -> PropertyReport:
    """``r(X + k) <= r(X) + k`` for ``k >= 0``.

    With ``additive=True`` the equality ``r(X + k) = r(X) + k`` is checked
    instead.  ``on_support`` skips positions with ``r(X) = 0``.

    On ranked profiles the statement concerns integer scores shifted by
    whole benchmark units, so profiles are drawn on the integer lattice and
    ``k`` defaults to integers there.
    """
    seed = s.seed if seed is None else seed
    if r.domain == "profile":
        s = replace(s, lattice_share=1.0)
        if integer_k is None:
            integer_k = True
    rng = s.rng(seed)
    name = "cash_additivity" if additive else "cash_subadditivity"
    rep = PropertyReport(name, r.name, trials, seed,
                         mode="on_support" if on_support else "")
    lo, hi = k_range
    for t in range(trials):
        x = s.draw(rng, r.domain)
        if rng.random() < 0.05:
            k = float(lo)
        elif integer_k:
            k = float(rng.integers(math.ceil(lo), math.floor(hi) + 1))
        else:
            k = float(rng.uniform(lo, hi))
        rx = r(x)
        if on_support and rx.value == 0:
            rep.skipped += 1
            continue
        rs = r(_shift(x, k))
        if _skip(rx, rs):
            rep.skipped += 1
            continue
        gap = rs.value - (rx.value + k)
        if math.isnan(gap):  # inf - inf
            gap = 0.0
        bad = abs(gap) > SLACK if additive else gap > SLACK
        if bad:
            rep.record(abs(gap), {"trial": t, "X": _payload(x), "k": k})
    return rep.finish()


def check_level_sets(r: RankingMetric, s: DistSampler, trials: int,
                     seed: int | None = None) -> PropertyReport:
    """Upper level sets ``{r >= x}`` are convex at constants."""
    seed = s.seed if seed is None else seed
    rng = s.rng(seed)
    rep = PropertyReport("level_set_cash_convexity", r.name, trials, seed)
    for t in range(trials):
        x = s.draw(rng, r.domain)
        k = s.constant(rng, r.domain)
        lam = _lam(rng)
        kd = _const_like(x, k)
        rx, rk = r(x), r(kd)
        m = min(rx.value, rk.value)
        if _skip(rx, rk) or m == 0:
            rep.skipped += 1
            continue
        level = float(rng.uniform(0.0, 10.0)) if math.isinf(m) else m * float(rng.uniform(0.05, 1.25))
        if level <= 0 or not (acceptance_member(x, level, r) and acceptance_member(kd, level, r)):
            rep.skipped += 1  # empty premise
            continue
        mix = _mix(x, k, lam)
        if r(mix).censored:
            rep.skipped += 1
        elif not acceptance_member(mix, max(level - SLACK, 1e-300), r):
            rep.record(level - r(mix).value,
                       {"trial": t, "X": _payload(x), "k": k, "lam": lam, "level": level})
    return rep.finish()


def check_scale_invariance(r: RankingMetric, s: DistSampler, trials: int,
                           seed: int | None = None) -> PropertyReport:
    """``r(a X) = r(X)`` for ``a > 0`` (relative slack)."""
    seed = s.seed if seed is None else seed
    rng = s.rng(seed)
    rep = PropertyReport("scale_invariance", r.name, trials, seed)
    for t in range(trials):
        x = s.draw(rng, r.domain)
        a = float(np.exp(rng.uniform(-3.0, 3.0)))
        rx, ra = r(x), r(ScenarioDist(a * x.outcomes, x.probabilities))
        if _skip(rx, ra):
            rep.skipped += 1
            continue
        if rx.value == ra.value:
            continue
        if abs(rx.value - ra.value) > SLACK * (1.0 + abs(rx.value)):
            rep.record(abs(rx.value - ra.value), {"trial": t, "X": _payload(x), "a": a})
    return rep.finish()


# ---------------------------------------------------------------------------
# built-in catalogue
# ---------------------------------------------------------------------------


def planted_violation_metric() -> RankingMetric:
    """Deliberately anti-monotone ``max(0, -E[X])`` for harness self-tests."""
    return RankingMetric(
        "planted:anti-monotone",
        lambda d: MetricValue(max(0.0, -expectation(d)), "planted"),
        {"monotone"},
    )


# cash shifts for which each bibliometric family is cash-subadditive on
# nonnegative profiles; None means no claim
SUBADDITIVE_K = {"h": (0.0, 6.0), "h2": (1.0, 6.0), "w": (0.0, 6.0)}


def subadditive_k_range(fam: bib.PerfCurveFamily):
    if fam.kind == "h_alpha":
        return (0.0, 6.0) if fam.alpha > 1 else None
    return SUBADDITIVE_K.get(fam.kind)


def builtin_metrics() -> list[RankingMetric]:
    """Every built-in metric in its default configuration."""
    shift_cvar = RiskFamily.shift(lambda d: cvar_historical(d, 0.05), "shift:cvar:0.05")
    return [
        glr_metric(),
        omega_metric(),
        raroc_metric(),
        lambda_var_metric(LambdaFn.constant(0.5), "lvar:const:0.5"),
        lambda_var_metric(LambdaFn.two_step(0.55, 0.65, 0.0), "lvar:two_step:0.55:0.65:0"),
        lambda_var_metric(LambdaFn.two_step(0.65, 0.55, 0.0), "lvar:two_step:0.65:0.55:0"),
        certainty_equiv_metric(UtilityFn.piecewise_linear(0.0, 0.1), "ce:plinear:0:0.1"),
        certainty_equiv_metric(UtilityFn.identity(), "ce:identity"),
        family_metric(shift_cvar, tol=1e-12, properties=("monotone", "cash_quasiconcave",
                                              "cash_subadditive", "cash_additive_on_support"),
                      name="family:shift:cvar:0.05"),
        bib.srm_metric(bib.PerfCurveFamily.h()),
        bib.srm_metric(bib.PerfCurveFamily.h2()),
        bib.srm_metric(bib.PerfCurveFamily.h_alpha(0.5)),
        bib.srm_metric(bib.PerfCurveFamily.h_alpha(2.0)),
        bib.srm_metric(bib.PerfCurveFamily.w()),
    ]


def _family_of(metric: RankingMetric):
    kind = metric.name.split(":")[0]
    if kind == "h_alpha":
        return bib.PerfCurveFamily.h_alpha(float(metric.name.split(":")[1]))
    return bib.PerfCurveFamily(kind)


def run_declared_suites(metric: RankingMetric, s: DistSampler, trials: int,
                        seed: int) -> list[PropertyReport]:
    """Run every suite implied by the metric's declared properties."""
    props = metric.declared_properties
    out = []
    if "monotone" in props:
        out.append(check_monotonicity(metric, s, trials, seed))
    if "cash_quasiconcave" in props:
        out.append(check_cash_quasiconcavity(metric, s, trials, seed))
        out.append(check_level_sets(metric, s, trials, seed))
    if "quasiconcave" in props:
        out.append(check_quasiconcavity(metric, s, trials, seed))
    if "scale_invariant" in props and metric.domain == "dist":
        out.append(check_scale_invariance(metric, s, trials, seed))
    if metric.domain == "profile":
        k_range = subadditive_k_range(_family_of(metric))
        if k_range is not None:
            out.append(check_cash_subadditivity(metric, s, trials, seed=seed,
                                                k_range=k_range))
    else:
        if "cash_subadditive" in props:
            out.append(check_cash_subadditivity(metric, s, trials, seed=seed))
        if "cash_additive_on_support" in props:
            out.append(check_cash_subadditivity(metric, s, trials, on_support=True,
                                                seed=seed, additive=True))
    return out


def verify_builtins(trials: int, seeds=(1,), sampler: DistSampler | None = None,
                    falsification_budget: int = 100_000):
    """Declared-property suites for every built-in plus the Omega falsification.

    Returns ``(must_hold, informational)`` report lists.
    """
    s = sampler or DistSampler()
    must, info = [], []
    for seed in seeds:
        for m in builtin_metrics():
            must.extend(run_declared_suites(m, s, trials, seed))
        info.append(check_quasiconcavity(omega_metric(), s, falsification_budget,
                                         seed, falsify=True))
    return must, info
