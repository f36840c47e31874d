import math

import numpy as np
import pytest

from ranking_metrics.metrics import (
    FamilyNotIncreasingError,
    MetricValue,
    RankingMetric,
    acceptance_member,
    certainty_equiv_metric,
    glr,
    glr_metric,
    lambda_var_metric,
    omega,
    omega_metric,
    r_certainty_equiv,
    r_from_family,
    r_lambda_var,
    raroc,
)
from ranking_metrics.risk import (
    LambdaFn,
    RiskFamily,
    UtilityFn,
    certainty_equiv_rho,
    cvar_historical,
    evar_expectile,
)
from ranking_metrics.scenarios import ScenarioDist, expectation, neg_part_expectation

PAIR = ScenarioDist([-1, 3])
SYM = ScenarioDist([-2, -1, 1, 2])


def sample(rng, n_max=15):
    n = int(rng.integers(2, n_max))
    x = rng.normal(0.3, 2, n)
    if rng.random() < 0.5:
        return ScenarioDist(x)
    p = rng.dirichlet(np.ones(n))
    return ScenarioDist(x, p / p.sum())


def test_metric_value_rejects_negative_and_nan():
    with pytest.raises(ValueError):
        MetricValue(-1.0)
    with pytest.raises(ValueError):
        MetricValue(math.nan)
    assert MetricValue(math.inf).is_infinite
    assert MetricValue(5.0, "right-censored at bracket_max").censored


def test_unknown_property_rejected():
    with pytest.raises(ValueError):
        RankingMetric("x", lambda d: MetricValue(0.0), {"convex"})


def test_glr_examples():
    assert glr(PAIR).value == 2
    assert glr(ScenarioDist([-3, 1])).value == 0
    assert glr(ScenarioDist([0.5, 2])).value == math.inf


def test_omega_examples():
    assert omega(PAIR).value == 3
    assert omega(SYM).value == 1
    assert omega(ScenarioDist([0, 1])).value == math.inf
    assert omega(ScenarioDist([0, 1]), "zero").value == 0
    with pytest.raises(ValueError):
        omega(PAIR, "nan")


def test_omega_zero_mode_is_not_monotone():
    # {0, 3} dominates {-1, 3} but scores lower under the zero normalization
    low, high = ScenarioDist([-1, 3]), ScenarioDist([0, 3])
    assert omega(low, "zero").value > omega(high, "zero").value
    assert "monotone" not in omega_metric("zero").declared_properties
    assert "quasiconcave" not in omega_metric().declared_properties


def test_raroc_branches():
    rho = lambda d: cvar_historical(d, 0.5)
    assert raroc(PAIR, rho).value == pytest.approx(1.0)
    assert raroc(ScenarioDist.constant(3.0), rho).value == math.inf
    r = raroc(ScenarioDist([-3, 1]), rho)
    assert r.value == 0 and "E[X] <= 0" in r.provenance


def test_r_lambda_var_examples():
    assert r_lambda_var(ScenarioDist([1, 2, 3, 4]), LambdaFn.constant(0.3)).value == 2
    assert r_lambda_var(SYM, LambdaFn.two_step(0.25, 0.75, 0.0)).value == 0
    assert r_lambda_var(ScenarioDist.constant(2.5), LambdaFn.two_step(0.3, 0.6, 1.0)).value == 2.5
    und = r_lambda_var(SYM, LambdaFn.constant(1.0))
    assert und.value == 0 and "undefined" in und.provenance


def test_r_certainty_equiv_examples():
    assert r_certainty_equiv(PAIR, UtilityFn.identity()).value == 1
    assert r_certainty_equiv(ScenarioDist([-1, 1]), UtilityFn.piecewise_linear(0, 0.1)).value == 0
    for c in (-2.0, 0.0, 1.5):
        assert r_certainty_equiv(ScenarioDist.constant(c),
                                 UtilityFn.piecewise_linear(0.3, 0.2)).value == pytest.approx(
            max(0.0, c), abs=1e-12)


def test_acceptance_member_examples():
    g = glr_metric()
    assert acceptance_member(PAIR, 2.0, g)
    assert not acceptance_member(PAIR, 2.01, g)
    assert acceptance_member(ScenarioDist([1, 2]), 1e300, g)
    with pytest.raises(ValueError):
        acceptance_member(PAIR, 0.0, g)


def test_omega_minus_glr_identity(rng):
    checked = 0
    while checked < 2000:
        d = sample(rng)
        if expectation(d) > 0 and neg_part_expectation(d) > 0:
            assert abs(omega(d).value - glr(d).value - 1.0) <= 1e-12 * max(1.0, omega(d).value)
            checked += 1


def test_scale_invariance_of_ratios(rng):
    rho = lambda d: cvar_historical(d, 0.1)
    for _ in range(500):
        d = sample(rng)
        a = float(np.exp(rng.uniform(-3, 3)))
        da = ScenarioDist(a * d.outcomes, d.probabilities)
        for f in (glr, omega, lambda x: raroc(x, rho)):
            v, va = f(d).value, f(da).value
            assert v == va or abs(v - va) <= 1e-9 * (1 + abs(v))


# --- representation engine -------------------------------------------------------

def test_family_closed_form_mean():
    fam = RiskFamily(lambda x, d: x - expectation(d), "x - E")
    assert r_from_family(PAIR, fam).value == pytest.approx(1.0, abs=1e-8)


@pytest.mark.parametrize("rho", [
    lambda d: cvar_historical(d, 0.05),
    lambda d: evar_expectile(d, 0.2),
    lambda d: certainty_equiv_rho(d, UtilityFn.piecewise_linear(0.0, 0.1)),
])
def test_shift_family_reproduces_truncated_risk(rho, rng):
    fam = RiskFamily.shift(rho)
    for _ in range(200):
        d = sample(rng)
        got = r_from_family(d, fam).value
        assert got == pytest.approx(max(0.0, -rho(d)), abs=1e-8)


def test_reward_risk_family_reproduces_raroc(rng):
    rho = lambda d: cvar_historical(d, 0.05)
    fam = RiskFamily.reward_risk(rho)
    used = 0
    for _ in range(400):
        d = sample(rng)
        if not -expectation(d) <= rho(d) or rho(d) <= 0:
            continue
        want = raroc(d, rho).value
        assert r_from_family(d, fam).value == pytest.approx(want, abs=1e-6 * (1 + want))
        used += 1
    assert used > 100


def test_family_right_censoring():
    fam = RiskFamily.shift(lambda d: cvar_historical(d, 0.05))
    v = r_from_family(ScenarioDist.constant(50.0), fam, bracket_max=10.0)
    assert v.value == 10.0 and v.censored


def test_family_not_increasing_detected():
    fam = RiskFamily(lambda x, d: -x - expectation(d), "decreasing")
    with pytest.raises(FamilyNotIncreasingError):
        r_from_family(PAIR, fam)
    wobble = RiskFamily(lambda x, d: math.sin(x) - 0.5, "wobbly")
    with pytest.raises(FamilyNotIncreasingError):
        r_from_family(PAIR, wobble, bracket_max=7.0)


def test_expectile_family_schedules_for_omega(rng):
    # p = 1/(1+x) reproduces Omega, p = 1/(2+x) its excess over one (= GLR)
    omega_fam = RiskFamily.expectile()
    shifted_fam = RiskFamily.expectile(lambda x: 1.0 / (2.0 + x))
    for _ in range(100):
        d = sample(rng)
        if neg_part_expectation(d) == 0:
            continue
        om = omega(d).value
        assert r_from_family(d, omega_fam).value == pytest.approx(om, abs=1e-6 * (1 + om))
        assert r_from_family(d, shifted_fam).value == pytest.approx(
            max(0.0, om - 1.0), abs=1e-6 * (1 + om))


def test_declared_properties():
    assert "cash_subadditive" in lambda_var_metric(LambdaFn.two_step(0.7, 0.3, 0)).declared_properties
    assert "cash_subadditive" not in lambda_var_metric(
        LambdaFn.two_step(0.3, 0.7, 0)).declared_properties
    assert "scale_invariant" not in certainty_equiv_metric(UtilityFn.identity()).declared_properties
