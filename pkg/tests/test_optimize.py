import numpy as np
import pytest

from ranking_metrics.keys import parse_metric_key
from ranking_metrics.metrics import MetricValue, RankingMetric
from ranking_metrics.optimize import (
    PortfolioWeights,
    grid_search,
    make_objective,
    maximize_metric,
    portfolio_returns,
    random_simplex,
)

TWO = np.array([[0.01, -0.05], [0.01, 0.05]])
ORACLE_KEYS = ["glr", "omega", "raroc:cvar:0.05", "lvar:const:0.5",
               "lvar:two_step:0.55:0.65:0", "h"]


def instances():
    rng = np.random.default_rng(11)
    yield "two", TWO
    yield "two-normal", rng.normal(0.002, 0.02, (40, 2))
    yield "three-normal", rng.normal([0.004, 0.001, 0.003], [0.03, 0.01, 0.02], (50, 3))
    yield "three-skew", rng.standard_t(4, (60, 3)) * 0.01 + 0.002


def test_weights_validation():
    with pytest.raises(ValueError):
        PortfolioWeights([0.5, 0.6])
    with pytest.raises(ValueError):
        PortfolioWeights([1.5, -0.5])
    assert len(PortfolioWeights([0.25, 0.75])) == 2


def test_portfolio_returns_examples():
    R = np.array([[0.02, 0.0], [0.04, 0.01]])
    assert portfolio_returns(R, [1, 0]).raw_outcomes.tolist() == [0.02, 0.04]
    assert portfolio_returns(R[:1], [0.5, 0.5]).outcomes.tolist() == [0.01]
    with pytest.raises(ValueError):
        portfolio_returns(R, [1.0])


def test_random_simplex():
    assert random_simplex(1, 3).tolist() == [1.0]
    for seed in range(50):
        w = random_simplex(7, seed).weights
        assert w.min() >= 0 and abs(w.sum() - 1) <= 1e-12
    assert random_simplex(5, 42).tolist() == random_simplex(5, 42).tolist()


def test_two_asset_fixture():
    res = maximize_metric(TWO, parse_metric_key("lvar:const:0.5"), n_starts=20, seed=0)
    assert np.allclose(res.best_weights.weights, [0, 1], atol=1e-3)
    assert res.best_value.value == pytest.approx(0.05, abs=1e-6)
    gv, gw = grid_search(TWO, parse_metric_key("lvar:const:0.5"))
    assert gv == pytest.approx(0.05) and gw.tolist() == [0, 1]


def test_constant_metric_averages_ties():
    flat = RankingMetric("flat", lambda d: MetricValue(0.7), {"monotone"})
    res = maximize_metric(TWO, flat, n_starts=5, seed=1)
    assert res.ties_averaged and res.best_value.value == 0.7


def test_single_asset():
    res = maximize_metric(np.array([[0.01], [0.02]]), parse_metric_key("glr"), n_starts=3)
    assert res.best_weights.tolist() == [1.0]


def test_best_value_is_recomputed():
    m = parse_metric_key("raroc:cvar:0.05")
    _, R = list(instances())[2]
    res = maximize_metric(R, m, n_starts=5, seed=2)
    assert res.best_value == m(portfolio_returns(R, res.best_weights))


@pytest.mark.parametrize("key", ORACLE_KEYS)
def test_oracle_and_vertex_dominance(key):
    m = parse_metric_key(key)
    for name, R in instances():
        res = maximize_metric(R, m, n_starts=10, seed=0)
        grid, _ = grid_search(R, m)
        if np.isinf(grid):
            assert np.isinf(res.best_value.value), name
        else:
            assert res.best_value.value >= grid - 1e-9 * (1 + abs(grid)), name
        obj = make_objective(R, m)
        vertices = [obj(np.eye(R.shape[1])[i]).value for i in range(R.shape[1])]
        assert res.best_value.value >= max(vertices), name


def test_deterministic_per_seed():
    m = parse_metric_key("omega")
    _, R = list(instances())[3]
    a = maximize_metric(R, m, n_starts=6, seed=5)
    b = maximize_metric(R, m, n_starts=6, seed=5)
    assert a.best_weights.tolist() == b.best_weights.tolist()
    assert a.best_value == b.best_value and a.metadata == b.metadata


def test_undefined_starts_are_restarted_then_dropped():
    never = RankingMetric("never", lambda d: MetricValue(0.0, "undefined"), set())
    with pytest.raises(ValueError, match="undefined at every start"):
        maximize_metric(TWO, never, n_starts=2, seed=0)


def test_student_t_raroc_in_optimizer():
    rng = np.random.default_rng(4)
    R = rng.standard_t(5, (80, 2)) * 0.01 + [0.003, 0.001]
    res = maximize_metric(R, parse_metric_key("raroc:tcvar:0.05"), n_starts=5, seed=0)
    assert res.best_value.value > 0
