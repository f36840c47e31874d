import numpy as np
import pytest
from sklearn.base import clone

from ranking_metrics.estimators import RankingPortfolio
from ranking_metrics.keys import parse_metric_key

TWO = np.array([[0.01, -0.05], [0.01, 0.05]])


def test_get_set_params_and_clone():
    est = RankingPortfolio(metric="glr", n_starts=3)
    assert est.get_params()["metric"] == "glr"
    est.set_params(n_starts=4)
    assert clone(est).n_starts == 4


def test_fit_predict_score():
    est = RankingPortfolio(metric="lvar:const:0.5", n_starts=8).fit(TWO)
    assert np.allclose(est.weights_, [0, 1], atol=1e-3)
    assert est.value_ == pytest.approx(0.05)
    assert est.predict(TWO) == pytest.approx([-0.05, 0.05], abs=1e-3)
    assert est.score(TWO) == pytest.approx(0.05, abs=1e-6)
    with pytest.raises(ValueError):
        est.predict(np.ones((2, 3)))


def test_metric_object_and_profile_metric():
    rng = np.random.default_rng(0)
    R = rng.normal(0.003, 0.01, (30, 3))
    est = RankingPortfolio(metric=parse_metric_key("h"), n_starts=3).fit(R)
    assert est.score(R) == est.value_


def test_unfitted_raises():
    from sklearn.exceptions import NotFittedError
    with pytest.raises(NotFittedError):
        RankingPortfolio().predict(TWO)
