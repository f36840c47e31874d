"""scikit-learn style wrapper around :func:`maximize_metric`."""

from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator
from sklearn.utils.validation import check_array, check_is_fitted

from .keys import parse_metric_key
from .metrics import RankingMetric
from .optimize import maximize_metric
from .scenarios import ScenarioDist


class RankingPortfolio(BaseEstimator):
    """Portfolio weights that maximise a ranking metric on a return panel.

    Parameters
    ----------
    metric : str or RankingMetric
        Metric key (see :mod:`ranking_metrics.keys`) or metric object.
    n_starts : int
        Random Nelder-Mead starts; the simplex vertices are always added.
    random_state : int
        Seed for the starting points.
    tol : float
        Relative width of the tie band whose optima are averaged.

    Attributes
    ----------
    weights_ : ndarray of shape (n_assets,)
    value_ : float
        Metric value of the fitted weights on the training panel.
    result_ : OptResult
    """

    def __init__(self, metric="lvar:const:0.5", n_starts=100, random_state=0, tol=1e-9):
        self.metric = metric
        self.n_starts = n_starts
        self.random_state = random_state
        self.tol = tol

    def _metric(self, X=None) -> RankingMetric:
        if isinstance(self.metric, RankingMetric):
            return self.metric
        pooled = ScenarioDist(X.ravel()) if X is not None else None
        return parse_metric_key(self.metric, pooled=pooled)

    def fit(self, X, y=None):
        """X is a [time x asset] matrix of simple returns."""
        X = check_array(X, dtype=float, ensure_min_samples=1)
        self.metric_ = self._metric(X)
        self.result_ = maximize_metric(X, self.metric_, n_starts=self.n_starts,
                                       seed=self.random_state, tol=self.tol)
        self.weights_ = np.asarray(self.result_.best_weights.weights)
        self.value_ = float(self.result_.best_value.value)
        self.n_features_in_ = X.shape[1]
        return self

    def predict(self, X):
        """Portfolio return per row of ``X``."""
        check_is_fitted(self, "weights_")
        X = check_array(X, dtype=float)
        if X.shape[1] != self.n_features_in_:
            raise ValueError(f"expected {self.n_features_in_} assets, got {X.shape[1]}")
        return X @ self.weights_

    def score(self, X, y=None):
        """Metric value of the fitted portfolio on ``X``."""
        check_is_fitted(self, "weights_")
        if self.metric_.domain == "profile":
            from .optimize import make_objective
            X = check_array(X, dtype=float)
            return float(make_objective(X, self.metric_)(self.weights_).value)
        return float(self.metric_(ScenarioDist(self.predict(X))).value)
