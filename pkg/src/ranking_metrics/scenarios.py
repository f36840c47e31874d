"""Finite empirical distributions of a real-valued position.

A :class:`ScenarioDist` holds the outcomes of a profit-and-loss variable on a
finite scenario set together with their probabilities.  Outcomes are stored
sorted ascending; the permutation back to input order is kept so that
per-scenario alignment (e.g. time order of a return series) can be recovered.
"""

from __future__ import annotations

import numpy as np

PROB_TOL = 1e-12


class ScenarioDist:
    """Finite distribution of a real-valued position.

    Parameters
    ----------
    outcomes : array_like
        Payoff values, one per scenario.
    probabilities : array_like, optional
        Scenario probabilities.  Equal weights when omitted.

    Raises
    ------
    ValueError
        If the vectors are empty or of different lengths, a probability is not
        strictly positive, or probabilities do not sum to one within 1e-12.
    """

    __slots__ = ("_x", "_p", "_cdf", "_order", "_equal")

    def __init__(self, outcomes, probabilities=None):
        x = np.asarray(outcomes, dtype=float).ravel()
        if x.size == 0:
            raise ValueError("a scenario distribution needs at least one outcome")
        if not np.isfinite(x).all():
            raise ValueError("outcomes must be finite")
        if probabilities is None:
            p = np.full(x.size, 1.0 / x.size)
            equal = True
        else:
            p = np.asarray(probabilities, dtype=float).ravel()
            if p.shape != x.shape:
                raise ValueError(
                    f"outcomes ({x.size}) and probabilities ({p.size}) differ in length"
                )
            if (p <= 0).any():
                raise ValueError("every probability must be strictly positive")
            if abs(p.sum() - 1.0) > PROB_TOL:
                raise ValueError(f"probabilities sum to {p.sum()!r}, not 1")
            equal = bool((p == p[0]).all())
        order = np.argsort(x, kind="stable")
        self._set(x[order], p[order], order, equal)

    def _set(self, x, p, order, equal):
        x.flags.writeable = False
        p.flags.writeable = False
        order.flags.writeable = False
        self._x = x
        self._p = p
        self._order = order
        self._equal = equal
        self._cdf = None

    @classmethod
    def _from_sorted(cls, x, p, order, equal):
        # Trusted path for transforms that preserve the sort order.
        obj = cls.__new__(cls)
        obj._set(np.array(x, dtype=float), np.array(p, dtype=float),
                 np.array(order), equal)
        return obj

    @classmethod
    def from_sample(cls, sample):
        """Equal-weight distribution of a historical sample."""
        return cls(sample)

    @classmethod
    def constant(cls, c):
        """Degenerate distribution at ``c``."""
        return cls([c])

    @property
    def outcomes(self):
        """Outcomes sorted ascending (read-only view)."""
        return self._x

    @property
    def probabilities(self):
        """Probabilities aligned with :attr:`outcomes`."""
        return self._p

    @property
    def permutation(self):
        """Indices such that ``outcomes == raw_outcomes[permutation]``."""
        return self._order

    @property
    def raw_outcomes(self):
        """Outcomes in the order they were supplied."""
        raw = np.empty_like(self._x)
        raw[self._order] = self._x
        return raw

    @property
    def equal_weights(self):
        return self._equal

    @property
    def n(self):
        return self._x.size

    def __len__(self):
        return self._x.size

    def __repr__(self):
        return f"ScenarioDist(n={self.n}, min={self._x[0]:.6g}, max={self._x[-1]:.6g})"

    def cdf_at_outcomes(self):
        """P(X <= x_i) for every sorted outcome x_i (ties get the full atom)."""
        if self._cdf is None:
            n = self._x.size
            if self._equal:
                # k/n is correctly rounded; a running sum of 1/n is not.
                cum = np.arange(1, n + 1) / n
            else:
                cum = np.cumsum(self._p)
            cum[-1] = 1.0
            # right end of each tie block
            idx = np.searchsorted(self._x, self._x, side="right") - 1
            cdf = cum[idx]
            cdf.flags.writeable = False
            self._cdf = cdf
        return self._cdf

    def __add__(self, c):
        return affine(self, 1.0, float(c))

    def __radd__(self, c):
        return self.__add__(c)


def expectation(d: ScenarioDist) -> float:
    """Expected value of the position."""
    return float(np.dot(d.probabilities, d.outcomes))


def pos_part_expectation(d: ScenarioDist) -> float:
    """E[max(X, 0)]."""
    return float(np.dot(d.probabilities, np.maximum(d.outcomes, 0.0)))


def neg_part_expectation(d: ScenarioDist) -> float:
    """E[max(-X, 0)]."""
    return float(np.dot(d.probabilities, np.maximum(-d.outcomes, 0.0)))


def empirical_cdf(d: ScenarioDist, y):
    """P(X <= y); right-continuous step function of ``y``.

    ``y`` may be a scalar or an array.
    """
    k = np.searchsorted(d.outcomes, y, side="right")
    cum = np.concatenate(([0.0], d.cdf_at_outcomes()))
    # cdf_at_outcomes gives the block value, so indexing by the last element
    # of the block is exact.
    out = cum[k]
    return float(out) if np.ndim(out) == 0 else out


def quantile(d: ScenarioDist, alpha: float) -> float:
    """Lower quantile ``inf{y : P(X <= y) >= alpha}`` for ``0 < alpha < 1``."""
    if not 0.0 < alpha < 1.0:
        raise ValueError(f"quantile level must lie in (0, 1), got {alpha!r}")
    i = int(np.searchsorted(d.cdf_at_outcomes(), alpha, side="left"))
    return float(d.outcomes[min(i, d.n - 1)])


def affine(d: ScenarioDist, a: float, b: float) -> ScenarioDist:
    """Pointwise ``a*X + b`` for ``a >= 0``."""
    if a < 0:
        raise ValueError("affine map requires a >= 0 to preserve order")
    return ScenarioDist._from_sorted(a * d.outcomes + b, d.probabilities,
                                     d.permutation, d.equal_weights)


def mix_with_constant(d: ScenarioDist, lam: float, k: float) -> ScenarioDist:
    """Pointwise ``lam*X + (1 - lam)*k`` for ``lam`` in [0, 1]."""
    if not 0.0 <= lam <= 1.0:
        raise ValueError(f"mixing weight must lie in [0, 1], got {lam!r}")
    return affine(d, lam, (1.0 - lam) * k)
