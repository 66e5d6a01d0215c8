"""Query-frugal statistical estimators.

Three tools the learner leans on everywhere: a geometric-ladder bias
estimator that spends O~(1/p) queries to bracket the minority-class
mass p, a three-way Hoeffding window check for probabilities, and the
empirical (optionally projected) Chow vector estimator that doubles as
the gradient oracle.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np

__all__ = [
    "BiasEstimate",
    "BudgetExceeded",
    "estimate_bias_doubling",
    "WindowVerdict",
    "WindowResult",
    "probability_window_check",
    "window_check_samples",
    "empirical_projected_chow",
]

LADDER_BASE = 4.0 / 5.0
# stop rule compares the empirical negative frequency against 5/6 of
# the current ladder level
LADDER_THRESHOLD_FACTOR = 5.0 / 6.0
# reported bracket: p in [p_hat, BRACKET_FACTOR * p_hat]
BRACKET_FACTOR = 4.0
# returned estimate sits below the stopping level by this factor so the
# bracket covers the stopping-rule slack under boosting noise
RETURN_SHRINK = 0.7


class BudgetExceeded(RuntimeError):
    """A query budget cap was hit; carries whatever was known so far."""

    def __init__(self, message: str, partial=None):
        super().__init__(message)
        self.partial = partial


@dataclass(frozen=True)
class BiasEstimate:
    """Either a multiplicative bracket on the bias or a 'small' verdict.

    verdict "bracket": the estimator asserts p_hat <= p <= 4 * p_hat.
    verdict "small": the estimator asserts p <= C_small * epsilon.
    """

    verdict: str
    p_hat: float
    queries_used: int

    @property
    def is_small(self) -> bool:
        return self.verdict == "small"


def estimate_bias_doubling(
    oracle,
    epsilon: float,
    delta: float,
    c_small: float = 4.0,
    samples_per_level: float = 160.0,
    floor_per_level: int = 1000,
    query_cap: int | None = None,
) -> BiasEstimate:
    """Bracket the negative-label mass p by descending a geometric ladder.

    Levels p_hat_i = (4/5)^i / 2.  At each level, take
    floor + samples_per_level / p_hat fresh Gaussian queries per
    repetition, compare the negative frequency against (5/6) p_hat, and
    majority-boost over O(log 1/delta) repetitions.  Stop at the first
    passing level, or declare the bias small once the ladder descends
    below c_small * epsilon.
    """
    if not (0.0 < epsilon < 1.0 and 0.0 < delta < 1.0):
        raise ValueError("epsilon and delta must lie in (0, 1)")
    start = oracle.ledger
    reps = 2 * max(1, math.ceil(math.log(1.0 / delta))) + 1
    level = 0
    while True:
        p_hat = 0.5 * LADDER_BASE ** level
        if p_hat < c_small * epsilon:
            return BiasEstimate("small", p_hat, oracle.ledger - start)
        threshold = LADDER_THRESHOLD_FACTOR * p_hat
        n = floor_per_level + math.ceil(samples_per_level / p_hat)
        passes = 0
        for _ in range(reps):
            if query_cap is not None and oracle.ledger - start + n > query_cap:
                raise BudgetExceeded(
                    "bias estimation exceeded its query cap",
                    partial=BiasEstimate("small", p_hat, oracle.ledger - start),
                )
            labels = oracle.query_batch(oracle.gaussian_points(n))
            if np.mean(labels == -1) >= threshold:
                passes += 1
        if 2 * passes > reps:
            return BiasEstimate(
                "bracket", RETURN_SHRINK * p_hat, oracle.ledger - start
            )
        level += 1


@dataclass(frozen=True)
class WindowVerdict:
    IN_WINDOW = "in_window"
    OUTSIDE = "outside"
    INCONCLUSIVE = "inconclusive"


@dataclass(frozen=True)
class WindowResult:
    verdict: str
    p_emp: float
    samples: int

    def side(self, lo: float, hi: float) -> str:
        return "low" if self.p_emp < 0.5 * (lo + hi) else "high"


def window_check_samples(lo: float, hi: float, delta: float) -> int:
    return math.ceil(8.0 / (hi - lo) ** 2 * math.log(4.0 / delta))


def probability_window_check(
    sample: Callable[[int], np.ndarray],
    window: tuple[float, float],
    delta: float,
) -> WindowResult:
    """Three-way test of whether a Bernoulli(-1) rate lies in a window.

    ``sample(n)`` must return n fresh +-1 draws; the -1 frequency is the
    tested probability.  With margin = (hi - lo)/4: in-window verdicts
    require the empirical value to clear the window edges by margin/2,
    outside verdicts require it to leave the window entirely, and the
    band in between is reported as inconclusive so callers can re-probe
    rather than mis-decide.
    """
    lo, hi = window
    if not (0.0 < lo < hi < 1.0):
        raise ValueError("window must satisfy 0 < lo < hi < 1")
    n = window_check_samples(lo, hi, delta)
    labels = np.asarray(sample(n))
    p_emp = float(np.mean(labels == -1))
    margin = (hi - lo) / 4.0
    if lo + margin / 2.0 <= p_emp <= hi - margin / 2.0:
        verdict = WindowVerdict.IN_WINDOW
    elif p_emp <= lo or p_emp >= hi:
        verdict = WindowVerdict.OUTSIDE
    else:
        verdict = WindowVerdict.INCONCLUSIVE
    return WindowResult(verdict, p_emp, n)


def empirical_projected_chow(
    query_fn: Callable[[np.ndarray], np.ndarray],
    points: np.ndarray,
    exclude: np.ndarray | None = None,
) -> np.ndarray:
    """(1/m) sum of proj z_j * label_j over the supplied Gaussian z_j.

    ``query_fn`` maps an (m, d) batch of points to +-1 labels (and is
    expected to charge the oracle ledger).  With ``exclude`` given, the
    component along it is projected out of each z before averaging, so
    the result is orthogonal to ``exclude`` up to roundoff.
    """
    Z = np.atleast_2d(np.asarray(points, dtype=float))
    m = Z.shape[0]
    if m < 1:
        raise ValueError("need at least one sample")
    if exclude is not None:
        exclude = np.asarray(exclude, dtype=float)
        Zp = Z - np.outer(Z @ exclude, exclude)
    else:
        Zp = Z
    labels = np.asarray(query_fn(Z), dtype=float)
    g = Zp.T @ labels / m
    if exclude is not None:
        # kill the residual roundoff component explicitly
        g = g - np.dot(g, exclude) * exclude
    return g
