"""Empirical lab for the label-query (pool-based) side of the story.

Three probes: a near-isometry statistic for sampled row subsets of a
Gaussian pool, the probability that a random unit target direction puts
an entire subset on the negative side, and an adaptive query game where
strategies spend label queries hunting for minority-class pool points.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .geometry import Halfspace

__all__ = [
    "Pool",
    "RandomOrder",
    "GreedyDirection",
    "OracleAided",
    "near_isometry_stat",
    "negative_capture_prob",
    "play_query_game",
]


@dataclass
class Pool:
    """m i.i.d. Gaussian points with labels from a hidden halfspace.

    Labels are deterministic (realizable setting) and cached; revealing
    one is the unit of cost in the query game.
    """

    points: np.ndarray
    target: Halfspace
    revealed: set = field(default_factory=set)

    def __post_init__(self):
        self._labels = np.asarray(self.target(self.points))

    @property
    def size(self) -> int:
        return self.points.shape[0]

    def reveal(self, i: int) -> int:
        if i in self.revealed:
            raise ValueError(f"index {i} already revealed")
        self.revealed.add(i)
        return int(self._labels[i])


def near_isometry_stat(
    points: np.ndarray, k: int, tuples: int, rng: np.random.Generator
) -> float:
    """max over sampled k-row subsets A of ||A A^T - d I||_2 / d.

    Small values certify that every sampled subset is nearly orthogonal
    with rows of norm about sqrt(d).  Sampling is a one-sided check; the
    exhaustive subset count is astronomical.
    """
    if isinstance(points, Pool):
        points = points.points
    points = np.asarray(points, dtype=float)
    m, d = points.shape
    if not (1 <= k <= min(m, d)):
        raise ValueError("need 1 <= k <= min(m, d)")
    if tuples < 1:
        raise ValueError("need at least one sampled tuple")
    worst = 0.0
    eye = np.eye(k)
    for _ in range(tuples):
        idx = rng.choice(m, size=k, replace=False)
        A = points[idx]
        gram = A @ A.T - d * eye
        # spectral norm from the k x k eigensystem, never the d x d one
        top = float(np.max(np.abs(np.linalg.eigvalsh(gram))))
        worst = max(worst, top / d)
    return worst


def negative_capture_prob(
    A: np.ndarray, t_star: float, trials: int, rng: np.random.Generator
) -> float:
    """Monte Carlo probability that a uniform-sphere direction labels
    every row of A negative, for a halfspace with threshold t_star."""
    A = np.atleast_2d(np.asarray(A, dtype=float))
    d = A.shape[1]
    W = rng.standard_normal((trials, d))
    W /= np.linalg.norm(W, axis=1, keepdims=True)
    margins = W @ A.T + t_star
    return float(np.mean(np.all(margins < 0, axis=1)))


class RandomOrder:
    """Reveals pool points in a random order."""

    def __init__(self, rng: np.random.Generator):
        self._rng = rng
        self._order = None
        self._pos = 0

    def next(self, pool: Pool, negatives: list[int]) -> int:
        if self._order is None:
            self._order = self._rng.permutation(pool.size)
        while self._pos < pool.size:
            i = int(self._order[self._pos])
            self._pos += 1
            if i not in pool.revealed:
                return i
        raise RuntimeError("pool exhausted")


class GreedyDirection:
    """Chases the mean of the negatives found so far.

    Until a first negative shows up it behaves like RandomOrder; after
    that it reveals the unrevealed point with the largest projection on
    the running mean of negative points.
    """

    def __init__(self, rng: np.random.Generator):
        self._fallback = RandomOrder(rng)

    def next(self, pool: Pool, negatives: list[int]) -> int:
        if not negatives:
            return self._fallback.next(pool, negatives)
        direction = np.mean(pool.points[negatives], axis=0)
        scores = pool.points @ direction
        for i in pool.revealed:
            scores[i] = -np.inf
        return int(np.argmax(scores))


class OracleAided:
    """White-box cheat baseline: reveals by true margin, most negative first."""

    def next(self, pool: Pool, negatives: list[int]) -> int:
        scores = pool.target.margins(pool.points)
        for i in pool.revealed:
            scores[i] = np.inf
        return int(np.argmin(scores))


def play_query_game(
    pool: Pool, strategy, target_negatives: int, budget: int
) -> tuple[int, int]:
    """Run the strategy until enough negatives are found or the budget
    runs out; returns (negatives_found, queries_used)."""
    if budget < 1:
        raise ValueError("budget must be positive")
    negatives: list[int] = []
    queries = 0
    while len(negatives) < target_negatives and queries < budget:
        if len(pool.revealed) >= pool.size:
            break
        i = strategy.next(pool, negatives)
        label = pool.reveal(i)
        queries += 1
        if label == -1:
            negatives.append(i)
    return len(negatives), queries
