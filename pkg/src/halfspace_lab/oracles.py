"""Simulated labeling functions and query oracles.

A LabelSource is the experiment's ground truth: a (possibly randomized)
labeling rule built around a target halfspace.  A MembershipOracle wraps
a source with an exact query ledger; every labeled point costs exactly
one ledger increment.  The evaluation channel (estimate_error) and the
small-class sampler keep their own counters so reported query
complexity reflects only learner decisions.

WhiteBoxView exposes ground-truth diagnostics (angles, localized
thresholds, true error).  It exists for tests and reports only; learner
code never receives one.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .geometry import (
    AngleDecomposition,
    Halfspace,
    decompose,
    halfspace_bias,
    sign_labels,
    sqrt_localization_apply,
)
from .rng import substream

__all__ = [
    "LabelSource",
    "CleanLabels",
    "RandomFlip",
    "BoundaryBand",
    "RegionFlip",
    "MembershipOracle",
    "SmallClassOracle",
    "SmallClassUnreachable",
    "WhiteBoxView",
    "localized_query",
    "localized_query_batch",
    "smoothed_query",
    "smoothed_query_batch",
    "estimate_error",
]


class LabelSource:
    """Randomized labeling rule y(x) with a known optimal halfspace error."""

    target: Halfspace

    @property
    def dim(self) -> int:
        return self.target.dim

    @property
    def opt(self) -> float:
        raise NotImplementedError

    def sample_labels(self, X: np.ndarray, rng: np.random.Generator) -> np.ndarray:
        """Fresh label samples for the rows of X.  Memoryless: repeated
        calls at the same point are independent draws."""
        raise NotImplementedError


@dataclass
class CleanLabels(LabelSource):
    target: Halfspace

    @property
    def opt(self) -> float:
        return 0.0

    def sample_labels(self, X: np.ndarray, rng: np.random.Generator) -> np.ndarray:
        return np.asarray(self.target(np.atleast_2d(X)))


@dataclass
class RandomFlip(LabelSource):
    """Each label flipped independently with probability ``rate`` < 1/2."""

    target: Halfspace
    rate: float

    def __post_init__(self):
        if not (0.0 <= self.rate < 0.5):
            raise ValueError("flip rate must lie in [0, 1/2)")

    @property
    def opt(self) -> float:
        return self.rate

    def sample_labels(self, X: np.ndarray, rng: np.random.Generator) -> np.ndarray:
        X = np.atleast_2d(X)
        clean = np.asarray(self.target(X))
        flips = rng.random(clean.shape) < self.rate
        return np.where(flips, -clean, clean)


@dataclass
class BoundaryBand(LabelSource):
    """Deterministically flips labels in the margin band |w.x + t| <= band.

    The stress case: all the noise sits exactly where localization
    queries concentrate.
    """

    target: Halfspace
    band: float

    def __post_init__(self):
        if self.band <= 0:
            raise ValueError("band half-width must be positive")

    @property
    def opt(self) -> float:
        # mass of the band: Phi(-t + band) - Phi(-t - band)
        return halfspace_bias(self.target.t - self.band) - halfspace_bias(self.target.t + self.band)

    def sample_labels(self, X: np.ndarray, rng: np.random.Generator) -> np.ndarray:
        X = np.atleast_2d(X)
        margins = self.target.margins(X)
        clean = sign_labels(margins)
        return np.where(np.abs(margins) <= self.band, -clean, clean)


@dataclass
class RegionFlip(LabelSource):
    """Flips labels on an arbitrary region; opt must be supplied (or
    estimated externally) since the predicate is a black box."""

    target: Halfspace
    region: Callable[[np.ndarray], np.ndarray]
    region_mass: float = float("nan")

    @property
    def opt(self) -> float:
        return self.region_mass

    def sample_labels(self, X: np.ndarray, rng: np.random.Generator) -> np.ndarray:
        X = np.atleast_2d(X)
        clean = np.asarray(self.target(X))
        inside = np.asarray(self.region(X), dtype=bool)
        return np.where(inside, -clean, clean)


@dataclass
class MembershipOracle:
    """Label access with an exact ledger: one increment per labeled point."""

    source: LabelSource
    seed: int
    ledger: int = 0
    _rng: np.random.Generator = field(init=False, repr=False)
    _gauss: np.random.Generator = field(init=False, repr=False)

    def __post_init__(self):
        self._rng = substream(self.seed, "oracle-labels")
        self._gauss = substream(self.seed, "oracle-gaussian")

    @property
    def dim(self) -> int:
        return self.source.dim

    def query(self, x: np.ndarray) -> int:
        x = np.asarray(x, dtype=float)
        if not np.all(np.isfinite(x)):
            raise ValueError("query point must be finite")
        self.ledger += 1
        return int(self.source.sample_labels(x[None, :], self._rng)[0])

    def query_batch(self, X: np.ndarray) -> np.ndarray:
        """Labels for n points at a cost of n ledger increments."""
        X = np.atleast_2d(np.asarray(X, dtype=float))
        self.ledger += X.shape[0]
        return self.source.sample_labels(X, self._rng)

    def gaussian_points(self, n: int) -> np.ndarray:
        """Fresh standard Gaussian points (no ledger cost until queried)."""
        return self._gauss.standard_normal((n, self.source.dim))


def localized_query(oracle: MembershipOracle, v: np.ndarray, s: float, sigma: float, z: np.ndarray) -> int:
    """Label at A^{1/2} z - s v with A = I - (1 - sigma^2) v v^T."""
    if not (0.0 < sigma < 1.0):
        raise ValueError("sigma must lie in (0, 1)")
    return oracle.query(sqrt_localization_apply(v, sigma, z) - s * np.asarray(v, dtype=float))


def localized_query_batch(oracle: MembershipOracle, v: np.ndarray, s: float, sigma: float, Z: np.ndarray) -> np.ndarray:
    if not (0.0 < sigma < 1.0):
        raise ValueError("sigma must lie in (0, 1)")
    return oracle.query_batch(sqrt_localization_apply(v, sigma, Z) - s * np.asarray(v, dtype=float))


def smoothed_query(oracle: MembershipOracle, x0: np.ndarray, rho: float, z: np.ndarray) -> int:
    """Label of the smoothed point sqrt(1 - rho^2) x0 + rho z."""
    if not (0.0 < rho <= 1.0):
        raise ValueError("rho must lie in (0, 1]")
    shift = math.sqrt(max(0.0, 1.0 - rho * rho))
    return oracle.query(shift * np.asarray(x0, dtype=float) + rho * np.asarray(z, dtype=float))


def smoothed_query_batch(oracle: MembershipOracle, x0: np.ndarray, rho: float, Z: np.ndarray) -> np.ndarray:
    if not (0.0 < rho <= 1.0):
        raise ValueError("rho must lie in (0, 1]")
    shift = math.sqrt(max(0.0, 1.0 - rho * rho))
    return oracle.query_batch(shift * np.asarray(x0, dtype=float) + rho * np.asarray(Z, dtype=float))


class SmallClassUnreachable(RuntimeError):
    """Rejection loop exhausted its attempt cap without a negative point."""


@dataclass
class SmallClassOracle:
    """Sampler of x ~ N(0, I) conditioned on y(x) = -1, by rejection.

    Calls are counted in ``draws``, not in any membership ledger: the
    oracle models an external supply of minority-class examples.
    """

    source: LabelSource
    seed: int
    attempt_cap: int = 100_000_000
    draws: int = 0
    _rng: np.random.Generator = field(init=False, repr=False)

    def __post_init__(self):
        self._rng = substream(self.seed, "small-class")

    def draw(self) -> np.ndarray:
        return self.draw_batch(1)[0]

    def draw_batch(self, n: int) -> np.ndarray:
        """n conditional samples; raises SmallClassUnreachable past the cap."""
        out = np.empty((n, self.source.dim))
        got = 0
        attempts = 0
        # batch proposals geometrically: cheap when p is moderate, still
        # few passes when p is tiny
        chunk = max(256, n)
        while got < n:
            if attempts >= self.attempt_cap:
                raise SmallClassUnreachable(
                    f"no negative-label point after {attempts} proposals"
                )
            chunk = min(chunk, self.attempt_cap - attempts)
            X = self._rng.standard_normal((chunk, self.source.dim))
            y = self.source.sample_labels(X, self._rng)
            attempts += chunk
            hits = X[y == -1]
            take = min(n - got, hits.shape[0])
            out[got:got + take] = hits[:take]
            got += take
            chunk = min(4 * chunk, 1 << 20)
        self.draws += n
        return out


def estimate_error(source: LabelSource, h: Halfspace, m: int, seed: int, tag: str = "eval") -> float:
    """Monte Carlo disagreement of h against the labeling rule.

    Evaluation channel: draws its own points and labels, touching no
    membership ledger.  Standard error is at most 1/(2 sqrt(m)).
    """
    if m < 1:
        raise ValueError("need at least one sample")
    rng = substream(seed, tag)
    X = rng.standard_normal((m, source.dim))
    y = source.sample_labels(X, rng)
    return float(np.mean(np.asarray(h(X)) != y))


@dataclass
class WhiteBoxView:
    """Ground-truth diagnostics for tests and reports only."""

    source: LabelSource

    @property
    def target(self) -> Halfspace:
        return self.source.target

    @property
    def opt(self) -> float:
        return self.source.opt

    def angle_to(self, w: np.ndarray) -> float:
        a = float(np.clip(np.dot(self.target.w, np.asarray(w, dtype=float)), -1.0, 1.0))
        return math.acos(a)

    def half_angle_sine(self, w: np.ndarray) -> float:
        """sin(theta(w, w*)/2), computed as ||w - w*|| / 2 for precision near 0."""
        return 0.5 * float(np.linalg.norm(self.target.w - np.asarray(w, dtype=float)))

    def decompose_against(self, w: np.ndarray) -> AngleDecomposition:
        return decompose(self.target.w, np.asarray(w, dtype=float))

    def localized_threshold(self, w: np.ndarray, sigma: float, t_tilde: float) -> float:
        """The hidden normalized threshold of the localized target:
        (t* - a t~) / (sigma sqrt(a^2 + b^2 / sigma^2))."""
        dec = self.decompose_against(w)
        denom = sigma * math.sqrt(dec.a ** 2 + (dec.b / sigma) ** 2)
        return (self.target.t - dec.a * t_tilde) / denom

    def true_error(self, h: Halfspace, m: int = 200_000, seed: int = 0) -> float:
        return estimate_error(self.source, h, m, seed, "whitebox-eval")
