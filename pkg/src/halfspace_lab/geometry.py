"""Closed-form Gaussian/halfspace primitives.

Everything here is a pure function of its arguments: halfspace bias and
its inverse, Chow vectors, angle decompositions, and the two exact
halfspace transforms (localization and smoothing) the learner is built
on.  Boundary ties resolve to +1 everywhere.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.special import erfc, log_ndtr

__all__ = [
    "Halfspace",
    "AngleDecomposition",
    "halfspace_bias",
    "threshold_for_bias",
    "komatsu_bounds",
    "chow_vector",
    "chow_norm",
    "disagreement_bound",
    "decompose",
    "orthonormal_to",
    "localize_halfspace",
    "sqrt_localization_apply",
    "smoothed_halfspace",
    "sign_labels",
    "angle_between",
]

_UNIT_TOL = 1e-9


def sign_labels(values: np.ndarray | float) -> np.ndarray | int:
    """Sign with the +1 tie convention: sign(0) := +1."""
    if np.isscalar(values):
        return 1 if values >= 0 else -1
    return np.where(np.asarray(values) >= 0, 1, -1)


def _as_unit(w: np.ndarray) -> np.ndarray:
    w = np.asarray(w, dtype=float)
    n = np.linalg.norm(w)
    if not np.isfinite(n) or abs(n - 1.0) > 1e-7:
        raise ValueError(f"expected a unit vector, got norm {n!r}")
    return w / n


@dataclass(frozen=True)
class Halfspace:
    """sign(w . x + t) with unit weight vector w and threshold t."""

    w: np.ndarray
    t: float

    def __post_init__(self):
        object.__setattr__(self, "w", _as_unit(self.w))
        if not np.isfinite(self.t):
            raise ValueError("threshold must be finite")

    @property
    def dim(self) -> int:
        return self.w.shape[0]

    def margins(self, X: np.ndarray) -> np.ndarray:
        X = np.asarray(X, dtype=float)
        return X @ self.w + self.t

    def __call__(self, X: np.ndarray) -> np.ndarray | int:
        """Labels in {-1, +1}; X may be a single point or an (n, d) batch."""
        X = np.asarray(X, dtype=float)
        if X.ndim == 1:
            return 1 if float(X @ self.w) + self.t >= 0 else -1
        return sign_labels(self.margins(X))

    def flipped(self) -> "Halfspace":
        """The complementary halfspace sign(-w . x - t)."""
        return Halfspace(-self.w, -self.t)


@dataclass(frozen=True)
class AngleDecomposition:
    """target = a * reference + b * u with u a unit vector orthogonal to reference.

    a = cos(theta) is stored instead of theta itself; b = sin(theta) >= 0.
    """

    a: float
    b: float
    u: np.ndarray

    @property
    def aligned(self) -> bool:
        return self.b == 0.0


def halfspace_bias(t: float) -> float:
    """Pr_{x ~ N(0,I)}(sign(w.x + t) = -1) = Phi(-t)."""
    if not np.isfinite(t):
        raise ValueError("threshold must be finite")
    # Phi(-t) = erfc(t / sqrt(2)) / 2; erfc keeps full relative accuracy
    # in the far tail, which matters since t can reach sqrt(log(1/eps)).
    return 0.5 * float(erfc(t / math.sqrt(2.0)))


def log_halfspace_bias(t: float) -> float:
    """log Phi(-t), stable arbitrarily far into the tail."""
    return float(log_ndtr(-t))


def threshold_for_bias(p: float, tol: float = 1e-6) -> float:
    """Inverse of halfspace_bias on (0, 1), by bisection to ``tol``."""
    if not (0.0 < p < 1.0):
        raise ValueError("bias must lie in (0, 1)")
    lo, hi = -40.0, 40.0
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        if halfspace_bias(mid) > p:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def komatsu_bounds(t: float) -> tuple[float, float]:
    """Two-sided Gaussian tail sandwich for halfspace_bias(t), t >= 0."""
    if t < 0:
        raise ValueError("komatsu_bounds requires t >= 0")
    c = math.sqrt(2.0 / math.pi) * math.exp(-t * t / 2.0)
    lower = c / (t + math.sqrt(t * t + 4.0))
    upper = c / (t + math.sqrt(t * t + 2.0))
    return lower, upper


def chow_norm(t: float) -> float:
    """Length of the Chow vector of a halfspace with threshold t."""
    return math.sqrt(2.0 / math.pi) * math.exp(-t * t / 2.0)


def chow_vector(h: Halfspace) -> np.ndarray:
    """E_{z ~ N(0,I)}[z h(z)] = sqrt(2/pi) exp(-t^2/2) w."""
    return chow_norm(h.t) * h.w


def angle_between(w1: np.ndarray, w2: np.ndarray) -> float:
    a = float(np.clip(np.dot(w1, w2), -1.0, 1.0))
    return math.acos(a)


def disagreement_bound(w1: np.ndarray, w2: np.ndarray, t: float) -> float:
    """Upper bound sin(theta)/2 * exp(-t^2/2) on the two halfspaces' disagreement mass."""
    a = float(np.clip(np.dot(w1, w2), -1.0, 1.0))
    sin_theta = math.sqrt(max(0.0, 1.0 - a * a))
    return 0.5 * sin_theta * math.exp(-t * t / 2.0)


def orthonormal_to(reference: np.ndarray) -> np.ndarray:
    """A fixed unit vector orthogonal to ``reference`` (canonical-basis Gram-Schmidt)."""
    reference = np.asarray(reference, dtype=float)
    k = int(np.argmin(np.abs(reference)))
    e = np.zeros_like(reference)
    e[k] = 1.0
    u = e - np.dot(e, reference) * reference
    return u / np.linalg.norm(u)


def decompose(target: np.ndarray, reference: np.ndarray) -> AngleDecomposition:
    """Write target = a * reference + b * u with u unit, u _|_ reference, b >= 0.

    When target is (anti)parallel to reference, b is reported as exactly 0
    and u is a fixed canonical orthogonal direction.
    """
    target = np.asarray(target, dtype=float)
    reference = np.asarray(reference, dtype=float)
    a = float(np.dot(target, reference))
    residual = target - a * reference
    b = float(np.linalg.norm(residual))
    if b <= 1e-12:
        return AngleDecomposition(a=a, b=0.0, u=orthonormal_to(reference))
    return AngleDecomposition(a=a, b=b, u=residual / b)


def sqrt_localization_apply(v: np.ndarray, sigma: float, z: np.ndarray) -> np.ndarray:
    """Apply A^{1/2} = I - (1 - sigma) v v^T to z (single point or (n, d) batch)."""
    if not (0.0 < sigma <= 1.0):
        raise ValueError("sigma must lie in (0, 1]")
    z = np.asarray(z, dtype=float)
    if z.ndim == 1:
        return z - (1.0 - sigma) * float(np.dot(v, z)) * v
    return z - (1.0 - sigma) * np.outer(z @ v, v)


def localize_halfspace(h: Halfspace, v: np.ndarray, s: float, sigma: float) -> Halfspace:
    """The halfspace l with l(z) = h(A^{1/2} z - s v), A = I - (1 - sigma^2) v v^T."""
    if not (0.0 < sigma < 1.0):
        raise ValueError("sigma must lie in (0, 1)")
    dec = decompose(h.w, np.asarray(v, dtype=float))
    a, b, u = dec.a, dec.b, dec.u
    raw = a * np.asarray(v, dtype=float) + (b / sigma) * u
    norm = math.sqrt(a * a + (b / sigma) ** 2)
    return Halfspace(raw / norm, ((h.t - a * s) / sigma) / norm)


def smoothed_halfspace(h: Halfspace, x0: np.ndarray, rho: float) -> Halfspace:
    """The halfspace in z equal to h(sqrt(1 - rho^2) x0 + rho z)."""
    if not (0.0 < rho <= 1.0):
        raise ValueError("rho must lie in (0, 1]")
    shift = math.sqrt(max(0.0, 1.0 - rho * rho)) * float(np.dot(h.w, np.asarray(x0, dtype=float)))
    return Halfspace(h.w, (h.t + shift) / rho)
