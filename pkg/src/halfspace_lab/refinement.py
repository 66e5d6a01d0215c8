"""Localization-driven projected gradient descent on the sphere.

Each round localizes the query distribution around the current
direction w at scale sigma, binary-searches the localization offset
until the localized negative-label rate sits near 1/2 (where the
gradient signal is strongest), estimates the projected Chow vector of
the localized concept, and takes a projected gradient step.  sigma is a
certified upper bound on sin(theta/2) to the target direction and
contracts by a fixed factor per round.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np

from .estimation import (
    WindowVerdict,
    empirical_projected_chow,
    probability_window_check,
)
from .oracles import MembershipOracle, localized_query_batch

__all__ = [
    "RefineConfig",
    "RefineState",
    "OffsetNotFound",
    "search_offset",
    "refine_round",
    "refine",
    "planned_rounds",
]


class OffsetNotFound(RuntimeError):
    """No localization offset put the negative rate inside the bias window.

    Signals that sigma undershoots the actual angle, the threshold range
    is wrong, or noise swamps the window; callers abort the attempt.
    """


@dataclass(frozen=True)
class RefineConfig:
    # per-round step size mu = sigma / c1 and contraction sigma' = (1 - 1/c2) sigma;
    # c2 sized so the worst-case per-round angle decrease (gradient norm
    # bounded by the in-window Chow length) still beats 1/c2
    c1: float = 8.01
    c2: float = 40.0
    # stop once sigma <= c_stop * epsilon * exp(t'^2 / 2)
    c_stop: float = 1.0
    grad_samples_multiplier: float = 40.0
    # bisection steers the localized negative rate into this band, where
    # the gradient signal is strongest
    bias_window: tuple[float, float] = (0.25, 0.75)
    # a collapsed bracket is still accepted if the rate lies in here
    # (the band can be unreachable inside [0, t'] in early rounds)
    validity_window: tuple[float, float] = (0.02, 0.98)
    max_bisection_steps: int = 60
    # bisection stops refining the bracket below this fraction of sigma
    resolution_factor: float = 0.25

    def __post_init__(self):
        if not (self.c1 > 8 and self.c2 > 8):
            raise ValueError("c1 and c2 must exceed 8")
        lo, hi = self.bias_window
        if not (0.0 < lo < hi < 1.0):
            raise ValueError("bias window must satisfy 0 < lo < hi < 1")


@dataclass(frozen=True)
class RefineState:
    w: np.ndarray
    sigma: float
    round: int
    accepted_offset: float
    ledger_start: int


def planned_rounds(sigma0: float, sigma_final: float, c2: float) -> int:
    if sigma_final >= sigma0:
        return 0
    return math.ceil(math.log(sigma0 / sigma_final) / -math.log1p(-1.0 / c2))


def search_offset(
    oracle: MembershipOracle,
    w: np.ndarray,
    sigma: float,
    t_prime: float,
    cfg: RefineConfig,
    delta: float,
) -> float:
    """Find an offset whose localized negative-label rate is in-window.

    The localized negative rate is monotone increasing in the offset, so
    bisection over [0, t'] converges: a probe whose empirical rate falls
    below the window center raises the lower bracket, above lowers the
    upper one.  Accepts on an in-window verdict; fails once the bracket
    shrinks below a quarter of sigma without one.
    """
    if not (0.0 < sigma <= 0.5):
        raise ValueError("sigma must lie in (0, 1/2]")
    if t_prime < 0:
        raise ValueError("t_prime must be non-negative")
    delta_probe = delta / cfg.max_bisection_steps
    lo_t, hi_t = 0.0, t_prime
    resolution = cfg.resolution_factor * sigma
    val_lo, val_hi = cfg.validity_window
    for _ in range(cfg.max_bisection_steps):
        mid = 0.5 * (lo_t + hi_t)

        def sample(n: int, offset: float = mid) -> np.ndarray:
            return localized_query_batch(
                oracle, w, offset, sigma, oracle.gaussian_points(n)
            )

        result = probability_window_check(sample, cfg.bias_window, delta_probe)
        if result.verdict == WindowVerdict.IN_WINDOW:
            return mid
        if hi_t - lo_t < resolution:
            # the target band is unreachable inside [0, t']; settle for
            # any offset whose rate is at least clearly non-degenerate
            if val_lo < result.p_emp < val_hi:
                return mid
            break
        if result.side(*cfg.bias_window) == "low":
            lo_t = mid
        else:
            hi_t = mid
    raise OffsetNotFound(
        f"no in-window offset in [0, {t_prime}] at sigma {sigma:.4g}"
    )


def gradient_sample_size(dim: int, total_rounds: int, cfg: RefineConfig, delta: float) -> int:
    return math.ceil(
        cfg.grad_samples_multiplier * dim * math.log(dim * (total_rounds + 1) / delta)
    )


def refine_round(
    oracle: MembershipOracle,
    state: RefineState,
    t_prime: float,
    cfg: RefineConfig,
    delta: float,
    total_rounds: int,
) -> RefineState:
    """One localize / re-center / gradient-step round."""
    t_tilde = search_offset(oracle, state.w, state.sigma, t_prime, cfg, delta)
    m = gradient_sample_size(state.w.shape[0], total_rounds, cfg, delta)
    Z = oracle.gaussian_points(m)
    g = empirical_projected_chow(
        lambda pts: localized_query_batch(oracle, state.w, t_tilde, state.sigma, pts),
        Z,
        exclude=state.w,
    )
    stepped = state.w + (state.sigma / cfg.c1) * g
    w_next = stepped / np.linalg.norm(stepped)
    return replace(
        state,
        w=w_next,
        sigma=(1.0 - 1.0 / cfg.c2) * state.sigma,
        round=state.round + 1,
        accepted_offset=t_tilde,
    )


def refine(
    oracle: MembershipOracle,
    w0: np.ndarray,
    t_prime: float,
    epsilon: float,
    delta: float,
    cfg: RefineConfig | None = None,
    sigma0: float | None = None,
) -> tuple[np.ndarray, float, RefineState]:
    """Contract the angle to the target down to the accuracy floor.

    Returns (final direction, accepted threshold offset, final state).
    sigma0 defaults to min(1/t', 1/2), the entry guarantee the warm
    start is expected to satisfy.
    """
    cfg = cfg or RefineConfig()
    if sigma0 is None:
        sigma0 = min(1.0 / t_prime, 0.5) if t_prime > 0 else 0.5
    sigma_final = min(sigma0, cfg.c_stop * epsilon * math.exp(t_prime ** 2 / 2.0))
    total = planned_rounds(sigma0, sigma_final, cfg.c2)
    state = RefineState(
        w=np.asarray(w0, dtype=float),
        sigma=sigma0,
        round=0,
        accepted_offset=math.nan,
        ledger_start=oracle.ledger,
    )
    for _ in range(total):
        state = refine_round(oracle, state, t_prime, cfg, delta, total)
    if not math.isfinite(state.accepted_offset):
        # zero-round run (epsilon large): still pin down the threshold
        t_hat = search_offset(oracle, state.w, state.sigma, t_prime, cfg, delta)
        state = replace(state, accepted_offset=t_hat)
    return state.w, state.accepted_offset, state
