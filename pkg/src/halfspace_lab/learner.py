"""Top-level learner: bias bracket, threshold grid, restarted
initialization plus refinement, and tournament selection.

The flow: bracket the minority-class mass p (or bail out with the
constant +1 hypothesis when p is already epsilon-small), invert the
bias bracket into a threshold interval, grid it, warm-start and refine
at every grid point with restarts, then pick a winner from the
candidate pool by pairwise disagreement voting.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .estimation import (
    BiasEstimate,
    BudgetExceeded,
    estimate_bias_doubling,
)
from .geometry import Halfspace, halfspace_bias, threshold_for_bias
from .initialization import (
    InitConfig,
    InitFailure,
    init_extreme,
    init_unextreme,
    use_extreme_init,
)
from .oracles import MembershipOracle, SmallClassOracle, estimate_error
from .refinement import OffsetNotFound, RefineConfig, refine
from .rng import substream

__all__ = [
    "LearnerConfig",
    "RunReport",
    "learn",
    "learn_with_noise_ladder",
    "tournament",
    "constant_plus_one_hypothesis",
]

# threshold far enough out that the hypothesis is +1 on any realistic sample
_CONSTANT_T = 40.0


def constant_plus_one_hypothesis(dim: int) -> Halfspace:
    w = np.zeros(dim)
    w[0] = 1.0
    return Halfspace(w, _CONSTANT_T)


@dataclass(frozen=True)
class LearnerConfig:
    epsilon: float
    delta: float = 0.1
    # attempts per grid threshold; None = ln^2(1/eps) ln(1/delta), capped
    restarts_per_gridpoint: int | None = None
    grid_step: float | None = None
    c_small: float = 4.0
    tournament_factor: float = 10.0
    init: InitConfig = field(default_factory=InitConfig)
    refine: RefineConfig = field(default_factory=RefineConfig)
    budget: int | None = None
    eval_samples: int = 100_000
    # skip the query-funded bias ladder when a small-class oracle is given
    bias_from_small_class_draws: int = 2000

    def restarts(self) -> int:
        if self.restarts_per_gridpoint is not None:
            return self.restarts_per_gridpoint
        lg = math.log(1.0 / self.epsilon)
        return min(40, math.ceil(lg * lg * math.log(1.0 / self.delta)))

    def step(self) -> float:
        if self.grid_step is not None:
            return self.grid_step
        return 1.0 / (2.0 * math.log(1.0 / self.epsilon))


@dataclass
class RunReport:
    hypothesis: Halfspace
    verdict: str  # learned | constant_plus_one | budget
    err_estimate: float
    err_se: float
    queries_bias: int
    queries_init: int
    queries_refine: int
    queries_tournament: int
    total_queries: int
    small_class_draws: int
    rounds: int
    candidates: list
    flipped: bool = False


class _FlippedOracle:
    """Label-negating view sharing the underlying oracle's ledger."""

    def __init__(self, inner: MembershipOracle):
        self._inner = inner

    @property
    def dim(self) -> int:
        return self._inner.dim

    @property
    def ledger(self) -> int:
        return self._inner.ledger

    def query(self, x):
        return -self._inner.query(x)

    def query_batch(self, X):
        return -self._inner.query_batch(X)

    def gaussian_points(self, n):
        return self._inner.gaussian_points(n)


def _inverse_mills(t: float) -> float:
    """phi(t) / Phi(-t): mean depth of the negative-side margin."""
    return math.exp(-t * t / 2.0) / math.sqrt(2.0 * math.pi) / halfspace_bias(t)


def _bias_from_small_class(small_class: SmallClassOracle, n: int) -> BiasEstimate:
    """Bias bracket from small-class draws alone (zero membership queries).

    The mean of Gaussian points conditioned on the negative side of a
    halfspace has norm phi(t)/Phi(-t); inverting that recovers the
    threshold and hence the bias.
    """
    X = small_class.draw_batch(n)
    norm = float(np.linalg.norm(np.mean(X, axis=0)))
    lo_t, hi_t = 0.0, 39.0
    if norm <= _inverse_mills(0.0):
        t_est = 0.0
    else:
        while hi_t - lo_t > 1e-6:
            mid = 0.5 * (lo_t + hi_t)
            if _inverse_mills(mid) < norm:
                lo_t = mid
            else:
                hi_t = mid
        t_est = 0.5 * (lo_t + hi_t)
    return BiasEstimate("bracket", 0.5 * halfspace_bias(t_est), 0)


def tournament(
    candidates: list[Halfspace],
    oracle: MembershipOracle,
    epsilon: float,
    delta: float,
) -> Halfspace:
    """Pick a candidate that loses no pairwise disagreement vote.

    For each pair, points where the two hypotheses disagree are
    rejection-sampled from the Gaussian and label-queried; a candidate
    that is wrong on clearly more than half of them takes a loss.  The
    returned candidate has the fewest losses (first on ties).
    """
    k = len(candidates)
    if k == 0:
        raise ValueError("tournament needs at least one candidate")
    if k == 1:
        return candidates[0]
    log_term = math.log(2.0 * k * k / delta)
    m_pair = math.ceil(50.0 * log_term)
    gamma = math.sqrt(log_term / (2.0 * m_pair))
    # stop hunting for disagreement points once the region is clearly
    # epsilon-negligible
    attempt_cap = math.ceil(m_pair * 20.0 / epsilon)
    losses = [0] * k
    for i in range(k):
        for j in range(i + 1, k):
            found = []
            attempts = 0
            chunk = 4096
            while len(found) < m_pair and attempts < attempt_cap:
                chunk = min(chunk, attempt_cap - attempts)
                X = oracle.gaussian_points(chunk)
                attempts += chunk
                mask = np.asarray(candidates[i](X)) != np.asarray(candidates[j](X))
                if np.any(mask):
                    found.append(X[mask])
                chunk = min(2 * chunk, 1 << 17)
            if not found:
                continue
            pts = np.concatenate(found)[:m_pair]
            if pts.shape[0] < 10:
                # disagreement mass is tiny; the pair is interchangeable
                continue
            labels = oracle.query_batch(pts)
            wrong_i = float(np.mean(np.asarray(candidates[i](pts)) != labels))
            wrong_j = float(np.mean(np.asarray(candidates[j](pts)) != labels))
            margin = 0.5 + 2.0 * gamma
            if wrong_i > margin:
                losses[i] += 1
            if wrong_j > margin:
                losses[j] += 1
    return candidates[int(np.argmin(losses))]


def learn(
    oracle: MembershipOracle,
    cfg: LearnerConfig,
    small_class: SmallClassOracle | None = None,
) -> RunReport:
    """Full learning pipeline against a membership oracle."""
    rng = substream(oracle.seed, "learner")
    d = oracle.dim
    start = oracle.ledger
    sc_draws0 = small_class.draws if small_class is not None else 0

    def finish(h, verdict, q_bias, q_init, q_refine, q_tour, rounds, cands, flipped):
        if flipped:
            h = h.flipped()
            cands = [c.flipped() for c in cands]
        m = cfg.eval_samples
        err = estimate_error(oracle.source, h, m, oracle.seed, "final-eval")
        return RunReport(
            hypothesis=h,
            verdict=verdict,
            err_estimate=err,
            err_se=math.sqrt(max(err * (1.0 - err), 1.0 / m) / m),
            queries_bias=q_bias,
            queries_init=q_init,
            queries_refine=q_refine,
            queries_tournament=q_tour,
            total_queries=oracle.ledger - start,
            small_class_draws=(small_class.draws - sc_draws0) if small_class else 0,
            rounds=rounds,
            candidates=cands,
            flipped=flipped,
        )

    # orientation check: the pipeline assumes the negative side is the
    # minority class; flip labels if not
    probe = oracle.query_batch(oracle.gaussian_points(200))
    flipped = bool(np.mean(probe == -1) > 0.5)
    view = _FlippedOracle(oracle) if flipped else oracle
    sc = None if flipped else small_class

    mark = oracle.ledger
    if sc is not None:
        bias = _bias_from_small_class(sc, cfg.bias_from_small_class_draws)
    else:
        try:
            bias = estimate_bias_doubling(
                view, cfg.epsilon, cfg.delta, c_small=cfg.c_small,
                query_cap=cfg.budget,
            )
        except BudgetExceeded as exc:
            bias = exc.partial
            h = constant_plus_one_hypothesis(d)
            return finish(h, "budget", oracle.ledger - start, 0, 0, 0, 0, [h], flipped)
    q_bias = oracle.ledger - mark + (mark - start)

    if bias.is_small:
        h = constant_plus_one_hypothesis(d)
        return finish(h, "constant_plus_one", q_bias, 0, 0, 0, 0, [h], flipped)

    p_hat = bias.p_hat
    t_a = max(0.0, threshold_for_bias(min(2.0 * p_hat, 0.999)))
    t_b = threshold_for_bias(p_hat)
    step = cfg.step()
    grid = list(np.arange(t_a, t_b, step)) + [t_b]

    candidates: list[Halfspace] = []
    q_init = 0
    q_refine = 0
    rounds = 0
    verdict = "learned"
    hit_budget = False
    for t_j in grid:
        if hit_budget:
            break
        for _ in range(cfg.restarts()):
            if cfg.budget is not None and oracle.ledger - start >= cfg.budget:
                hit_budget = True
                break
            mark = oracle.ledger
            try:
                if use_extreme_init(t_j, cfg.epsilon, p_hat):
                    w0 = init_extreme(
                        view, t_j, cfg.epsilon, p_hat, cfg.delta,
                        cfg.init, rng, sc,
                    )
                else:
                    w0 = init_unextreme(
                        view, t_j, cfg.epsilon, cfg.delta, cfg.init, sc
                    )
            except InitFailure:
                q_init += oracle.ledger - mark
                continue
            q_init += oracle.ledger - mark
            mark = oracle.ledger
            try:
                w, t_hat, state = refine(
                    view, w0, t_j, cfg.epsilon, cfg.delta, cfg.refine
                )
            except OffsetNotFound:
                q_refine += oracle.ledger - mark
                continue
            q_refine += oracle.ledger - mark
            rounds += state.round
            candidates.append(Halfspace(w, t_hat))

    if hit_budget:
        verdict = "budget"
    if not candidates:
        h = constant_plus_one_hypothesis(d)
        return finish(
            h, verdict if hit_budget else "constant_plus_one",
            q_bias, q_init, q_refine, 0, rounds, [h], flipped,
        )

    mark = oracle.ledger
    winner = tournament(candidates, view, cfg.epsilon, cfg.delta)
    q_tour = oracle.ledger - mark
    return finish(
        winner, verdict, q_bias, q_init, q_refine, q_tour, rounds,
        list(candidates), flipped,
    )


def learn_with_noise_ladder(
    oracle: MembershipOracle,
    cfg: LearnerConfig,
    small_class: SmallClassOracle | None = None,
) -> RunReport:
    """Run the learner at accuracies eps, 2 eps, 4 eps, ... and keep the
    tournament winner of the pooled outputs.

    Some ladder level lands within a factor 2 of the actual noise level,
    which converts the additive-accuracy guarantee into one relative to
    the best achievable error.
    """
    start = oracle.ledger
    levels = math.ceil(math.log2(1.0 / cfg.epsilon)) + 1
    pool: list[Halfspace] = []
    reports: list[RunReport] = []
    from dataclasses import replace as dc_replace

    for i in range(levels):
        alpha = min(0.5, cfg.epsilon * 2 ** i)
        rep = learn(oracle, dc_replace(cfg, epsilon=alpha), small_class)
        reports.append(rep)
        pool.append(rep.hypothesis)
    winner = tournament(pool, oracle, cfg.epsilon, cfg.delta)
    base = reports[0]
    err = estimate_error(oracle.source, winner, cfg.eval_samples, oracle.seed, "ladder-eval")
    return RunReport(
        hypothesis=winner,
        verdict="learned",
        err_estimate=err,
        err_se=math.sqrt(max(err * (1.0 - err), 1.0 / cfg.eval_samples) / cfg.eval_samples),
        queries_bias=sum(r.queries_bias for r in reports),
        queries_init=sum(r.queries_init for r in reports),
        queries_refine=sum(r.queries_refine for r in reports),
        queries_tournament=oracle.ledger - start - sum(
            r.queries_bias + r.queries_init + r.queries_refine for r in reports
        ),
        total_queries=oracle.ledger - start,
        small_class_draws=sum(r.small_class_draws for r in reports),
        rounds=sum(r.rounds for r in reports),
        candidates=pool,
        flipped=base.flipped,
    )
