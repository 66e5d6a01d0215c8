"""Command-line experiment runner.

Four modes: ``learn`` runs the full pipeline on one scenario, ``sweep``
cross-products scenario fields from a JSON file, ``lowerbound`` runs the
pool-based lab statistics, and ``selftest`` runs the fast property
suite.  The product is CSV on disk (or stdout): identical (scenario,
seed) reruns produce byte-identical output.  Wall-clock time goes to
stderr only, never into the CSV.

Exit codes: 0 ok, 1 usage error, 2 budget exceeded, 3 selftest failure.
"""

from __future__ import annotations

import argparse
import ast
import dataclasses
import itertools
import json
import sys
import time
from dataclasses import dataclass, field

import numpy as np

from .geometry import Halfspace, threshold_for_bias
from .learner import LearnerConfig, RunReport, learn
from .lowerbound import (
    GreedyDirection,
    OracleAided,
    Pool,
    RandomOrder,
    near_isometry_stat,
    negative_capture_prob,
    play_query_game,
)
from .oracles import (
    BoundaryBand,
    CleanLabels,
    LabelSource,
    MembershipOracle,
    RandomFlip,
    SmallClassOracle,
)
from .rng import substream
from .selftest import run_selftest

__all__ = ["main", "run_scenario", "Scenario", "CSV_SCHEMA", "LEARN_HEADER"]

# bump when the column set changes; every row carries it
CSV_SCHEMA = "halfspace-lab-csv-1"

LEARN_HEADER = [
    "schema",
    "scenario",
    "mode",
    "dim",
    "tstar",
    "bias",
    "noise",
    "epsilon",
    "delta",
    "seed",
    "small_class",
    "budget",
    "verdict",
    "err_estimate",
    "err_se",
    "total_queries",
    "queries_bias",
    "queries_init",
    "queries_refine",
    "queries_tournament",
    "small_class_draws",
    "rounds",
]

LOWERBOUND_HEADER = ["schema", "scenario", "stat", "value"]


class UsageError(ValueError):
    """Bad flag combination or unparseable config value."""


@dataclass(frozen=True)
class Scenario:
    mode: str
    dim: int = 10
    tstar: float | None = None
    bias: float | None = None
    noise: str = "clean"
    epsilon: float = 0.05
    delta: float = 0.1
    seed: int = 0
    small_class_oracle: bool = False
    budget: int | None = None
    overrides: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.mode not in ("learn", "sweep", "lowerbound", "selftest"):
            raise UsageError(f"unknown mode {self.mode!r}")
        if self.tstar is not None and self.bias is not None:
            raise UsageError("--tstar and --bias are mutually exclusive")
        if self.dim < 1:
            raise UsageError("--dim must be a positive integer")
        if not (0.0 < self.epsilon < 1.0):
            raise UsageError("--epsilon must lie in (0, 1)")
        if not (0.0 < self.delta < 1.0):
            raise UsageError("--delta must lie in (0, 1)")
        if self.bias is not None and not (0.0 < self.bias < 1.0):
            raise UsageError("--bias must lie in (0, 1)")
        if self.budget is not None and self.budget < 1:
            raise UsageError("--budget must be a positive integer")

    @property
    def threshold(self) -> float:
        if self.bias is not None:
            return threshold_for_bias(self.bias)
        return self.tstar if self.tstar is not None else 1.0

    def echo(self) -> str:
        """Compact deterministic one-field summary of the scenario."""
        parts = [
            f"mode={self.mode}",
            f"d={self.dim}",
            f"t={_fmt(self.threshold)}",
            f"noise={self.noise}",
            f"eps={_fmt(self.epsilon)}",
            f"delta={_fmt(self.delta)}",
            f"seed={self.seed}",
        ]
        if self.small_class_oracle:
            parts.append("small_class=1")
        if self.budget is not None:
            parts.append(f"budget={self.budget}")
        for k in sorted(self.overrides):
            parts.append(f"{k}={_fmt(self.overrides[k])}")
        return ";".join(parts)


def _fmt(x) -> str:
    """Deterministic scalar formatting for CSV cells."""
    if x is None:
        return ""
    if isinstance(x, bool):
        return "1" if x else "0"
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    if isinstance(x, (float, np.floating)):
        return f"{float(x):.10g}"
    return str(x)


def make_label_source(spec: str, target: Halfspace) -> LabelSource:
    """Parse ``clean`` | ``rcn:<rate>`` | ``band:<half-width>``."""
    if spec == "clean":
        return CleanLabels(target)
    kind, _, arg = spec.partition(":")
    try:
        value = float(arg)
    except ValueError:
        raise UsageError(f"noise spec {spec!r}: expected a numeric parameter")
    if kind == "rcn":
        return RandomFlip(target, value)
    if kind == "band":
        return BoundaryBand(target, value)
    raise UsageError(f"unknown noise spec {spec!r} (use clean | rcn:<rate> | band:<width>)")


def _parse_override_value(text: str):
    try:
        return ast.literal_eval(text)
    except (ValueError, SyntaxError):
        return text


def parse_overrides(pairs: list[str]) -> dict:
    out = {}
    for pair in pairs:
        key, sep, value = pair.partition("=")
        if not sep or not key:
            raise UsageError(f"--set expects key=value, got {pair!r}")
        out[key] = _parse_override_value(value)
    return out


def _apply_overrides(cfg: LearnerConfig, overrides: dict) -> LearnerConfig:
    """Dotted keys (init.* / refine.*) go to the stage configs, bare keys
    to the learner config; unknown keys are usage errors."""
    init_kv, refine_kv, top_kv = {}, {}, {}
    for key, value in overrides.items():
        head, _, tail = key.partition(".")
        if head == "init":
            init_kv[tail] = value
        elif head == "refine":
            refine_kv[tail] = value
        else:
            top_kv[key] = value
    try:
        init = dataclasses.replace(cfg.init, **init_kv) if init_kv else cfg.init
        refine = dataclasses.replace(cfg.refine, **refine_kv) if refine_kv else cfg.refine
        return dataclasses.replace(cfg, init=init, refine=refine, **top_kv)
    except TypeError as exc:
        raise UsageError(f"unknown config override: {exc}")


def build_target(scenario: Scenario) -> Halfspace:
    rng = substream(scenario.seed, "target")
    w = rng.standard_normal(scenario.dim)
    return Halfspace(w / np.linalg.norm(w), scenario.threshold)


def run_learn_scenario(scenario: Scenario) -> tuple[list[str], RunReport]:
    target = build_target(scenario)
    source = make_label_source(scenario.noise, target)
    oracle = MembershipOracle(source, scenario.seed)
    small_class = (
        SmallClassOracle(source, scenario.seed) if scenario.small_class_oracle else None
    )
    cfg = _apply_overrides(
        LearnerConfig(
            epsilon=scenario.epsilon,
            delta=scenario.delta,
            budget=scenario.budget,
        ),
        scenario.overrides,
    )
    report = learn(oracle, cfg, small_class)
    row = [
        CSV_SCHEMA,
        scenario.echo(),
        "learn",
        _fmt(scenario.dim),
        _fmt(scenario.tstar),
        _fmt(scenario.bias),
        scenario.noise,
        _fmt(scenario.epsilon),
        _fmt(scenario.delta),
        _fmt(scenario.seed),
        _fmt(scenario.small_class_oracle),
        _fmt(scenario.budget),
        report.verdict,
        _fmt(report.err_estimate),
        _fmt(report.err_se),
        _fmt(report.total_queries),
        _fmt(report.queries_bias),
        _fmt(report.queries_init),
        _fmt(report.queries_refine),
        _fmt(report.queries_tournament),
        _fmt(report.small_class_draws),
        _fmt(report.rounds),
    ]
    return row, report


_STRATEGIES = {
    "random": lambda rng: RandomOrder(rng),
    "greedy": lambda rng: GreedyDirection(rng),
    "oracle": lambda rng: OracleAided(),
}


def run_lowerbound_scenario(scenario: Scenario) -> list[list[str]]:
    """Pool statistics for one seed: near-isometry, capture probability,
    and the query game for the configured strategy."""
    ov = scenario.overrides
    m = int(ov.get("m", 2000))
    k = int(ov.get("k", 10))
    tuples = int(ov.get("tuples", 500))
    trials = int(ov.get("trials", 20000))
    strategy_name = str(ov.get("strategy", "random"))
    if strategy_name not in _STRATEGIES:
        raise UsageError(f"unknown strategy {strategy_name!r} (use random | greedy | oracle)")
    game_k = int(ov.get("game_negatives", 1))
    game_budget = int(ov.get("game_budget", m))

    t = scenario.threshold
    rng = substream(scenario.seed, "lowerbound")
    points = rng.standard_normal((m, scenario.dim))
    target = build_target(scenario)
    pool = Pool(points, target)

    iso = near_isometry_stat(points, min(k, scenario.dim), tuples, rng)
    capture = negative_capture_prob(points[:k], t, trials, rng)
    strategy = _STRATEGIES[strategy_name](rng)
    found, used = play_query_game(pool, strategy, game_k, game_budget)

    echo = scenario.echo()
    stats = [
        ("near_isometry_stat", iso),
        ("negative_capture_prob", capture),
        ("game_negatives_found", found),
        ("game_queries_used", used),
    ]
    return [[CSV_SCHEMA, echo, name, _fmt(value)] for name, value in stats]


def _scenario_from_cell(cell: dict, overrides: dict) -> Scenario:
    merged = dict(overrides)
    merged.update(cell.get("set", {}))
    return Scenario(
        mode="learn",
        dim=int(cell.get("dim", 10)),
        tstar=cell.get("tstar"),
        bias=cell.get("bias"),
        noise=str(cell.get("noise", "clean")),
        epsilon=float(cell.get("epsilon", 0.05)),
        delta=float(cell.get("delta", 0.1)),
        seed=int(cell.get("seed", 0)),
        small_class_oracle=bool(cell.get("small_class_oracle", False)),
        budget=cell.get("budget"),
        overrides=merged,
    )


_SWEEP_FIELDS = [
    "dim",
    "tstar",
    "bias",
    "noise",
    "epsilon",
    "delta",
    "seed",
    "small_class_oracle",
    "budget",
]


def expand_sweep(spec: dict) -> list[dict]:
    """Cross-product of any listed fields, in fixed field order, so the
    output row order is deterministic regardless of execution order."""
    unknown = set(spec) - set(_SWEEP_FIELDS) - {"set"}
    if unknown:
        raise UsageError(f"unknown sweep fields: {sorted(unknown)}")
    axes = []
    for name in _SWEEP_FIELDS:
        if name not in spec:
            continue
        value = spec[name]
        axes.append([(name, v) for v in (value if isinstance(value, list) else [value])])
    cells = []
    for combo in itertools.product(*axes):
        cell = dict(combo)
        if "set" in spec:
            cell["set"] = spec["set"]
        cells.append(cell)
    return cells


def _write_csv(rows: list[list[str]], header: list[str], out_path: str | None) -> None:
    lines = [",".join(header)] + [",".join(row) for row in rows]
    text = "\n".join(lines) + "\n"
    if out_path is None:
        sys.stdout.write(text)
    else:
        with open(out_path, "w", newline="") as fh:
            fh.write(text)


def run_scenario(scenario: Scenario, out_path: str | None = None, sweep_spec: dict | None = None) -> int:
    """Execute one scenario (or sweep) and write its CSV; returns the exit code."""
    t0 = time.monotonic()
    code = 0
    if scenario.mode == "selftest":
        code = 0 if run_selftest(lambda line: print(line, file=sys.stderr)) else 3
    elif scenario.mode == "learn":
        row, report = run_learn_scenario(scenario)
        _write_csv([row], LEARN_HEADER, out_path)
        if report.verdict == "budget":
            code = 2
    elif scenario.mode == "sweep":
        if sweep_spec is None:
            raise UsageError("sweep mode requires --sweep-file")
        rows = []
        any_budget = False
        for cell in expand_sweep(sweep_spec):
            row, report = run_learn_scenario(_scenario_from_cell(cell, scenario.overrides))
            rows.append(row)
            any_budget = any_budget or report.verdict == "budget"
        _write_csv(rows, LEARN_HEADER, out_path)
        if any_budget:
            code = 2
    elif scenario.mode == "lowerbound":
        _write_csv(run_lowerbound_scenario(scenario), LOWERBOUND_HEADER, out_path)
    wall_ms = 1000.0 * (time.monotonic() - t0)
    print(f"wall_ms={wall_ms:.1f}", file=sys.stderr)
    return code


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"{self.prog}: error: {message}", file=sys.stderr)
        raise SystemExit(1)


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(
        prog="halfspace-lab",
        description="Membership-query halfspace learning experiments.",
    )
    parser.add_argument("--mode", required=True, choices=["learn", "sweep", "lowerbound", "selftest"])
    parser.add_argument("--dim", type=int, default=10)
    parser.add_argument("--tstar", type=float, default=None, help="target threshold")
    parser.add_argument("--bias", type=float, default=None, help="target minority mass (excludes --tstar)")
    parser.add_argument("--noise", default="clean", help="clean | rcn:<rate> | band:<width>")
    parser.add_argument("--epsilon", type=float, default=0.05)
    parser.add_argument("--delta", type=float, default=0.1)
    parser.add_argument("--seed", type=int, default=0)
    parser.add_argument("--sweep-file", default=None, help="JSON sweep spec (sweep mode)")
    parser.add_argument("--out", default=None, help="CSV output path (default stdout)")
    parser.add_argument("--budget", type=int, default=None, help="membership-query cap")
    parser.add_argument("--small-class-oracle", action="store_true")
    parser.add_argument("--set", dest="overrides", action="append", default=[],
                        metavar="KEY=VALUE", help="config override (repeatable)")
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        scenario = Scenario(
            mode=args.mode,
            dim=args.dim,
            tstar=args.tstar,
            bias=args.bias,
            noise=args.noise,
            epsilon=args.epsilon,
            delta=args.delta,
            seed=args.seed,
            small_class_oracle=args.small_class_oracle,
            budget=args.budget,
            overrides=parse_overrides(args.overrides),
        )
        sweep_spec = None
        if args.sweep_file is not None:
            with open(args.sweep_file) as fh:
                sweep_spec = json.load(fh)
        return run_scenario(scenario, args.out, sweep_spec)
    except UsageError as exc:
        print(f"halfspace-lab: error: {exc}", file=sys.stderr)
        return 1
    except FileNotFoundError as exc:
        print(f"halfspace-lab: error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    raise SystemExit(main())
