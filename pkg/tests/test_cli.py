import json

import pytest

from halfspace_lab.cli import (
    LEARN_HEADER,
    LOWERBOUND_HEADER,
    Scenario,
    UsageError,
    expand_sweep,
    main,
    make_label_source,
    parse_overrides,
)
from halfspace_lab.geometry import Halfspace, threshold_for_bias
from halfspace_lab.oracles import BoundaryBand, CleanLabels, RandomFlip

import numpy as np

FAST_LEARN = [
    "--mode", "learn", "--dim", "5", "--tstar", "1.0", "--epsilon", "0.05",
    "--seed", "3", "--set", "restarts_per_gridpoint=1",
]


def read_csv(path):
    lines = path.read_text().splitlines()
    return lines[0].split(","), [line.split(",") for line in lines[1:]]


class TestParsing:
    def test_overrides(self):
        out = parse_overrides(["a=1", "b=0.5", "c=text", "refine.c_stop=10.0"])
        assert out == {"a": 1, "b": 0.5, "c": "text", "refine.c_stop": 10.0}

    def test_bad_override_rejected(self):
        with pytest.raises(UsageError):
            parse_overrides(["novalue"])

    def test_mutually_exclusive_threshold_and_bias(self):
        with pytest.raises(UsageError):
            Scenario(mode="learn", tstar=1.0, bias=0.2)

    def test_bias_converts_to_threshold(self):
        s = Scenario(mode="learn", bias=0.2)
        assert s.threshold == pytest.approx(threshold_for_bias(0.2), abs=1e-9)

    @pytest.mark.parametrize(
        "spec,cls", [("clean", CleanLabels), ("rcn:0.1", RandomFlip), ("band:0.2", BoundaryBand)]
    )
    def test_noise_specs(self, spec, cls):
        target = Halfspace(np.array([1.0, 0.0]), 0.5)
        assert isinstance(make_label_source(spec, target), cls)

    def test_unknown_noise_rejected(self):
        target = Halfspace(np.array([1.0, 0.0]), 0.5)
        with pytest.raises(UsageError):
            make_label_source("salt:1", target)


class TestSweepExpansion:
    def test_cross_product_order(self):
        cells = expand_sweep({"dim": [5, 10], "seed": [0, 1], "epsilon": 0.05})
        assert [(c["dim"], c["seed"]) for c in cells] == [(5, 0), (5, 1), (10, 0), (10, 1)]

    def test_unknown_field_rejected(self):
        with pytest.raises(UsageError):
            expand_sweep({"dimension": [5]})


class TestMainModes:
    def test_learn_writes_row(self, tmp_path, capsys):
        out = tmp_path / "run.csv"
        assert main(FAST_LEARN + ["--out", str(out)]) == 0
        header, rows = read_csv(out)
        assert header == LEARN_HEADER
        assert len(rows) == 1
        row = dict(zip(header, rows[0]))
        assert row["verdict"] in ("learned", "constant_plus_one")
        assert int(row["total_queries"]) > 0

    def test_learn_rerun_is_byte_identical(self, tmp_path):
        a, b = tmp_path / "a.csv", tmp_path / "b.csv"
        main(FAST_LEARN + ["--out", str(a)])
        main(FAST_LEARN + ["--out", str(b)])
        assert a.read_bytes() == b.read_bytes()

    def test_sweep_rows_monotone_in_dim(self, tmp_path):
        spec = {
            "dim": [5, 8],
            "tstar": 1.0,
            "epsilon": 0.02,
            "seed": 3,
            "set": {"restarts_per_gridpoint": 1},
        }
        sweep = tmp_path / "sweep.json"
        sweep.write_text(json.dumps(spec))
        out = tmp_path / "sweep.csv"
        assert main(["--mode", "sweep", "--sweep-file", str(sweep), "--out", str(out)]) == 0
        header, rows = read_csv(out)
        totals = [int(dict(zip(header, r))["total_queries"]) for r in rows]
        assert len(rows) == 2
        assert totals == sorted(totals)

    def test_lowerbound_mode(self, tmp_path):
        out = tmp_path / "lb.csv"
        code = main([
            "--mode", "lowerbound", "--dim", "40", "--tstar", "1.0", "--seed", "1",
            "--set", "m=200", "--set", "tuples=20", "--set", "trials=2000",
            "--out", str(out),
        ])
        assert code == 0
        header, rows = read_csv(out)
        assert header == LOWERBOUND_HEADER
        assert [r[2] for r in rows] == [
            "near_isometry_stat",
            "negative_capture_prob",
            "game_negatives_found",
            "game_queries_used",
        ]

    def test_selftest_mode(self, capsys):
        assert main(["--mode", "selftest"]) == 0

    def test_usage_errors_exit_1(self):
        assert main(["--mode", "learn", "--tstar", "1", "--bias", "0.2"]) == 1
        assert main(["--mode", "nosuch"]) == 1
        assert main(["--mode", "sweep"]) == 1

    def test_budget_exit_2(self):
        code = main([
            "--mode", "learn", "--dim", "5", "--tstar", "1.0", "--epsilon", "0.02",
            "--seed", "2", "--budget", "4000", "--set", "restarts_per_gridpoint=1",
        ])
        assert code == 2
