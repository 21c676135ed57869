import json
from pathlib import Path

import pytest

from heavenly.cliapp import (
    ScenarioError,
    csv_header,
    load_scenario,
    main,
)

SCENARIO_DIR = Path(__file__).resolve().parent.parent / "scenarios"


def scenario_path(name):
    return str(SCENARIO_DIR / f"{name}.json")


def write_scenario(tmp_path, payload, name="case.json"):
    p = tmp_path / name
    p.write_text(json.dumps(payload))
    return str(p)


BASE = {
    "family": "shock",
    "shared": {"alpha": "t", "beta": "y", "delta": "z"},
    "seeds": [{"F": "p^2/2", "G": "p", "m": "0", "n": "0"}],
    "coefficients": [1.0],
    "sampling": {"box": {"x": [-1, 1], "y": [0.5, 1.5],
                         "z": [0.5, 1.5], "t": [0.5, 1.5]},
                 "count": 20, "seed": 3},
}


class TestLoadScenario:
    def test_shipped_scenarios_load(self):
        for name in ("shock_n2", "shock_n3", "general_unbalanced",
                     "general_balanced", "trivial_overlap"):
            sc = load_scenario(scenario_path(name))
            assert sc.build_family().size == len(sc.coefficients)

    def test_unknown_top_level_key(self, tmp_path):
        bad = dict(BASE, extra=1)
        with pytest.raises(ScenarioError, match="unknown keys"):
            load_scenario(write_scenario(tmp_path, bad))

    def test_unknown_seed_key(self, tmp_path):
        bad = dict(BASE)
        bad["seeds"] = [dict(BASE["seeds"][0], H="p")]
        with pytest.raises(ScenarioError, match="unknown keys"):
            load_scenario(write_scenario(tmp_path, bad))

    def test_malformed_expression_reports_location(self, tmp_path):
        bad = dict(BASE)
        bad["seeds"] = [dict(BASE["seeds"][0], F="p +* 2")]
        with pytest.raises(ScenarioError, match="offset 3"):
            load_scenario(write_scenario(tmp_path, bad))

    def test_coefficient_count(self, tmp_path):
        bad = dict(BASE, coefficients=[1.0, 2.0])
        with pytest.raises(ScenarioError, match="one number per seed"):
            load_scenario(write_scenario(tmp_path, bad))

    def test_empty_box_rejected(self, tmp_path):
        bad = dict(BASE)
        bad["sampling"] = {"box": {"x": [1, -1], "y": [0, 1], "z": [0, 1],
                                   "t": [0, 1]}, "count": 10}
        sc = load_scenario(write_scenario(tmp_path, bad))
        with pytest.raises(ScenarioError, match="empty sampling box"):
            sc.points()

    def test_explicit_points(self, tmp_path):
        good = dict(BASE)
        good["sampling"] = {"points": [[0.1, 1.0, 1.0, 1.0]]}
        sc = load_scenario(write_scenario(tmp_path, good))
        assert sc.points() == [(0.1, 1.0, 1.0, 1.0)]

    def test_defaults(self, tmp_path):
        sc = load_scenario(write_scenario(tmp_path, BASE))
        assert sc.policy.p_lo == -10.0
        assert sc.policy.resolution == 1024
        assert sc.tolerances["residual"] == 1e-9
        assert sc.expect == "satisfy"


class TestCommands:
    def test_verify_positive_exit_zero(self, tmp_path, monkeypatch):
        monkeypatch.chdir(tmp_path)
        assert main(["verify", scenario_path("shock_n2"),
                     "--points", "60"]) == 0
        report = json.loads(Path("shock_n2.report.json").read_text())
        assert report["passed"] is True
        assert report["schema_version"] == 1

    def test_verify_expected_violation_exit_zero(self, tmp_path, monkeypatch):
        monkeypatch.chdir(tmp_path)
        assert main(["verify", scenario_path("general_unbalanced"),
                     "--points", "60"]) == 0

    def test_verify_residual_failure_exit_one(self, tmp_path, monkeypatch):
        # unbalanced pair with expect=satisfy must fail with exit 1
        monkeypatch.chdir(tmp_path)
        raw = json.loads(Path(scenario_path("general_unbalanced")).read_text())
        raw["expect"] = "satisfy"
        path = write_scenario(tmp_path, raw, "unbalanced_as_satisfy.json")
        assert main(["verify", path, "--points", "40"]) == 1

    def test_config_error_exit_two(self, tmp_path, monkeypatch):
        monkeypatch.chdir(tmp_path)
        bad = dict(BASE)
        bad["seeds"] = [dict(BASE["seeds"][0], F="p +* 2")]
        path = write_scenario(tmp_path, bad)
        assert main(["verify", path]) == 2

    def test_balance_shock(self, tmp_path, monkeypatch, capsys):
        monkeypatch.chdir(tmp_path)
        assert main(["balance", scenario_path("shock_n3"),
                     "--points", "40"]) == 0
        out = capsys.readouterr().out
        assert "pairwise" in out and "PASS" in out

    def test_balance_single_seed_empty_pairs(self, tmp_path, monkeypatch):
        monkeypatch.chdir(tmp_path)
        path = write_scenario(tmp_path, BASE)
        assert main(["balance", path]) == 0
        report = json.loads(Path("case.report.json").read_text())
        assert report["result"]["pairwise"]["count"] == 0
        assert report["result"]["n_term"]["max"] == 0.0

    def test_sample_csv_deterministic(self, tmp_path, monkeypatch):
        monkeypatch.chdir(tmp_path)
        for out in ("a.csv", "b.csv"):
            assert main(["sample", scenario_path("shock_n2"),
                         "--points", "30", "--out", out]) == 0
        assert Path("a.csv").read_bytes() == Path("b.csv").read_bytes()

    def test_sample_header(self, tmp_path, monkeypatch):
        monkeypatch.chdir(tmp_path)
        assert main(["sample", scenario_path("shock_n2"), "--points", "5",
                     "--out", "c.csv"]) == 0
        header = Path("c.csv").read_text().splitlines()[0].split(",")
        assert header == csv_header(2)
        assert header[:6] == ["index", "status", "x", "y", "z", "t"]

    def test_fdcheck(self, tmp_path, monkeypatch):
        monkeypatch.chdir(tmp_path)
        assert main(["fdcheck", scenario_path("shock_n2"),
                     "--points", "15"]) == 0
        report = json.loads(Path("shock_n2.report.json").read_text())
        assert report["result"]["max_deviation"] <= 1e-6

    def test_fdcheck_deterministic(self, tmp_path, monkeypatch):
        monkeypatch.chdir(tmp_path)
        outs = []
        for name in ("r1.json", "r2.json"):
            assert main(["fdcheck", scenario_path("shock_n2"),
                         "--points", "10", "--report", name]) == 0
            outs.append(Path(name).read_bytes())
        assert outs[0] == outs[1]
