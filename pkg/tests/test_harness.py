"""Scenario parsing, suite registry, report determinism, CLI contract."""

import json
import subprocess
import sys
from pathlib import Path

import pytest

from scgeom.harness.cli import main
from scgeom.harness.report import build_report, report_body_text
from scgeom.harness.scenario import ScenarioError, load_scenario, parse_scenario
from scgeom.harness.suites import CLAIMS, SUITES, run_suites

SCENARIOS = Path(__file__).resolve().parents[1] / "src" / "scgeom" / "scenarios"


class TestScenarioParsing:
    def test_standard_loads(self):
        scen = load_scenario(SCENARIOS / "standard.json")
        assert scen.exact
        assert "L" in scen.operators
        assert len(scen.suites) >= 17

    def test_unknown_key_rejected(self):
        with pytest.raises(ScenarioError, match="unknown top-level"):
            parse_scenario({"version": 1, "bogus": {}}, "mem")

    def test_bad_version(self):
        with pytest.raises(ScenarioError, match="version"):
            parse_scenario({"version": 99}, "mem")

    def test_unknown_suite_named(self):
        with pytest.raises(ScenarioError, match="unknown suite"):
            parse_scenario({"version": 1, "suites": ["nope"]}, "mem")

    def test_float_rejected_in_exact_mode(self):
        raw = {"version": 1, "arithmetic": "exact",
               "spaces": {"E": {"kind": "sequence", "delta": 1.0}},
               "operators": {"T": {"op": "scale", "c": 0.5,
                                   "arg": {"op": "identity"}, "space": "E"}}}
        with pytest.raises(ScenarioError, match="exact mode"):
            parse_scenario(raw, "mem")

    def test_error_paths_are_located(self):
        raw = {"version": 1,
               "spaces": {"E": {"kind": "sequence", "delta": 1.0}},
               "operators": {"T": {"op": "warp", "space": "E"}}}
        with pytest.raises(ScenarioError, match="operators.T"):
            parse_scenario(raw, "mem")

    def test_reference_validation(self):
        raw = {"version": 1,
               "spaces": {"E": {"kind": "sequence", "delta": 1.0}},
               "stability_pairs": [{"base": "missing", "perturbation": "also"}]}
        with pytest.raises(ScenarioError, match="unknown operator"):
            parse_scenario(raw, "mem")


class TestSuiteRegistry:
    def test_at_least_seventeen(self):
        assert len(SUITES) >= 17

    def test_spec_suite_names_present(self):
        required = {"sc1", "chain-rule", "fredholm-index", "scplus-stability",
                    "regularizing", "splicing-core", "tangent-splicing",
                    "core-chain-rule", "degeneracy", "faces",
                    "product-degeneracy", "fred-submersion", "strong-bundle",
                    "filler", "linearization", "filled-block", "pullback"}
        assert required <= set(SUITES)

    def test_every_suite_has_claim(self):
        for name in SUITES:
            assert CLAIMS[name]


class TestDeterminism:
    def test_report_body_byte_identical(self):
        scen1 = load_scenario(SCENARIOS / "chain_rule.json")
        scen2 = load_scenario(SCENARIOS / "chain_rule.json")
        r1 = run_suites(scen1, ["chain-rule"])
        r2 = run_suites(scen2, ["chain-rule"])
        body1 = report_body_text(build_report(scen1, r1, {"total_s": 1.0}))
        body2 = report_body_text(build_report(scen2, r2, {"total_s": 99.0}))
        assert body1 == body2

    def test_parallel_equals_serial(self):
        scen = load_scenario(SCENARIOS / "standard.json")
        serial = run_suites(scen, ["faces", "product-degeneracy", "compact-embedding"])
        scen2 = load_scenario(SCENARIOS / "standard.json")
        parallel = run_suites(scen2, ["faces", "product-degeneracy",
                                      "compact-embedding"], jobs=3)
        b1 = report_body_text(build_report(scen, serial))
        b2 = report_body_text(build_report(scen2, parallel))
        assert b1 == b2

    def test_report_fields(self):
        scen = load_scenario(SCENARIOS / "chain_rule.json")
        rep = build_report(scen, run_suites(scen), {"total_s": 0.1})
        assert rep["version"] == 1
        assert rep["scenario_hash"].startswith("sha256:")
        assert rep["arithmetic"] == "exact"
        body = json.loads(report_body_text(rep))
        assert "timing" not in body
        chain = body["suites"]["chain-rule"]
        assert "tolerance" in chain["residuals"]


class TestCli:
    def test_list_suites(self, capsys):
        assert main(["list-suites"]) == 0
        out = capsys.readouterr().out
        assert "filled-block" in out
        assert "T(g o f) = Tg o Tf" in out

    def test_run_chain_rule_exit_zero(self, capsys, tmp_path):
        report = tmp_path / "report.json"
        code = main(["run", str(SCENARIOS / "chain_rule.json"),
                     "--report", str(report)])
        assert code == 0
        saved = json.loads(report.read_text())
        assert saved["passed"] is True

    def test_run_broken_exit_one(self, capsys):
        code = main(["run", str(SCENARIOS / "broken_splicing.json")])
        assert code == 1
        out = capsys.readouterr().out
        assert "[FAIL] sc1" in out

    def test_malformed_exit_two(self, tmp_path, capsys):
        bad = tmp_path / "bad.json"
        bad.write_text("{not json")
        assert main(["run", str(bad)]) == 2

    def test_suite_filter(self, capsys):
        code = main(["run", str(SCENARIOS / "standard.json"),
                     "--suite", "faces", "--suite", "product-degeneracy"])
        assert code == 0
        out = capsys.readouterr().out
        assert "[PASS] faces" in out and "chain-rule" not in out

    def test_unknown_suite_exit_two(self, capsys):
        code = main(["run", str(SCENARIOS / "standard.json"),
                     "--suite", "not-a-suite"])
        assert code == 2

    def test_seed_override_recorded(self, tmp_path):
        report = tmp_path / "r.json"
        main(["run", str(SCENARIOS / "chain_rule.json"), "--seed", "42",
              "--report", str(report)])
        assert json.loads(report.read_text())["seed"] == 42

    def test_module_invocation(self):
        proc = subprocess.run([sys.executable, "-m", "scgeom", "list-suites"],
                              capture_output=True, text=True)
        assert proc.returncode == 0
        assert "pullback" in proc.stdout
