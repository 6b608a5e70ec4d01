"""Scenario-driven verification harness: suites, reports, CLI."""

from .scenario import Scenario, ScenarioError, load_scenario
from .suites import SUITES, run_suites
from .report import build_report, emit_report
