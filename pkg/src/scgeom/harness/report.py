"""Canonical report documents: deterministic given scenario plus seed."""

from __future__ import annotations

import json
import math
from fractions import Fraction
from pathlib import Path
from typing import Any

from .scenario import Scenario
from .suites import SuiteResult

REPORT_VERSION = 1


def _canonical(value: Any) -> Any:
    """JSON-encodable canonical form; rationals as p/q strings, stable keys."""
    if isinstance(value, Fraction):
        return f"{value.numerator}/{value.denominator}"
    if isinstance(value, float):
        if math.isnan(value):
            return "nan"
        if math.isinf(value):
            return "inf" if value > 0 else "-inf"
        return value
    if isinstance(value, dict):
        return {str(k): _canonical(v) for k, v in sorted(value.items(),
                                                         key=lambda kv: str(kv[0]))}
    if isinstance(value, (list, tuple)):
        return [_canonical(v) for v in value]
    if isinstance(value, (str, int, bool)) or value is None:
        return value
    return repr(value)


def build_report(scen: Scenario, results: dict[str, SuiteResult],
                 timing: dict | None = None) -> dict:
    body = {
        "version": REPORT_VERSION,
        "scenario_hash": scen.content_hash(),
        "seed": scen.seed,
        "arithmetic": scen.arithmetic,
        "tolerances": _canonical(scen.tolerances),
        "suites": {name: _canonical(r.to_dict()) for name, r in results.items()},
        "passed": all(r.passed for r in results.values()),
    }
    if timing is not None:
        body["timing"] = _canonical(timing)
    return body


def report_body_text(report: dict) -> str:
    """Canonical serialization excluding timing: byte-identical across runs."""
    body = {k: v for k, v in report.items() if k != "timing"}
    return json.dumps(body, sort_keys=True, indent=2) + "\n"


def emit_report(report: dict, path: str | Path) -> None:
    path = Path(path)
    text = json.dumps(report, sort_keys=True, indent=2) + "\n"
    path.write_text(text)
