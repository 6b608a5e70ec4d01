"""Scenario files: one self-contained universe of objects per file."""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any

from ..operators import ScPlusOperator
from ..spaces import ScaleSpace
from .corpus import (ScenarioError, build_bundle, build_map, build_operator,
                     build_space, build_splicing)

CURRENT_VERSION = 1

_TOP_KEYS = {"version", "seed", "arithmetic", "tolerances", "spaces",
             "operators", "maps", "splicings", "chart_complexes", "bundles",
             "stability_pairs", "regularity_cases", "chain_pairs",
             "index_expectations", "suites", "description"}


@dataclass
class Scenario:
    """Validated scenario: raw document plus constructed objects."""

    raw: dict
    path: str
    seed: int
    arithmetic: str
    tolerances: dict
    spaces: dict[str, ScaleSpace] = field(default_factory=dict)
    operators: dict = field(default_factory=dict)
    operator_meta: dict = field(default_factory=dict)
    maps: dict = field(default_factory=dict)
    map_meta: dict = field(default_factory=dict)
    splicings: dict = field(default_factory=dict)
    splicing_meta: dict = field(default_factory=dict)
    bundles: dict = field(default_factory=dict)
    chart_complexes: dict = field(default_factory=dict)
    suites: list = field(default_factory=list)

    @property
    def exact(self) -> bool:
        return self.arithmetic == "exact"

    def content_hash(self) -> str:
        body = json.dumps(self.raw, sort_keys=True).encode()
        return "sha256:" + hashlib.sha256(body).hexdigest()


def load_scenario(path: str | Path, seed: int | None = None,
                  arithmetic: str | None = None,
                  tol: float | None = None) -> Scenario:
    path = Path(path)
    try:
        raw = json.loads(path.read_text())
    except FileNotFoundError:
        raise ScenarioError(str(path), "scenario file not found")
    except json.JSONDecodeError as exc:
        raise ScenarioError(f"{path}:{exc.lineno}:{exc.colno}", exc.msg)
    return parse_scenario(raw, str(path), seed=seed, arithmetic=arithmetic,
                          tol=tol)


def parse_scenario(raw: Any, where: str, seed: int | None = None,
                   arithmetic: str | None = None,
                   tol: float | None = None) -> Scenario:
    if not isinstance(raw, dict):
        raise ScenarioError(where, "scenario must be a JSON object")
    unknown = set(raw) - _TOP_KEYS
    if unknown:
        raise ScenarioError(where, f"unknown top-level keys {sorted(unknown)}")
    version = raw.get("version")
    if version != CURRENT_VERSION:
        raise ScenarioError(f"{where}.version",
                            f"unsupported version {version!r} (expected {CURRENT_VERSION})")
    mode = arithmetic or raw.get("arithmetic", "exact")
    if mode not in ("exact", "float"):
        raise ScenarioError(f"{where}.arithmetic", f"must be exact|float, got {mode!r}")
    tolerances = dict(raw.get("tolerances", {}))
    for key, value in tolerances.items():
        if not isinstance(value, (int, float)) or value <= 0:
            raise ScenarioError(f"{where}.tolerances.{key}",
                                "tolerances must be positive numbers")
    if tol is not None:
        tolerances["tau_zero"] = tol
    tolerances.setdefault("tau_zero", 1e-9)
    tolerances.setdefault("tol_sc1", 1e-7)
    tolerances.setdefault("tol_chain", 1e-9)

    scen = Scenario(raw=raw, path=where,
                    seed=int(seed if seed is not None else raw.get("seed", 0)),
                    arithmetic=mode, tolerances=tolerances)
    exact = scen.exact

    for name, spec in raw.get("spaces", {}).items():
        scen.spaces[name] = build_space(spec, f"spaces.{name}")

    for name, spec in raw.get("operators", {}).items():
        space_name = spec.get("space", "E")
        space = scen.spaces.get(space_name)
        if space is None:
            raise ScenarioError(f"operators.{name}.space",
                                f"unknown space {space_name!r}")
        term = {k: v for k, v in spec.items()
                if k not in ("space", "expect_index", "scplus", "name")}
        op = build_operator(term, space, f"operators.{name}", exact)
        if spec.get("scplus"):
            op = ScPlusOperator(op)
        scen.operators[name] = op
        scen.operator_meta[name] = {k: spec[k] for k in ("expect_index", "scplus")
                                    if k in spec}

    for name, spec in raw.get("maps", {}).items():
        scen.maps[name] = build_map(spec, scen.spaces, scen.operators, scen.maps,
                                    f"maps.{name}", exact)
        scen.map_meta[name] = {k: spec[k] for k in ("expect", "break_derivative",
                                                    "points") if k in spec}

    for name, spec in raw.get("splicings", {}).items():
        scen.splicings[name] = build_splicing(spec, f"splicings.{name}", exact)
        scen.splicing_meta[name] = {k: spec[k] for k in ("expect", "broken")
                                    if k in spec}

    for name, spec in raw.get("bundles", {}).items():
        scen.bundles[name] = build_bundle(spec, scen.spaces, f"bundles.{name}",
                                          exact)

    for name, spec in raw.get("chart_complexes", {}).items():
        if not isinstance(spec, dict):
            raise ScenarioError(f"chart_complexes.{name}", "must be an object")
        scen.chart_complexes[name] = spec

    suites = raw.get("suites", [])
    from .suites import SUITES
    for s in suites:
        if s not in SUITES:
            raise ScenarioError("suites", f"unknown suite {s!r}; "
                                          f"known: {sorted(SUITES)}")
    scen.suites = list(suites)
    _validate_references(scen)
    return scen


def _validate_references(scen: Scenario) -> None:
    for pair_path, pair in enumerate(scen.raw.get("stability_pairs", [])):
        for key in ("base", "perturbation"):
            name = pair.get(key)
            if name not in scen.operators:
                raise ScenarioError(f"stability_pairs[{pair_path}].{key}",
                                    f"unknown operator {name!r}")
    for i, case in enumerate(scen.raw.get("regularity_cases", [])):
        if case.get("op") not in scen.operators:
            raise ScenarioError(f"regularity_cases[{i}].op",
                                f"unknown operator {case.get('op')!r}")
    for i, pair in enumerate(scen.raw.get("chain_pairs", [])):
        for key in ("f", "g"):
            if pair.get(key) not in scen.maps:
                raise ScenarioError(f"chain_pairs[{i}].{key}",
                                    f"unknown map {pair.get(key)!r}")
