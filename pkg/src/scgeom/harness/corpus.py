"""Builders turning scenario declarations into live objects.

Every builder raises ScenarioError with the JSON-path of the offending
entry.  Numbers ("p/q" strings, integers, floats) go through as_scalar; in
exact arithmetic mode raw floats are rejected.
"""

from __future__ import annotations

import math
from fractions import Fraction
from typing import Any

from ..bundles import (BundleMap, StrongBundleSplicing,
                       const_rank_bundle_splicing, identity_filler,
                       poly_section, pulled_base_bundle_splicing,
                       trivial_bundle_splicing, zero_section)
from ..calculus import (LinearScMap, PolyMap, PolyTerm, SmoothMap,
                        whole_space)
from ..operators import DiagRule, ScOperator, ScPlusOperator
from ..packing import Packing
from ..spaces import (FiniteSpace, ScaleSpace, SequenceSpace, Vector,
                      as_scalar)
from ..splicing import (LocalModel, ParamDomain, Splicing, SplicingCore,
                        box_domain, const_rank_splicing, rank_jump_splicing,
                        trivial_splicing, zero_splicing)


class ScenarioError(ValueError):
    """Scenario parse/validation failure, with a location path."""

    def __init__(self, path: str, message: str):
        self.path = path
        super().__init__(f"{path}: {message}")


def _num(value, path: str, exact: bool):
    try:
        scalar = as_scalar(value)
    except (TypeError, ValueError) as exc:
        raise ScenarioError(path, f"not a number: {value!r} ({exc})")
    if exact and isinstance(scalar, float):
        raise ScenarioError(path, "raw floats are not allowed in exact mode; "
                                  "use \"p/q\" strings")
    return scalar


def _vector(data, path: str, exact: bool) -> Vector:
    if isinstance(data, dict):
        items = {int(k): _num(v, f"{path}.{k}", exact) for k, v in data.items()}
        return Vector.make(items)
    if isinstance(data, list):
        if data and isinstance(data[0], list):
            return Vector.make({int(k): _num(v, f"{path}[{k}]", exact)
                                for k, v in data})
        return Vector.make([_num(v, f"{path}[{i}]", exact)
                            for i, v in enumerate(data)])
    raise ScenarioError(path, "vector must be a dict, pair list, or dense list")


def build_space(data: dict, path: str) -> ScaleSpace:
    kind = data.get("kind")
    if kind == "sequence":
        return SequenceSpace(delta=float(data.get("delta", 1.0)))
    if kind == "finite":
        return FiniteSpace(int(data["dim"]))
    raise ScenarioError(path, f"unknown space kind {kind!r}")


_NAMED_RULES = {
    "one": lambda: DiagRule.const(1),
    "exp(-k)": lambda: DiagRule.geometric(1.0, math.exp(-1.0)),
    "2^-k": lambda: DiagRule.geometric(1, Fraction(1, 2)),
    "4^-k": lambda: DiagRule.geometric(1, Fraction(1, 4)),
}


def build_rule(data, path: str, exact: bool) -> DiagRule:
    if isinstance(data, str):
        if data in _NAMED_RULES:
            return _NAMED_RULES[data]()
        if data.startswith("const:"):
            return DiagRule.const(_num(data[6:], path, exact))
        if data.startswith("geom:"):
            parts = data.split(":")
            if len(parts) != 3:
                raise ScenarioError(path, "geom rule needs geom:<c>:<r>")
            return DiagRule.geometric(_num(parts[1], path, exact),
                                      _num(parts[2], path, exact))
        raise ScenarioError(path, f"unknown diagonal rule {data!r}")
    raise ScenarioError(path, "diagonal rule must be a string")


def build_operator(data: dict, space: ScaleSpace, path: str,
                   exact: bool) -> ScOperator:
    op = data.get("op")
    if op == "shift":
        power = int(data.get("power", 1))
        if data.get("dir") == "left":
            return ScOperator.shift_left(space, power)
        if data.get("dir") == "right":
            return ScOperator.shift_right(space, power)
        raise ScenarioError(path, "shift dir must be 'left' or 'right'")
    if op == "diag":
        return ScOperator.diagonal(space, build_rule(data.get("rule"),
                                                     f"{path}.rule", exact))
    if op == "rank1":
        lam = _vector(data["lam"], f"{path}.lam", exact)
        u = _vector(data["u"], f"{path}.u", exact)
        return ScOperator.rank_one(space, space, lam, u)
    if op == "identity":
        return ScOperator.identity(space)
    if op == "scale":
        c = _num(data["c"], f"{path}.c", exact)
        return build_operator(data["arg"], space, f"{path}.arg", exact).scale(c)
    if op == "sum":
        args = data.get("args", [])
        if not args:
            raise ScenarioError(path, "sum needs at least one argument")
        total = build_operator(args[0], space, f"{path}.args[0]", exact)
        for i, a in enumerate(args[1:], 1):
            total = total + build_operator(a, space, f"{path}.args[{i}]", exact)
        return total
    if op == "compose":
        args = data.get("args", [])
        if not args:
            raise ScenarioError(path, "compose needs at least one argument")
        total = build_operator(args[0], space, f"{path}.args[0]", exact)
        for i, a in enumerate(args[1:], 1):
            total = total.compose(build_operator(a, space, f"{path}.args[{i}]", exact))
        return total
    raise ScenarioError(path, f"unknown operator node {op!r}")


def build_map(data: dict, spaces: dict, operators: dict, maps: dict,
              path: str, exact: bool) -> SmoothMap:
    kind = data.get("map")
    space = spaces.get(data.get("space", "E"))
    if space is None:
        raise ScenarioError(f"{path}.space", f"unknown space {data.get('space')!r}")
    if kind == "linear":
        term = data.get("op")
        if isinstance(term, str):
            if term not in operators:
                raise ScenarioError(f"{path}.op", f"unknown operator {term!r}")
            return LinearScMap(operators[term])
        return LinearScMap(build_operator(term, space, f"{path}.op", exact))
    if kind == "polyterm":
        coord = int(data.get("coord", 0))
        terms = []
        for i, mono in enumerate(data.get("monomials", [])):
            coeff = _num(mono.get("coeff", 1), f"{path}.monomials[{i}].coeff", exact)
            power = int(mono.get("power", 1))
            target = int(mono.get("target", 0))
            terms.append(PolyTerm(coeff, tuple([Vector.basis(coord)] * power),
                                  Vector.basis(target)))
        return PolyMap(whole_space(space), space,
                       linear=ScOperator.identity(space), terms=terms)
    if kind == "compose":
        names = data.get("args", [])
        built = []
        for i, n in enumerate(names):
            if n not in maps:
                raise ScenarioError(f"{path}.args[{i}]", f"unknown map {n!r}")
            built.append(maps[n])
        from ..calculus import CompositeMap
        total = built[-1]
        for g in reversed(built[:-1]):
            total = CompositeMap(g, total)
        return total
    raise ScenarioError(path, f"unknown map node {kind!r}")


def build_splicing(data: dict, path: str, exact: bool) -> Splicing:
    kind = data.get("splicing")
    corner = int(data.get("corner_dim", 1))
    extra = int(data.get("extra_dim", 0))
    hi = float(data.get("hi", 1.0))
    param = box_domain(corner, extra, hi=hi)
    fiber = SequenceSpace(delta=float(data.get("delta", 1.0)))
    if kind == "trivial":
        return trivial_splicing(param, fiber)
    if kind == "zero":
        return zero_splicing(param, fiber)
    if kind == "const_rank":
        return const_rank_splicing(param, fiber, int(data.get("rank", 1)))
    if kind == "rank_jump":
        return rank_jump_splicing(param, fiber,
                                  profile=data.get("profile", "exp_inv"),
                                  broken=bool(data.get("broken", False)))
    raise ScenarioError(path, f"unknown splicing kind {kind!r}")


def build_bundle(data: dict, spaces: dict, path: str, exact: bool) -> dict:
    base_spec = data.get("base")
    if not isinstance(base_spec, dict):
        raise ScenarioError(f"{path}.base", "bundle base must be a splicing spec")
    base_splicing = build_splicing(base_spec, f"{path}.base", exact)
    model = LocalModel(SplicingCore(base_splicing))
    fiber_name = data.get("fiber", "E")
    fiber = spaces.get(fiber_name)
    if fiber is None:
        raise ScenarioError(f"{path}.fiber", f"unknown space {fiber_name!r}")
    rho_spec = data.get("rho", {"rho": "trivial"})
    rho_kind = rho_spec.get("rho")
    if rho_kind == "trivial":
        bundle = trivial_bundle_splicing(model, fiber)
    elif rho_kind == "const_rank":
        bundle = const_rank_bundle_splicing(model, fiber, int(rho_spec.get("rank", 1)))
    elif rho_kind == "base":
        bundle = pulled_base_bundle_splicing(model)
    else:
        raise ScenarioError(f"{path}.rho", f"unknown rho kind {rho_kind!r}")

    sections = {}
    for name, sec in data.get("sections", {}).items():
        sections[name] = build_section(sec, bundle, f"{path}.sections.{name}", exact)
    filler = None
    if data.get("filler") == "identity":
        filler = identity_filler(bundle)
    elif data.get("filler") is not None:
        raise ScenarioError(f"{path}.filler",
                            f"unknown filler {data.get('filler')!r}")
    return {"bundle": bundle, "sections": sections, "filler": filler,
            "meta": data.get("meta", {})}


def build_section(data: dict, bundle: StrongBundleSplicing, path: str,
                  exact: bool):
    kind = data.get("section")
    scplus = bool(data.get("scplus", False))
    pk = bundle.packing
    spl = bundle.base_splicing

    def core_sample(rng):
        from ..splicing import sample_core_point
        p = sample_core_point(spl, rng)
        return pk.pack(p.left, p.right)

    if kind == "zero":
        sec = zero_section(bundle)
        sec.solution_sampler = core_sample
        return sec
    if kind == "fiber_op":
        term = build_operator(data["term"], bundle.fiber, f"{path}.term", exact)
        lin = _section_linear_from_fiber(pk, term)
        sec = poly_section(bundle, linear=lin, scplus=scplus,
                           name=data.get("name", "section"))
        kernel_vec = data.get("kernel_vector")
        if kernel_vec is not None:
            kv = _vector(kernel_vec, f"{path}.kernel_vector", exact)

            def fiber_kernel_sample(rng, kv=kv):
                from ..splicing import sample_core_point
                p = sample_core_point(spl, rng)
                c = Fraction(int(rng.integers(-4, 5)), 4)
                return pk.pack(p.left, spl.proj(p.left, kv.scale(c)))

            sec.solution_sampler = fiber_kernel_sample
        return sec
    if kind == "coordinate":
        # g(w) = <packed coordinate> * target fiber basis vector
        coord = int(data.get("coord", 0))
        target = int(data.get("target", 0))
        coeff = _num(data.get("coeff", 1), f"{path}.coeff", exact)
        lin = ScOperator.rank_one(pk.packed_space, bundle.fiber,
                                  Vector.basis(coord),
                                  Vector.basis(target)).scale(coeff)
        sec = poly_section(bundle, linear=lin, scplus=scplus,
                           name=data.get("name", "section"))

        def coord_zero_sample(rng, coord=coord):
            x = core_sample(rng)
            return Vector(tuple((k, v) for k, v in x.entries if k != coord),
                          x.level)

        sec.solution_sampler = coord_zero_sample
        return sec
    raise ScenarioError(path, f"unknown section kind {kind!r}")


def _section_linear_from_fiber(pk: Packing, op: ScOperator) -> ScOperator:
    from ..operators import BandTerm, RankOneTerm
    n = pk.n_base
    bands = [BandTerm(t.shift - n, t.rule.shifted(-n).masked(max(n, n - t.shift)))
             for t in op.band_terms]
    ranks = [RankOneTerm(pk.embed_fiber(t.lam), t.u) for t in op.rank_terms]
    return ScOperator(pk.packed_space, op.codomain, bands, ranks)
