"""Stock model transformations: quadrant diffeomorphisms and normal forms.

These are the reusable corner-compatible transition maps (permutations,
positive scalings, shears, warps) and the projection normal forms used by
the fred-submersion machinery.  Each transition ships with its inverse and
closed-form derivatives.
"""

from __future__ import annotations

import math
from fractions import Fraction
from typing import Sequence

from .calculus import (FunctionMap, OpenSet, PolyMap, PolyTerm, SmoothMap,
                       whole_space)
from .operators import ScOperator
from .packing import Packing
from .polyfold import ChartTransition, MPolyfoldChart, PointMap, x_point, y_point
from .spaces import (FiniteSpace, PairVector, QuadrantSpace, Vector,
                     direct_sum)
from .splicing import (CoreMap, LocalModel, ParamDomain, SplicingCore,
                       box_domain, trivial_splicing)


def quadrant_chart(name: str, corner_dim: int, extra_dim: int = 0,
                   hi: float = 8.0) -> MPolyfoldChart:
    """Chart over a quadrant parameter box with no fiber content."""
    param = box_domain(corner_dim, extra_dim, hi=hi)
    model = LocalModel(SplicingCore(trivial_splicing(param, FiniteSpace(0))),
                       name=name)
    return MPolyfoldChart(name, model)


def _core_map(chart_a: MPolyfoldChart, chart_b: MPolyfoldChart,
              packed: SmoothMap, name: str) -> CoreMap:
    return CoreMap(chart_a.model, chart_b.model, packed, name)


def _packed_space(chart: MPolyfoldChart):
    spl = chart.model.splicing
    return Packing(spl.param.space, spl.fiber).packed_space


def permutation_transition(a: MPolyfoldChart, b: MPolyfoldChart,
                           perm: Sequence[int]) -> ChartTransition:
    """Coordinate permutation of the quadrant block; exact both ways."""
    space = _packed_space(a)
    n = len(perm)
    fwd_rows = [[1 if perm[i] == j else 0 for j in range(n)] for i in range(n)]
    inv_rows = [[1 if perm[j] == i else 0 for j in range(n)] for i in range(n)]
    fwd = PolyMap(whole_space(space), space,
                  linear=ScOperator.from_matrix(fwd_rows, space, space))
    inv = PolyMap(whole_space(space), space,
                  linear=ScOperator.from_matrix(inv_rows, space, space))
    return ChartTransition(a.name, b.name,
                           _core_map(a, b, fwd, f"perm{tuple(perm)}"),
                           _core_map(b, a, inv, f"perm{tuple(perm)}^-1"))


def scaling_transition(a: MPolyfoldChart, b: MPolyfoldChart,
                       factors: Sequence[Fraction]) -> ChartTransition:
    """Positive diagonal rescaling; preserves vanishing coordinates."""
    space = _packed_space(a)
    n = len(factors)
    if any(f <= 0 for f in factors):
        raise ValueError("scaling factors must be positive")
    fwd_rows = [[factors[i] if i == j else 0 for j in range(n)] for i in range(n)]
    inv_rows = [[Fraction(1, 1) / factors[i] if i == j else 0
                 for j in range(n)] for i in range(n)]
    fwd = PolyMap(whole_space(space), space,
                  linear=ScOperator.from_matrix(fwd_rows, space, space))
    inv = PolyMap(whole_space(space), space,
                  linear=ScOperator.from_matrix(inv_rows, space, space))
    return ChartTransition(a.name, b.name,
                           _core_map(a, b, fwd, "scale"),
                           _core_map(b, a, inv, "scale^-1"))


def warp_transition(a: MPolyfoldChart, b: MPolyfoldChart) -> ChartTransition:
    """(r, q) -> (r (1 + q^2), q) on a 1-corner chart with one free coordinate.

    The positive factor preserves the vanishing of r; the inverse is the
    rational map r' / (1 + q'^2).
    """
    space = _packed_space(a)
    fwd = PolyMap(whole_space(space), space,
                  linear=ScOperator.identity(space),
                  terms=[PolyTerm(Fraction(1),
                                  (Vector.basis(0), Vector.basis(1), Vector.basis(1)),
                                  Vector.basis(0))])

    def inv_eval(x: Vector) -> Vector:
        r, q = float(x[0]), float(x[1])
        return Vector.make({0: r / (1.0 + q * q), 1: q})

    def inv_deriv(x: Vector, h: Vector) -> Vector:
        r, q = float(x[0]), float(x[1])
        dr, dq = float(h[0]), float(h[1])
        denom = 1.0 + q * q
        return Vector.make({0: dr / denom - r * 2 * q * dq / denom ** 2, 1: dq})

    inv = FunctionMap(whole_space(space), space, inv_eval, inv_deriv,
                      name="warp^-1")
    return ChartTransition(a.name, b.name,
                           _core_map(a, b, fwd, "warp"),
                           _core_map(b, a, inv, "warp^-1"))


def shear_transition(a: MPolyfoldChart, b: MPolyfoldChart) -> ChartTransition:
    """(r1, r2) -> (r1, r2 (1 + r1)) on a 2-corner chart.

    With r1 >= 0 the factor is positive, so zero sets of both coordinates
    are preserved.
    """
    space = _packed_space(a)
    fwd = PolyMap(whole_space(space), space,
                  linear=ScOperator.identity(space),
                  terms=[PolyTerm(Fraction(1),
                                  (Vector.basis(0), Vector.basis(1)),
                                  Vector.basis(1))])

    def inv_eval(x: Vector) -> Vector:
        r1, r2 = float(x[0]), float(x[1])
        return Vector.make({0: r1, 1: r2 / (1.0 + r1)})

    def inv_deriv(x: Vector, h: Vector) -> Vector:
        r1, r2 = float(x[0]), float(x[1])
        d1, d2 = float(h[0]), float(h[1])
        denom = 1.0 + r1
        return Vector.make({0: d1, 1: d2 / denom - r2 * d1 / denom ** 2})

    inv = FunctionMap(whole_space(space), space, inv_eval, inv_deriv,
                      name="shear^-1")
    return ChartTransition(a.name, b.name,
                           _core_map(a, b, fwd, "shear"),
                           _core_map(b, a, inv, "shear^-1"))


def swap_shift_transition(a: MPolyfoldChart, b: MPolyfoldChart) -> ChartTransition:
    """(r1, r2, q) -> (r2, r1, q + r1^2): permutation plus a complement shift.

    Polynomial with polynomial inverse, so both directions are exact.
    """
    space = _packed_space(a)
    swap = ScOperator.from_matrix([[0, 1, 0], [1, 0, 0], [0, 0, 1]],
                                  space, space)
    fwd = PolyMap(whole_space(space), space, linear=swap,
                  terms=[PolyTerm(Fraction(1),
                                  (Vector.basis(0), Vector.basis(0)),
                                  Vector.basis(2))])
    inv = PolyMap(whole_space(space), space, linear=swap,
                  terms=[PolyTerm(Fraction(-1),
                                  (Vector.basis(1), Vector.basis(1)),
                                  Vector.basis(2))])
    return ChartTransition(a.name, b.name,
                           _core_map(a, b, fwd, "swapshift"),
                           _core_map(b, a, inv, "swapshift^-1"))


# ---------------------------------------------------------------------------
# fred-submersion model data
# ---------------------------------------------------------------------------

def projection_normal_form(param: ParamDomain, fiber, n: int):
    """The model projection (v, e', e'') -> (v, e') plus its point norm."""
    fin = FiniteSpace(n)
    x_space = direct_sum(param.space, direct_sum(fiber, fin))
    y_space = direct_sum(param.space, fiber)

    def f(p: PairVector) -> PairVector:
        return PairVector(p.left, p.right.left)

    def y_norm(d: PairVector) -> float:
        return y_space.level_norm(d, 0)

    def x_norm(d: PairVector) -> float:
        return x_space.level_norm(d, 0)

    return f, x_norm, y_norm


def conjugating_diffeo(n_total: int, scale: Fraction = Fraction(1, 2)) -> PointMap:
    """Invertible shear on (v, (e', e'')): e'' -> e'' + scale * [v_0] block."""

    def fwd(p: PairVector) -> PairVector:
        v, rest = p.left, p.right
        e, e2 = rest.left, rest.right
        bump = Vector.basis(0, scale * v[0]) if v[0] != 0 else Vector.zero()
        return x_point(v, e, e2 + bump)

    def inv(p: PairVector) -> PairVector:
        v, rest = p.left, p.right
        e, e2 = rest.left, rest.right
        bump = Vector.basis(0, scale * v[0]) if v[0] != 0 else Vector.zero()
        return x_point(v, e, e2 - bump)

    return PointMap(fwd, inv, "conj_shear")


def curved_codomain_chart(scale: Fraction = Fraction(1, 3)) -> PointMap:
    """Codomain chart (v, e) -> (v, e + scale * v_0^2 e_0): polynomial warp."""

    def fwd(p: PairVector) -> PairVector:
        v, e = p.left, p.right
        c = scale * v[0] * v[0]
        return y_point(v, e + Vector.basis(0, c)) if c != 0 else p

    def inv(p: PairVector) -> PairVector:
        v, e = p.left, p.right
        c = scale * v[0] * v[0]
        return y_point(v, e - Vector.basis(0, c)) if c != 0 else p

    return PointMap(fwd, inv, "curved_chart")
