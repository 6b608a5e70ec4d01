"""sc1 verification, tangent maps, chain rule, level-shift C^k checks."""

import math
from fractions import Fraction

import pytest

from scgeom.calculus import (CompositeMap, MapCertificationError, OpenSet,
                             PolyMap, PolyTerm, LinearScMap, Sc1Report,
                             TangentPoint, chain_rule_verify, certify_sc1,
                             coordinate_square_map, expand_composite,
                             identity_map, level_ck_check,
                             poly_perturbation_map, sc1_verify, tangent_map,
                             whole_space)
from scgeom.operators import ScOperator
from scgeom.spaces import FiniteSpace, SequenceSpace, Vector, quadrant

E = SequenceSpace(delta=1.0)


def lift(v: Vector) -> Vector:
    return v.at_level(1)


class TestSc1Verify:
    def test_linear_map_zero_residual(self):
        f = LinearScMap(ScOperator.shift_left(E))
        rep = sc1_verify(f, lift(Vector.make({0: 1, 2: Fraction(1, 3)})))
        assert rep.passed
        assert all(max(d.residuals) == 0 for d in rep.directions)

    def test_quadratic_first_order_residual(self):
        # f(x) = x + x_0^2 e_1: hand expansion gives a residual exactly r^2 u_0^2 e_1
        f = coordinate_square_map(E)
        x = lift(Vector.basis(0))
        rep = sc1_verify(f, x)
        assert rep.passed
        e0_dir = next(d for d in rep.directions if d.label == "e0")
        assert e0_dir.route == "sloped"
        # q(r) = r * u_0^2 / ||u||_1 = r for the unit e_0 direction
        radii = [2.0 ** -i for i in range(3, 13)]
        kept = e0_dir.residuals
        assert kept == pytest.approx(radii[-len(kept):], rel=1e-9)

    def test_wrong_derivative_fails(self):
        f = coordinate_square_map(E)
        broken = PolyMap(f.domain, f.codomain, linear=None, terms=f.terms)
        # evaluator of the true map, derivative missing the identity part
        broken.eval = f.eval  # type: ignore[method-assign]
        rep = sc1_verify(broken, lift(Vector.basis(0)))
        assert not rep.passed
        flat = [d for d in rep.directions if d.route == "flat"]
        assert flat, "residual should be bounded below for a wrong derivative"

    def test_quadrant_domain_inward_steps(self):
        q = quadrant(1, FiniteSpace(3))
        dom = OpenSet(q.space, quadrant=q)
        f = LinearScMap(ScOperator.identity(q.space), dom)
        x = Vector.make({0: 0, 1: 1}).at_level(1)  # on the face r_0 = 0
        rep = sc1_verify(f, x)
        assert rep.passed

    def test_domain_exit_error(self):
        from scgeom.calculus import DomainExitError
        q = quadrant(1, FiniteSpace(2))
        dom = OpenSet(q.space, quadrant=q)
        f = LinearScMap(ScOperator.identity(q.space), dom)
        with pytest.raises(DomainExitError):
            sc1_verify(f, Vector.make({0: -5}).at_level(1))


class TestTangentMap:
    def test_identity(self):
        f = identity_map(E)
        p = TangentPoint(lift(Vector.basis(2)), Vector.basis(0))
        out = tangent_map(f, p)
        assert out.base == p.base and out.direction == p.direction

    def test_linear_blockwise(self):
        T = ScOperator.shift_right(E)
        f = LinearScMap(T)
        p = TangentPoint(lift(Vector.basis(1)), Vector.make({0: 2}))
        out = tangent_map(f, p)
        assert out.base == Vector.basis(2).at_level(1)
        assert out.direction == Vector.make({1: 2})

    def test_quadratic_hand_value(self):
        # at x = e_0, h = e_0: (f(x), Df(x)h) = (e_0 + e_1, e_0 + 2 e_1)
        f = coordinate_square_map(E)
        certify_sc1(f, [lift(Vector.basis(0))])
        out = tangent_map(f, TangentPoint(lift(Vector.basis(0)), Vector.basis(0)))
        assert out.base == Vector.make({0: 1, 1: 1}).at_level(1)
        assert out.direction == Vector.make({0: 1, 1: 2})

    def test_uncertified_map_rejected(self):
        f = coordinate_square_map(E)
        with pytest.raises(MapCertificationError):
            tangent_map(f, TangentPoint(lift(Vector.basis(0)), Vector.basis(0)))


def sample_tangent_points(n=5):
    pts = []
    for i in range(n):
        base = Vector.make({0: Fraction(i, 7), 1: Fraction(1, 2),
                            2 + (i % 3): Fraction(-1, 3)}).at_level(1)
        direction = Vector.make({0: 1, i % 4: Fraction(1, 2)})
        pts.append(TangentPoint(base, direction))
    return pts


class TestChainRule:
    def test_identity_right_factor(self):
        f = coordinate_square_map(E)
        certify_sc1(f, [lift(Vector.basis(0))])
        g = identity_map(E)
        rep = chain_rule_verify(f, g, sample_tangent_points())
        assert rep.passed and rep.exact and rep.max_residual == 0.0

    def test_linear_pair_exact(self):
        f = LinearScMap(ScOperator.shift_right(E))
        g = LinearScMap(ScOperator.shift_left(E))
        rep = chain_rule_verify(f, g, sample_tangent_points())
        assert rep.passed and rep.exact

    def test_quadratic_pair_exact_rational(self):
        f = poly_perturbation_map(E, [(Fraction(1), 0, 2, 1)])
        g = poly_perturbation_map(E, [(Fraction(1, 2), 1, 2, 2), (Fraction(2), 0, 1, 3)])
        for m in (f, g):
            certify_sc1(m, [lift(Vector.basis(0))])
        rep = chain_rule_verify(f, g, sample_tangent_points())
        assert rep.passed and rep.exact and rep.composite_route == "expanded"
        assert rep.max_residual == 0.0

    def test_expansion_matches_pointwise_evaluation(self):
        f = poly_perturbation_map(E, [(Fraction(1), 0, 2, 1)])
        g = poly_perturbation_map(E, [(Fraction(1, 3), 1, 3, 0)])
        h = expand_composite(g, f)
        for p in sample_tangent_points():
            assert h.eval(p.base) == g.eval(f.eval(p.base))
            assert h.deriv(p.base, p.direction) == \
                g.deriv(f.eval(p.base), f.deriv(p.base, p.direction))

    def test_float_mode_within_tolerance(self):
        f = poly_perturbation_map(E, [(0.5, 0, 2, 1)])
        g = poly_perturbation_map(E, [(0.25, 1, 2, 2)])
        for m in (f, g):
            certify_sc1(m, [lift(Vector.basis(0))])
        rep = chain_rule_verify(f, g, sample_tangent_points())
        assert rep.passed and not rep.exact
        assert rep.max_residual <= 1e-9


class TestLevelCk:
    def test_linear_passes_all(self):
        f = LinearScMap(ScOperator.shift_left(E))
        pts = [Vector.make({0: 1, 2: 1}), Vector.basis(1)]
        for k in (1, 2):
            for m in (0, 1, 2):
                rep = level_ck_check(f, k, m, pts)
                assert rep.passed and rep.applicable

    def test_quadratic_forward(self):
        f = coordinate_square_map(E)
        rep = level_ck_check(f, 1, 0, [Vector.basis(0), Vector.make({0: Fraction(1, 2)})])
        assert rep.passed and rep.mode == "forward"

    def test_min_level_precondition_reported(self):
        dom = OpenSet(E, min_level=1, description="level >= 1 only")
        f = LinearScMap(ScOperator.identity(E), dom)
        rep = level_ck_check(f, 1, 0, [Vector.basis(0)])
        assert not rep.applicable
        assert "not applicable" in rep.note

    def test_sc1_certified_maps_pass_level_shifts(self):
        for f in (coordinate_square_map(E),
                  poly_perturbation_map(E, [(Fraction(1, 2), 1, 3, 0)])):
            certify_sc1(f, [lift(Vector.basis(0))])
            for m in (0, 1, 2):
                assert level_ck_check(f, 1, m, [Vector.basis(0)]).passed
