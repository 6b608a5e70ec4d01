"""Strong bundles: bi-filtration, sections, fillers, linearizations, blocks."""

import math
from fractions import Fraction

import numpy as np
import pytest

from scgeom.bundles import (BundleMap, Filler, Section, StrongBundleCore,
                            bifiltration_contains, const_rank_bundle_splicing,
                            fill, filled_linearization_block, identity_filler,
                            linearization_delta_scplus, linearize, poly_section,
                            pullback_bundle, pulled_base_bundle_splicing,
                            scplus_section_through, strong_map_class_check,
                            trivial_bundle_splicing, zero_section,
                            zero_set_equivalence)
from scgeom.calculus import FunctionMap, PolyMap, PolyTerm, whole_space
from scgeom.operators import DiagRule, RankOneTerm, ScOperator, analyze
from scgeom.packing import Packing
from scgeom.spaces import (FiniteSpace, PairVector, QuadrantSpace,
                           SequenceSpace, Vector)
from scgeom.splicing import (LocalModel, PartialQuadrant, SplicingCore,
                             box_domain, const_rank_splicing,
                             rank_jump_splicing, sample_core_point,
                             trivial_splicing)

E = SequenceSpace(delta=1.0)


def point_model(corner_dim=0):
    """Base model over a (possibly zero-dimensional) quadrant box."""
    param = box_domain(corner_dim, 0, hi=1.0)
    return LocalModel(SplicingCore(trivial_splicing(param, E)))


def const_rank_model(rank=2, corner_dim=1):
    param = box_domain(corner_dim, 0, hi=1.0)
    return LocalModel(SplicingCore(const_rank_splicing(param, E, rank)))


def rank_jump_model():
    param = box_domain(1, 0, hi=1.0)
    return LocalModel(SplicingCore(rank_jump_splicing(param, E)))


def rng():
    return np.random.default_rng(23)


class TestBifiltration:
    def setup_method(self):
        self.bundle = trivial_bundle_splicing(point_model(1), E)
        self.core = StrongBundleCore(self.bundle)
        self.w = PairVector(Vector.make({0: Fraction(1, 2)}, level=3),
                            Vector.basis(1, 1, level=3))

    def test_k0_and_k1_views(self):
        u = Vector.basis(0, 1, level=2)
        assert self.core.view_contains(self.w, u, 2, 0)["member"]
        assert self.core.view_contains(self.w, u, 1, 1)["member"]

    def test_legal_pairs(self):
        u = Vector.basis(0)
        for m, k in ((0, 0), (0, 1), (2, 3), (3, 1)):
            assert bifiltration_contains(self.core, self.w, u, m, k)["member"]

    def test_illegal_pair_rejected(self):
        with pytest.raises(ValueError):
            bifiltration_contains(self.core, self.w, Vector.basis(0), 1, 3)

    def test_fixed_point_required(self):
        bundle = const_rank_bundle_splicing(const_rank_model(2), E, 2)
        core = StrongBundleCore(bundle)
        w = PairVector(Vector.make({0: Fraction(1, 2)}), Vector.basis(0))
        assert core.contains(w, Vector.basis(1), 0, 0)["member"]
        assert not core.contains(w, Vector.basis(5), 0, 0)["member"]

    def test_level_shift_certificate(self):
        bundle = pulled_base_bundle_splicing(rank_jump_model())
        samples = [sample_core_point(bundle.base_splicing, rng()) for _ in range(6)]
        cert = bundle.level_shift_certificate(samples)
        assert cert["passed"]


class TestSections:
    def test_core_condition(self):
        bundle = const_rank_bundle_splicing(const_rank_model(2), E, 2)
        pk = bundle.packing
        f = poly_section(bundle,
                         linear=ScOperator.rank_one(pk.packed_space, E,
                                                    Vector.basis(1), Vector.basis(0)),
                         name="g")
        samples = [sample_core_point(bundle.base_splicing, rng()) for _ in range(5)]
        assert f.core_condition(samples)["passed"]

    def test_scplus_section_through_constant_rho(self):
        bundle = const_rank_bundle_splicing(const_rank_model(2), E, 2)
        pk = bundle.packing
        f = poly_section(bundle,
                         linear=ScOperator.rank_one(pk.packed_space, E,
                                                    Vector.basis(1), Vector.basis(0)))
        w0 = PairVector(Vector.make({0: Fraction(1, 2)}), Vector.basis(0))
        s = scplus_section_through(bundle, f, w0)
        assert s.scplus
        # constant rho: s is the constant section at g(w0)
        w1 = PairVector(Vector.make({0: Fraction(1, 4)}), Vector.basis(1))
        assert s.eval(w1) == f.eval(w0)
        assert s.eval(w0) == f.eval(w0)

    def test_scplus_section_through_zero_value(self):
        bundle = trivial_bundle_splicing(point_model(1), E)
        f = zero_section(bundle)
        w0 = PairVector(Vector.make({0: Fraction(1, 2)}), Vector.basis(2))
        s = scplus_section_through(bundle, f, w0)
        assert s.eval(w0).is_zero()

    def test_scplus_section_through_rank_jump(self):
        bundle = pulled_base_bundle_splicing(rank_jump_model())
        pk = bundle.packing
        # a section with finite-support value at an active base point
        g = poly_section(bundle, linear=None,
                         terms=[PolyTerm(Fraction(1), (), Vector.basis(3))])
        w0 = PairVector(Vector.make({0: Fraction(3, 4)}),  # window {3, 4}
                        Vector.zero())
        s = scplus_section_through(bundle, g, w0)
        v0 = s.eval(w0)
        g0 = g.eval(w0)
        # s(w0) = rho(w0, g(w0)) = pi_v0(e_3), the window component of g(w0)
        assert (v0 - bundle.rho(w0, g0)).is_zero(1e-14)
        # s varies with w: at a different parameter the window moved
        w1 = PairVector(Vector.make({0: Fraction(1, 4)}), Vector.zero())
        assert not (s.eval(w1) - v0).is_zero(1e-6)


def left_shift_section(bundle):
    """g = L on the fiber block: the standing index-1 linearization."""
    pk = bundle.packing
    L = ScOperator.shift_left(E)
    lin = section_linear_from_fiber(pk, L)
    return poly_section(bundle, linear=lin, name="L-section")


def section_linear_from_fiber(pk: Packing, op: ScOperator) -> ScOperator:
    """Lift a fiber operator to packed-base -> F with the index offset."""
    from scgeom.operators import BandTerm
    n = pk.n_base
    bands = [BandTerm(t.shift - n,
                      t.rule.shifted(-n).masked(max(n, n - t.shift)))
             for t in op.band_terms]
    ranks = [RankOneTerm(pk.embed_fiber(t.lam), t.u) for t in op.rank_terms]
    return ScOperator(pk.packed_space, op.codomain, bands, ranks)


class TestLinearize:
    def test_f_equals_s_zero_operator(self):
        from scgeom.operators import NotScFredholmError
        bundle = trivial_bundle_splicing(point_model(0), E)
        f = zero_section(bundle)
        lin = linearize(bundle, f, zero_section(bundle),
                        PairVector(Vector.zero(), Vector.zero()))
        for k in range(5):
            assert lin.operator.apply(Vector.basis(k)).is_zero()
        # the zero operator on an infinite scale is honestly not Fredholm
        with pytest.raises(NotScFredholmError):
            lin.index()

    def test_left_shift_index_one(self):
        bundle = trivial_bundle_splicing(point_model(0), E)
        f = left_shift_section(bundle)
        q = PairVector(Vector.zero(), Vector.zero())
        lin = linearize(bundle, f, zero_section(bundle), q)
        assert lin.index() == 1

    def test_mismatch_rejected(self):
        bundle = trivial_bundle_splicing(point_model(0), E)
        f = poly_section(bundle, linear=None,
                         terms=[PolyTerm(Fraction(1), (), Vector.basis(0))])
        with pytest.raises(ValueError):
            linearize(bundle, f, zero_section(bundle),
                      PairVector(Vector.zero(), Vector.zero()))

    def test_linear_section_base_point_independent(self):
        bundle = trivial_bundle_splicing(point_model(0), E)
        f = left_shift_section(bundle)
        s = zero_section(bundle)
        q1 = PairVector(Vector.zero(), Vector.zero())
        lin1 = linearize(bundle, f, s, q1)
        # at a nonzero smooth point, the zero section no longer matches f, so
        # match with the constant section through f(q2)
        q2 = PairVector(Vector.zero(), Vector.basis(2, 1, level=2))
        s2 = scplus_section_through(bundle, f, q2)
        lin2 = linearize(bundle, f, s2, q2)
        for k in range(6):
            d = lin1.operator.apply(Vector.basis(k)) - lin2.operator.apply(Vector.basis(k))
            # difference is a one-level-gain (here: zero) correction
            assert E.level_norm(d, 0) <= 1e-12

    def test_delta_scplus_certificate(self):
        bundle = trivial_bundle_splicing(point_model(0), E)
        f = left_shift_section(bundle)
        s = zero_section(bundle)
        # second matching section: s + one-level-gain linear part vanishing at 0
        pk = bundle.packing
        gain = ScOperator.diagonal(E, DiagRule.geometric(Fraction(1, 8), Fraction(1, 4)))
        t_map = PolyMap(whole_space(pk.packed_space), E,
                        linear=section_linear_from_fiber(pk, gain))
        t = Section(bundle, t_map, scplus=True, name="t")
        q = PairVector(Vector.zero(), Vector.zero())
        cert = linearization_delta_scplus(bundle, f, s, t, q)
        assert cert.passed
        assert cert.index_s == cert.index_t == 1
        assert cert.scplus_ok

    def test_delta_zero_when_sections_equal(self):
        bundle = trivial_bundle_splicing(point_model(0), E)
        f = left_shift_section(bundle)
        s = zero_section(bundle)
        q = PairVector(Vector.zero(), Vector.zero())
        cert = linearization_delta_scplus(bundle, f, s, s, q)
        assert cert.passed
        assert all(not t.rule.geoms or t.rule.sup_abs() == 0
                   for t in cert.difference.band_terms) or \
            cert.difference.apply(Vector.basis(0)).is_zero()


class TestFillers:
    def test_trivial_filler_no_complement(self):
        bundle = trivial_bundle_splicing(point_model(1), E)
        fc = identity_filler(bundle)
        x = bundle.packing.pack(Vector.make({0: Fraction(1, 2)}), Vector.basis(3))
        assert fc.principal(x).is_zero()

    def test_const_rank_filler_annihilation_and_linearity(self):
        model = const_rank_model(2)
        bundle = pulled_base_bundle_splicing(model)
        fc = identity_filler(bundle)
        g = rng()
        samples = []
        for _ in range(8):
            p = sample_core_point(bundle.base_splicing, g)
            x = bundle.packing.pack(p.left, p.right + Vector.basis(4, Fraction(1, 3)))
            samples.append(x)
        assert fc.annihilation_check(samples)["passed"]
        base_pts = [sample_core_point(bundle.base_splicing, g) for _ in range(5)]
        rep = fc.linearity_check(base_pts)
        assert rep["passed"]

    def test_rank_jump_filler(self):
        bundle = pulled_base_bundle_splicing(rank_jump_model())
        fc = identity_filler(bundle)
        g = rng()
        samples = []
        for _ in range(8):
            p = sample_core_point(bundle.base_splicing, g)
            x = bundle.packing.pack(p.left, p.right + Vector.basis(7, Fraction(1, 2)))
            samples.append(x)
        assert fc.annihilation_check(samples)["passed"]


class TestFilledSections:
    def test_zero_set_equivalence_const_rank(self):
        model = const_rank_model(2)
        bundle = const_rank_bundle_splicing(model, E, 2)
        fc = identity_filler(bundle)
        pk = bundle.packing
        # section vanishing exactly when the first core coordinate vanishes
        f = poly_section(bundle,
                         linear=ScOperator.rank_one(pk.packed_space, E,
                                                    Vector.basis(pk.n_base),
                                                    Vector.basis(0)))
        filled = fill(bundle, f, fc)
        g = rng()
        samples = []
        for _ in range(40):
            p = sample_core_point(bundle.base_splicing, g)
            extra = Vector.basis(int(g.integers(2, 7)),
                                 Fraction(int(g.integers(-2, 3)), 2))
            samples.append(pk.pack(p.left, p.right + extra))
            # points exactly on the solution set: kill the core part entirely
            samples.append(pk.pack(p.left, extra.truncate(0)))
        rep = zero_set_equivalence(filled, samples)
        assert rep["passed"], rep["mismatches"][:2]

    def test_zero_section_filled_zeros_are_core(self):
        bundle = pulled_base_bundle_splicing(const_rank_model(2))
        fc = identity_filler(bundle)
        filled = fill(bundle, zero_section(bundle), fc)
        pk = bundle.packing
        v = Vector.make({0: Fraction(1, 2)})
        on_core = pk.pack(v, Vector.basis(1, Fraction(1, 2)))
        off_core = pk.pack(v, Vector.basis(4, Fraction(1, 2)))
        assert filled.principal(on_core).is_zero(1e-12)
        assert not filled.principal(off_core).is_zero(1e-12)


class TestFilledBlock:
    def test_trivial_complement_left_shift(self):
        bundle = trivial_bundle_splicing(point_model(0), E)
        f = left_shift_section(bundle)
        fc = identity_filler(bundle)
        rep = filled_linearization_block(bundle, f, fc)
        assert rep.passed
        assert rep.index_linearization == rep.index_filled == 1
        assert rep.assembly_residual <= 1e-12

    def test_const_rank_block(self):
        model = const_rank_model(2)
        bundle = const_rank_bundle_splicing(model, E, 2)
        fc = identity_filler(bundle)
        pk = bundle.packing
        # g: F2-valued section mixing base quadrant and core coordinates
        f = poly_section(
            bundle,
            linear=ScOperator.rank_one(pk.packed_space, E, Vector.basis(0),
                                       Vector.basis(0))
            + ScOperator.rank_one(pk.packed_space, E, Vector.basis(pk.n_base),
                                  Vector.basis(1)))
        rep = filled_linearization_block(bundle, f, fc)
        assert rep.passed
        assert rep.cross_section_residual <= 1e-10
        assert rep.cross_filler_residual <= 1e-10
        assert rep.indices_equal

    def test_rank_jump_zero_section_block(self):
        bundle = pulled_base_bundle_splicing(rank_jump_model())
        f = zero_section(bundle)
        fc = identity_filler(bundle)
        rep = filled_linearization_block(bundle, f, fc)
        assert rep.passed
        # T_q X is the 1-dim corner direction; Y_q = {0}: index 1 either way
        assert rep.index_linearization == 1
        assert rep.index_filled == 1
        assert rep.c_exact


class TestBundleMapClass:
    def make(self, gain: bool):
        model = point_model(1)
        bundle = trivial_bundle_splicing(model, E)
        pk = bundle.packing
        phi = PolyMap(whole_space(pk.packed_space), pk.packed_space,
                      linear=ScOperator.identity(pk.packed_space))
        rule = DiagRule.geometric(1, Fraction(1, 4)) if gain else DiagRule.const(1)
        sec_op = section_linear_from_fiber(pk, ScOperator.diagonal(E, rule))
        sec = PolyMap(whole_space(pk.packed_space), E, linear=sec_op)
        return bundle, BundleMap(bundle, bundle, phi,
                                 phi_u=lambda w, u: u, section_part=sec,
                                 name="gain" if gain else "lossy")

    def samples(self, bundle, n=4):
        g = rng()
        return [sample_core_point(bundle.base_splicing, g) for _ in range(n)]

    def test_identity_map_passes_all(self):
        bundle, _ = self.make(True)
        pk = bundle.packing
        phi = PolyMap(whole_space(pk.packed_space), pk.packed_space,
                      linear=ScOperator.identity(pk.packed_space))
        bmap = BundleMap(bundle, bundle, phi, phi_u=lambda w, u: u)
        rep = strong_map_class_check(bmap, self.samples(bundle))
        assert rep.classification == "sc1_triangle"

    def test_scplus_base_dependence_passes(self):
        bundle, bmap = self.make(gain=True)
        rep = strong_map_class_check(bmap, self.samples(bundle))
        assert rep.classification == "sc1_triangle"

    def test_level_losing_map_classified(self):
        bundle, bmap = self.make(gain=False)
        rep = strong_map_class_check(bmap, self.samples(bundle))
        assert rep.classification == "sc1_but_not_triangle"
        assert rep.view_reports[0]["bounded"]
        assert not rep.view_reports[1]["bounded"]


class TestPullback:
    def test_identity_pullback_same_values(self):
        bundle = const_rank_bundle_splicing(const_rank_model(2), E, 2)
        pb = pullback_bundle(bundle, lambda w: w, lambda w, dw: dw,
                             bundle.base_model, name="id*")
        g = rng()
        for _ in range(6):
            w = sample_core_point(bundle.base_splicing, g)
            u = Vector.make({0: 1, 3: Fraction(1, 2)})
            assert pb.rho(w, u) == bundle.rho(w, u)

    def test_constant_map_constant_fibers(self):
        bundle = pulled_base_bundle_splicing(rank_jump_model())
        w_fixed = PairVector(Vector.make({0: Fraction(3, 4)}), Vector.zero())
        pb = pullback_bundle(bundle, lambda w: w_fixed,
                             lambda w, dw: PairVector(Vector.zero(), Vector.zero()),
                             bundle.base_model, name="const*")
        g = rng()
        u = Vector.make({3: 1, 4: 1})
        vals = {str(pb.rho(sample_core_point(bundle.base_splicing, g), u).entries)
                for _ in range(5)}
        assert len(vals) == 1

    def test_diffeo_pullback_core_bijection(self):
        bundle = const_rank_bundle_splicing(const_rank_model(2), E, 2)

        def chi(w):  # positive rescaling of the base parameter
            return PairVector(w.left.scale(Fraction(1, 2)), w.right)

        def dchi(w, dw):
            return PairVector(dw.left.scale(Fraction(1, 2)), dw.right)

        pb = pullback_bundle(bundle, chi, dchi, bundle.base_model, name="chi*")
        g = rng()
        for _ in range(6):
            w = sample_core_point(bundle.base_splicing, g)
            u = Vector.make({0: 1, 1: Fraction(-1, 3)})
            ru = pb.rho(w, u)
            # (w, u) in pullback core iff (chi(w), u) in the original core
            orig = bundle.rho(chi(w), u)
            assert (ru - orig).is_zero()
