"""Structured operator algebra and the exact Fredholm machinery.

The index oracle used here is independent of the library's Schur-Cohn route:
diagonal limits are estimated by evaluating rules at a far index, and the
winding of the limit symbol is accumulated numerically on the level circles.
"""

import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from scgeom.operators import (DiagRule, IndexUndecidableError,
                              NotScFredholmError, ScOperator, ScPlusOperator,
                              analyze, compose_index, dense_complement,
                              fredholm_index, perturb_scplus_index,
                              regularity_lift, split_off_finite_dim)
from scgeom.spaces import FiniteSpace, SequenceSpace, Vector

E = SequenceSpace(delta=1.0)
L = ScOperator.shift_left(E)
R = ScOperator.shift_right(E)
I = ScOperator.identity(E)


def oracle_index(op, levels=(0, 1, 2, 3), grid=4096) -> int:
    """Winding of the limit symbol on every sampled level circle.

    Limits are read off numerically at a far index; the winding must agree
    across levels, otherwise the operator is not Fredholm scale-compatibly.
    """
    far = 400
    limits = {}
    for t in op.band_terms:
        val = float(t.rule.value(far))
        nxt = float(t.rule.value(far + 37))
        assert abs(val - nxt) < 1e-12, "oracle: rule has not settled"
        if abs(val) > 1e-12:
            limits[t.shift] = val
    assert limits, "oracle: compact operator has no index"
    theta = np.linspace(0.0, 2 * np.pi, grid, endpoint=True)
    windings = set()
    for m in levels:
        radius = math.exp(m)  # delta = 1
        z = radius * np.exp(1j * theta)
        sigma = sum(c * z ** s for s, c in limits.items())
        assert np.abs(sigma).min() > 1e-9, "oracle: symbol vanishes on a level circle"
        total = np.unwrap(np.angle(sigma))
        windings.add(round((total[-1] - total[0]) / (2 * np.pi)))
    assert len(windings) == 1, "oracle: winding jumps across levels"
    return -windings.pop()


class TestApply:
    def test_identity(self):
        x = Vector.make({0: 1, 5: -2})
        assert I.apply(x) == x

    def test_left_shift_kills_e0(self):
        assert L.apply(Vector.basis(0)).is_zero()
        assert L.apply(Vector.basis(3)) == Vector.basis(2)

    def test_exponential_diagonal(self):
        D = ScOperator.diagonal(E, DiagRule.geometric(1.0, math.exp(-1)))
        out = D.apply(Vector.basis(3))
        assert out[3] == pytest.approx(math.exp(-3), rel=1e-14)

    def test_rank_one(self):
        T = ScOperator.rank_one(E, E, Vector.basis(2), Vector.make({0: 1, 1: 1}))
        assert T.apply(Vector.basis(2)) == Vector.make({0: 1, 1: 1})
        assert T.apply(Vector.basis(1)).is_zero()

    def test_composition_matches_pointwise(self):
        A = L + ScOperator.diagonal(E, DiagRule.geometric(Fraction(1, 3), Fraction(1, 2)))
        B = R + ScOperator.rank_one(E, E, Vector.basis(1), Vector.basis(4))
        C = A.compose(B)
        for k in range(8):
            x = Vector.basis(k)
            assert C.apply(x) == A.apply(B.apply(x))

    def test_transpose_pairing(self):
        A = L + ScOperator.rank_one(E, E, Vector.make({1: 2}), Vector.make({3: 5}))
        At = A.transpose()
        for i in range(6):
            for j in range(6):
                x, y = Vector.basis(i), Vector.basis(j)
                assert y.inner(A.apply(x)) == At.apply(y).inner(x)


class TestFredholmIndex:
    def test_identity_zero(self):
        idx, spl = fredholm_index(I)
        assert idx == 0 and spl.materialized
        assert spl.kernel_basis == [] and spl.cokernel_basis == []

    def test_left_shift(self):
        idx, spl = fredholm_index(L)
        assert idx == 1 == oracle_index(L)
        assert spl.kernel_basis == [Vector.basis(0)]
        assert spl.cokernel_basis == []

    def test_right_shift(self):
        idx, spl = fredholm_index(R)
        assert idx == -1 == oracle_index(R)
        assert spl.kernel_basis == []
        assert spl.cokernel_basis == [Vector.basis(0)]

    def test_left_shift_solve_by_hand(self):
        # independent route: L x = y solved coordinatewise, x_(k+1) = y_k
        analysis = analyze(L)
        y = Vector.make({0: 2, 3: -1})
        x, gamma = analysis.solve(y)
        assert all(g == 0 for g in gamma)
        hand = Vector.make({1: 2, 4: -1})
        assert (x - hand).is_zero() or L.apply(x) == y

    def test_banded_with_root_inside(self):
        T = I - R.scale(2)  # symbol 1 - 2z, root 1/2 strictly inside
        idx, spl = fredholm_index(T)
        assert idx == -1 == oracle_index(T)
        assert spl.materialized
        # cokernel representative: e_0 spans F / range exactly
        assert len(spl.cokernel_basis) == 1

    def test_boundary_root_rejected(self):
        with pytest.raises(NotScFredholmError):
            fredholm_index(I - R)  # root at z = 1, not Fredholm on level 0

    def test_level_jump_rejected(self):
        # root at z = 2: Fredholm on level 0 but winding jumps at level 1
        with pytest.raises(NotScFredholmError):
            fredholm_index(I - R.scale(Fraction(1, 2)))

    def test_compact_rejected(self):
        D = ScOperator.diagonal(E, DiagRule.geometric(1, Fraction(1, 2)))
        with pytest.raises(NotScFredholmError):
            fredholm_index(D)

    def test_oscillating_diagonal_undecidable(self):
        D = ScOperator.diagonal(E, DiagRule.geometric(1, -1))
        with pytest.raises(IndexUndecidableError):
            fredholm_index(D)

    def test_perturbed_shift_symbol_only(self):
        # L + (1/8) diag(e^-k): the kernel vector has infinite support, so the
        # splitting cannot be materialized, but the index is exactly 1
        T = L + ScOperator.diagonal(
            E, DiagRule.geometric(0.125, math.exp(-1)))
        idx, spl = fredholm_index(T)
        assert idx == 1 == oracle_index(T)
        assert not spl.materialized

    def test_finite_rank_perturbation_materializes(self):
        T = L + ScOperator.rank_one(E, E, Vector.basis(5),
                                    Vector.basis(0)).scale(Fraction(1, 8))
        idx, spl = fredholm_index(T)
        assert idx == 1 == oracle_index(T)
        assert spl.materialized and len(spl.kernel_basis) == 1

    def test_two_sided_band(self):
        T = L + R.scale(2)  # symbol z^-1 + 2z = z^-1 (1 + 2 z^2), roots inside
        idx, _ = fredholm_index(T)
        assert idx == -1 == oracle_index(T)


class TestComposeIndex:
    def test_double_left_shift(self):
        assert compose_index(L, L) == 2

    def test_left_after_right_is_identity(self):
        composed = L.compose(R)
        for k in range(6):
            assert composed.apply(Vector.basis(k)) == Vector.basis(k)
        assert compose_index(L, R) == 0

    def test_identity_neutral(self):
        for T in (L, R, I - R.scale(2)):
            assert compose_index(T, I) == analyze(T).index

    @given(st.sampled_from([(-2, 2), (-1, 2), (1, 3), (2, 4), (-2, 4)]))
    @settings(max_examples=10, deadline=None)
    def test_additivity_on_shift_mix(self, spec):
        a, c = spec
        A = ScOperator.shift_left(E, -a) if a < 0 else ScOperator.shift_right(E, a) if a else I
        B = I - R.scale(c)
        assert compose_index(A, B) == analyze(A).index + analyze(B).index


class TestSplitting:
    def test_rank_one_projection(self):
        P = split_off_finite_dim(E, [Vector.basis(0)])
        for k in range(5):
            x = Vector.basis(k)
            expected = Vector.basis(0) if k == 0 else Vector.zero()
            assert P.apply(x) == expected

    @given(st.lists(st.tuples(st.integers(0, 5), st.fractions(min_value=-3, max_value=3)),
                    min_size=1, max_size=4))
    @settings(max_examples=80, deadline=None)
    def test_projection_idempotent(self, raw):
        v = Vector.make(raw)
        if v.is_zero():
            return
        P = split_off_finite_dim(E, [v])
        for k in range(7):
            x = Vector.basis(k)
            assert P.apply(P.apply(x)) == P.apply(x)

    def test_two_dim_projection(self):
        basis = [Vector.make({0: 1, 1: 1}), Vector.basis(1)]
        P = split_off_finite_dim(E, basis)
        for b in basis:
            assert P.apply(b) == b
        comp = Vector.basis(0) - P.apply(Vector.basis(0))
        assert P.apply(comp).is_zero()

    def test_dependent_basis_rejected(self):
        from scgeom.operators import DependentBasisError
        with pytest.raises(DependentBasisError):
            split_off_finite_dim(E, [Vector.basis(0), Vector.basis(0).scale(2)])

    def test_complement_section_property(self):
        # Y_m = E_m intersect Y_0: (Id - P) x has zero pairing with the duals
        P = split_off_finite_dim(E, [Vector.make({0: 1, 2: 1})])
        for k in range(6):
            y = Vector.basis(k) - P.apply(Vector.basis(k))
            assert P.apply(y).is_zero()


class TestRegularity:
    def test_identity_trivial(self):
        lift = regularity_lift(I, Vector.make({1: 3, 4: 1}), 3)
        assert lift.reassembled_exactly
        assert all(g == 0 for g in lift.cokernel_coords)

    def test_left_shift_decomposition(self):
        e = Vector.make({0: 5, 2: 1, 6: -2})
        lift = regularity_lift(L, e, 2)
        assert lift.reassembled_exactly
        # kernel part lies in span{e_0}
        assert lift.kernel_part.support in ((), (0,))

    def test_corpus_cokernel_component_vanishes(self):
        ops = [L, L.compose(L), I - R.scale(2),
               L + ScOperator.rank_one(E, E, Vector.basis(3), Vector.basis(1)).scale(Fraction(1, 8))]
        for T in ops:
            for seed_vec in ({0: 1, 1: 2}, {2: 3, 5: -1}, {0: 1, 3: 1, 7: 2}):
                lift = regularity_lift(T, Vector.make(seed_vec), 3)
                assert lift.reassembled_exactly
                assert all(g == 0 for g in lift.cokernel_coords)


def scplus_corpus():
    quarter = Fraction(1, 4)
    items = [
        ScOperator.diagonal(E, DiagRule.geometric(Fraction(1, 8), quarter)),
        ScOperator.rank_one(E, E, Vector.basis(0), Vector.basis(0)).scale(Fraction(1, 8)),
        ScOperator.rank_one(E, E, Vector.basis(2), Vector.make({0: 1, 1: -1})),
        ScOperator.shift_right(E).compose(
            ScOperator.diagonal(E, DiagRule.geometric(Fraction(1, 2), quarter))),
        ScOperator.rank_one(E, E, Vector.make({1: 1, 4: -2}), Vector.basis(3)),
    ]
    return items


class TestScPlusStability:
    def test_certificates(self):
        for op in scplus_corpus():
            ScPlusOperator(op, delta=1.0)  # must not raise

    def test_identity_not_scplus(self):
        with pytest.raises(ValueError):
            ScPlusOperator(I, delta=1.0)

    def test_index_stable_over_corpus(self):
        bases = [L, R, L.compose(L), I - R.scale(2)]
        pairs = 0
        for T in bases:
            for Rp in scplus_corpus():
                rep = perturb_scplus_index(T, ScPlusOperator(Rp, delta=1.0))
                assert rep.index_perturbed == rep.index_base
                if rep.materialized:
                    assert rep.kernel_level_spans_equal
                pairs += 1
        assert pairs >= 10

    def test_zero_perturbation(self):
        rep = perturb_scplus_index(L, ScPlusOperator(ScOperator.zero(E), delta=1.0))
        assert rep.index_perturbed == rep.index_base == 1

    def test_neumann_style_rank_one(self):
        Rp = ScOperator.rank_one(E, E, Vector.basis(1), Vector.basis(1)).scale(Fraction(1, 8))
        rep = perturb_scplus_index(I, ScPlusOperator(Rp, delta=1.0))
        assert rep.index_base == rep.index_perturbed == 0

    def test_singular_values_dominated(self):
        # factorization through the level gain: sigma_k(R at level m) <= e^-k * C
        Rp = ScOperator.diagonal(E, DiagRule.geometric(Fraction(1, 8), Fraction(1, 4)))
        n = 16
        weights0 = np.array([math.exp(0 * k) for k in range(n)])
        mat = np.zeros((n, n))
        for k in range(n):
            out = Rp.apply(Vector.basis(k))
            for j, v in out.entries:
                if j < n:
                    mat[j, k] = float(v)
        sigma = np.linalg.svd(mat, compute_uv=False)
        bound = Rp.level_bound(1)
        for k, s in enumerate(sorted(sigma, reverse=True)):
            assert s <= math.exp(-k) * bound + 1e-12


class TestDenseComplement:
    def test_range_of_right_shift(self):
        C = dense_complement(E, ("range", R), 1)
        assert C == [Vector.basis(0)]

    def test_full_range_empty_complement(self):
        assert dense_complement(E, ("range", I), 0) == []

    def test_coordinate_quotient(self):
        C = dense_complement(E, ("coords", [0, 1]), 2)
        assert C == [Vector.basis(0), Vector.basis(1)]

    def test_wrong_codimension(self):
        from scgeom.operators import CodimensionError
        with pytest.raises(CodimensionError):
            dense_complement(E, ("range", R), 3)


class TestFiniteSpaces:
    def test_matrix_operator(self):
        F3, F2 = FiniteSpace(3), FiniteSpace(2)
        T = ScOperator.from_matrix([[1, 0, 1], [0, 1, 0]], F3, F2)
        a = analyze(T)
        assert a.index == 1 and a.materialized
        assert len(a.kernel_basis) == 1

    def test_rank_nullity(self):
        F = FiniteSpace(4)
        T = ScOperator.from_matrix([[1, 2, 0, 0], [0, 0, 3, 0],
                                    [0, 0, 0, 0], [1, 2, 3, 0]], F, F)
        a = analyze(T)
        assert len(a.kernel_basis) - len(a.cokernel_basis) == 0


class TestBoundsAndExactness:
    def test_level_bound_certificate(self):
        T = R + ScOperator.diagonal(E, DiagRule.geometric(1, Fraction(1, 2)))
        for m in range(4):
            bound = T.level_bound(m)
            for k in range(6):
                x = Vector.basis(k)
                ratio = E.level_norm(T.apply(x), m) / E.level_norm(x, m)
                assert ratio <= bound * (1 + 1e-12)

    def test_unbounded_diagonal_rejected(self):
        with pytest.raises(ValueError):
            ScOperator.diagonal(E, DiagRule.geometric(1, 2))

    def test_exactness_recorded(self):
        assert analyze(L).regime == "exact"
        T = L + ScOperator.diagonal(E, DiagRule.geometric(0.125, math.exp(-1)))
        assert analyze(T).regime == "float"
