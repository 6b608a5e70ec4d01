"""Degeneracy index, chart invariance, faces, fred-submersions."""

import math
from fractions import Fraction

import numpy as np
import pytest

from scgeom.modelmaps import (conjugating_diffeo, curved_codomain_chart,
                              permutation_transition, projection_normal_form,
                              quadrant_chart, scaling_transition,
                              shear_transition, swap_shift_transition,
                              warp_transition)
from scgeom.polyfold import (ChartComplex, FaceReport, PointMap,
                             SampledComplex, degeneracy_index,
                             degeneracy_invariance, faces,
                             fred_submersion_check, fred_submersion_compose,
                             lower_semicontinuity, preimage_charts,
                             product_degeneracy, strong_submanifold_predicate,
                             x_point, y_point)
from scgeom.spaces import FiniteSpace, PairVector, SequenceSpace, Vector
from scgeom.splicing import box_domain, sample_core_point


def q_point(*coords) -> PairVector:
    return PairVector(Vector.make({i: c for i, c in enumerate(coords)}),
                      Vector.zero())


class TestDegeneracyIndex:
    def setup_method(self):
        self.chart = quadrant_chart("c3", corner_dim=3)

    def test_two_vanishing_coordinates(self):
        assert degeneracy_index(self.chart, q_point(0, Fraction(16, 5), 0)) == 2

    def test_interior_point(self):
        assert degeneracy_index(self.chart, q_point(1, 2, 3)) == 0

    def test_no_corner_directions(self):
        chart = quadrant_chart("flat", corner_dim=0, extra_dim=2)
        assert degeneracy_index(chart, q_point(-1, 5)) == 0

    def test_outside_domain_rejected(self):
        with pytest.raises(ValueError):
            degeneracy_index(self.chart, q_point(-1, 1, 1))


def certify_transition(tr, chart, rng, n=3, faces_idx=()):
    spl = chart.model.splicing
    pts = [sample_core_point(spl, rng) for _ in range(n)]
    tr.fwd.certify(pts, seed=2)
    image_pts = [tr.fwd.eval_pair(p) for p in pts]
    tr.inv.certify(image_pts, seed=2)
    return tr


class TestDegeneracyInvariance:
    def make_complex(self):
        rng = np.random.default_rng(3)
        a2 = quadrant_chart("a2", 2, hi=1.0)
        b2 = quadrant_chart("b2", 2, hi=8.0)
        a11 = quadrant_chart("a11", 1, extra_dim=1, hi=1.0)
        b11 = quadrant_chart("b11", 1, extra_dim=1, hi=8.0)
        a21 = quadrant_chart("a21", 2, extra_dim=1, hi=1.0)
        b21 = quadrant_chart("b21", 2, extra_dim=1, hi=8.0)
        trs = [
            certify_transition(permutation_transition(a2, b2, [1, 0]), a2, rng),
            certify_transition(scaling_transition(a2, b2, [Fraction(2), Fraction(1, 3)]), a2, rng),
            certify_transition(warp_transition(a11, b11), a11, rng),
            certify_transition(shear_transition(a2, b2), a2, rng),
            certify_transition(swap_shift_transition(a21, b21), a21, rng),
        ]
        # distinct keys: one transition per (src, dst) pair
        charts = [a2, b2, a11, b11, a21, b21]
        complexes = []
        for i, tr in enumerate(trs):
            complexes.append((tr, self_points(tr, rng)))
        return charts, complexes

    def test_invariance_across_five_transitions(self):
        charts, complexes = self.make_complex()
        cc_charts = {c.name: c for c in charts}
        total = 0
        for tr, pts in complexes:
            cc = ChartComplex(list(cc_charts.values()), [tr])
            rep = degeneracy_invariance(cc, [(tr.src, tr.dst, p) for p in pts])
            assert rep.passed, f"mismatch in {tr.fwd.name}: {rep.mismatches[:2]}"
            total += rep.samples
        assert total >= 100


def self_points(tr, rng, n=25):
    """Sample points in the source chart: interior, faces, corners."""
    spl_src = None
    chart_param = tr.fwd.domain_model.splicing.param
    pts = []
    corner = chart_param.quadrant.corner_dim
    for i in range(n):
        on_faces = ()
        if corner and i % 3 == 1:
            on_faces = (i % corner,)
        elif corner and i % 3 == 2:
            on_faces = tuple(range(min(2, corner)))
        v = chart_param.sample(rng, on_faces)
        pts.append(PairVector(v, Vector.zero()))
    return pts


class TestSemicontinuityAndProducts:
    def test_interior_neighborhood(self):
        chart = quadrant_chart("c", 2)
        x = q_point(1, 1)
        nbrs = [q_point(1 + dx, 1 + dy) for dx in (-0.25, 0, 0.25)
                for dy in (-0.25, 0, 0.25)]
        rep = lower_semicontinuity(chart, x, nbrs)
        assert rep.passed and rep.center_d == 0

    def test_face_point(self):
        chart = quadrant_chart("c", 2)
        x = q_point(0, 1)
        nbrs = [q_point(0, 1.2), q_point(0.3, 0.9), q_point(0, 0.5)]
        rep = lower_semicontinuity(chart, x, nbrs)
        assert rep.passed
        assert set(rep.neighbor_ds) <= {0, 1}

    def test_corner_point(self):
        chart = quadrant_chart("c", 2)
        rep = lower_semicontinuity(chart, q_point(0, 0),
                                   [q_point(0, 0), q_point(0, 1), q_point(1, 0),
                                    q_point(0.5, 0.5)])
        assert rep.passed and rep.center_d == 2

    def test_product_additivity(self):
        cx = quadrant_chart("x", 2)
        cy = quadrant_chart("y", 2)
        pairs = [(q_point(0, 1), q_point(0, 2)),
                 (q_point(1, 1), q_point(0, 0)),
                 (q_point(0, 0), q_point(0, 0))]
        rep = product_degeneracy(cx, cy, pairs)
        assert rep["passed"]
        assert [r["d_product"] for r in rep["pairs"]] == [2, 2, 4]


def quadrant_grid_complex(name="grid") -> SampledComplex:
    """3x3 grid on [0, 2]^2 with axis-aligned adjacency."""
    chart = quadrant_chart(name, 2)
    coords = [0, 1, 2]
    pts, index = [], {}
    for i, x in enumerate(coords):
        for j, y in enumerate(coords):
            index[(i, j)] = len(pts)
            pts.append(q_point(x, y))
    adj = []
    for (i, j), a in index.items():
        for di, dj in ((1, 0), (0, 1)):
            if (i + di, j + dj) in index:
                adj.append((a, index[(i + di, j + dj)]))
    return SampledComplex(chart, pts, adj, name)


class TestFaces:
    def test_quadrant_two_faces(self):
        rep = faces(quadrant_grid_complex())
        assert len(rep.faces) == 2
        assert rep.face_structured
        corner = 0  # point (0, 0)
        counts = {r["index"]: r["n_faces"] for r in rep.per_point}
        assert counts[corner] == 2

    def test_half_line_single_face(self):
        chart = quadrant_chart("half", 1, extra_dim=1)
        pts = [PairVector(Vector.make({0: x, 1: y}), Vector.zero())
               for x in (0, 1, 2) for y in (0, 1)]
        adj = [(i, j) for i in range(len(pts)) for j in range(len(pts)) if i < j]
        rep = faces(SampledComplex(chart, pts, adj, "half"))
        assert len(rep.faces) == 1
        assert rep.face_structured

    def test_glued_complex_flagged(self):
        # extra adjacency identifying the two edges of the quadrant: the face
        # closes onto itself, the corner then lies in one face instead of two
        base = quadrant_grid_complex("glued")
        pts = base.points
        idx_x_edge = next(i for i, p in enumerate(pts)
                          if float(p.left[0]) == 2 and float(p.left[1]) == 0)
        idx_y_edge = next(i for i, p in enumerate(pts)
                          if float(p.left[0]) == 0 and float(p.left[1]) == 2)
        glued = SampledComplex(base.chart, pts,
                               base.adjacency + [(idx_x_edge, idx_y_edge)],
                               "glued")
        rep = faces(glued)
        assert len(rep.faces) == 1
        assert not rep.face_structured


PARAM = box_domain(corner_dim=1, extra_dim=0, hi=2.0)
E = SequenceSpace(delta=1.0)


def x_samples(rng, n, n_fin=2):
    out = []
    for _ in range(n):
        v = PARAM.sample(rng)
        e = Vector.make({int(k): Fraction(int(rng.integers(-4, 5)), 4)
                         for k in rng.choice(5, 2, replace=False)})
        e2 = Vector.make({k: Fraction(int(rng.integers(-4, 5)), 4)
                          for k in range(n_fin)})
        out.append(x_point(v, e, e2))
    return out


class TestFredSubmersion:
    def setup_method(self):
        self.rng = np.random.default_rng(11)
        self.f, self.x_norm, self.y_norm = projection_normal_form(PARAM, E, 2)

    def test_model_projection_identity_charts(self):
        w = fred_submersion_check(self.f, PointMap.identity(), PointMap.identity(),
                                  2, x_samples(self.rng, 20), self.y_norm)
        assert w.n == 2 and w.max_residual == 0.0

    def test_conjugated_projection(self):
        conj = conjugating_diffeo(2)
        def f_conj(p):
            return self.f(conj.inv(p))
        # the domain chart phi = conj.inv undoes the conjugation
        w = fred_submersion_check(f_conj, PointMap(conj.inv, conj.fwd, "conj"),
                                  PointMap.identity(), 2,
                                  x_samples(self.rng, 20), self.y_norm)
        assert w.max_residual <= 1e-12

    def test_rank_deficient_fails(self):
        def bad(p):  # loses the fiber content: not conjugate to the projection
            return PairVector(p.left, Vector.zero())
        with pytest.raises(ValueError):
            fred_submersion_check(bad, PointMap.identity(), PointMap.identity(),
                                  2, x_samples(self.rng, 6), self.y_norm)

    def test_composition_witness(self):
        # f: X -> Y drops a 2-dim factor; g: Y -> Z drops the sequence fiber tail
        fin = FiniteSpace(1)
        f, _, y_norm_f = projection_normal_form(PARAM, E, 2)
        wf = fred_submersion_check(f, PointMap.identity(), PointMap.identity(),
                                   2, x_samples(self.rng, 10), y_norm_f)

        g, _, z_norm = projection_normal_form(PARAM, FiniteSpace(3), 1)
        g_samples = []
        for _ in range(10):
            v = PARAM.sample(self.rng)
            h = Vector.make({k: Fraction(int(self.rng.integers(-4, 5)), 4)
                             for k in range(3)})
            hp = Vector.make({0: Fraction(int(self.rng.integers(-4, 5)), 4)})
            g_samples.append(x_point(v, h, hp))
        wg = fred_submersion_check(g, PointMap.identity(), PointMap.identity(),
                                   1, g_samples, z_norm)

        # composite samples (w, (h, (h', e'))), e' the 2-dim factor from f
        comp_samples = []
        for _ in range(16):
            v = PARAM.sample(self.rng)
            h = Vector.make({k: Fraction(int(self.rng.integers(-4, 5)), 4)
                             for k in range(3)})
            hp = Vector.make({0: Fraction(1, 2)})
            ep = Vector.make({0: 1, 1: Fraction(-1, 2)})
            comp_samples.append(PairVector(v, PairVector(h, PairVector(hp, ep))))
        w = fred_submersion_compose(wf, wg, comp_samples)
        assert w.n == 3
        assert w.max_residual == 0.0

    def test_preimage_manifold_charts(self):
        conj = conjugating_diffeo(2)
        def f_conj(p):
            return self.f(conj.inv(p))
        w1 = fred_submersion_check(self.f, PointMap.identity(), PointMap.identity(),
                                   2, x_samples(self.rng, 8), self.y_norm)
        w2 = fred_submersion_check(f_conj, PointMap(conj.inv, conj.fwd, "conj"),
                                   PointMap.identity(), 2,
                                   x_samples(self.rng, 8), self.y_norm)
        y = y_point(Vector.make({0: Fraction(1, 2)}), Vector.make({1: 1}))
        fiber_samples = [Vector.make({0: a, 1: b})
                         for a in (Fraction(-1, 2), 0, Fraction(1, 2))
                         for b in (Fraction(-1, 2), Fraction(1, 2))]
        atlas = preimage_charts([w1, w2], y, fiber_samples)
        assert atlas.passed
        assert atlas.n_locally_constant
        assert atlas.transition_smoothness <= 1e-6

    def test_strong_submanifold_predicate(self):
        w = fred_submersion_check(self.f, PointMap.identity(), PointMap.identity(),
                                  2, x_samples(self.rng, 6), self.y_norm)
        m = x_point(Vector.make({0: 1}), Vector.make({0: 1}), Vector.make({0: 0}))
        tests = x_samples(self.rng, 10) + [
            x_point(Vector.make({0: 1}), Vector.make({0: 1}), Vector.make({1: 5}))]
        rep = strong_submanifold_predicate(w, m, tests)
        assert rep["passed"]
