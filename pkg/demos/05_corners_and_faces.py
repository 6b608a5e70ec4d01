#!/usr/bin/env python3
"""Corner recognition: the degeneracy index, its invariance, and faces."""

from fractions import Fraction

import numpy as np

from scgeom.modelmaps import (quadrant_chart, shear_transition,
                              warp_transition)
from scgeom.polyfold import (ChartComplex, SampledComplex, degeneracy_index,
                             degeneracy_invariance, faces,
                             lower_semicontinuity, product_degeneracy)
from scgeom.spaces import PairVector, Vector
from scgeom.splicing import sample_core_point


def pt(*coords):
    return PairVector(Vector.make({i: c for i, c in enumerate(coords)}),
                      Vector.zero())


chart = quadrant_chart("c", corner_dim=2, hi=8.0)
print("== the degeneracy index counts vanishing quadrant coordinates ==")
for p in (pt(0, Fraction(16, 5)), pt(1, 2), pt(0, 0)):
    print(f"  d{tuple(float(p.left[j]) for j in range(2))} = "
          f"{degeneracy_index(chart, p)}")

print("\n== chart invariance across a nonlinear transition ==")
rng = np.random.default_rng(4)
a = quadrant_chart("a", 2, hi=1.0)
b = quadrant_chart("b", 2, hi=8.0)
tr = shear_transition(a, b)  # (r1, r2) -> (r1, r2 (1 + r1))
pts = [sample_core_point(a.model.splicing, rng) for _ in range(3)]
tr.fwd.certify(pts, seed=4)
tr.inv.certify([tr.fwd.eval_pair(p) for p in pts], seed=4)
cc = ChartComplex([a, b], [tr])
samples = [("a", "b", pt(0, Fraction(1, 2))), ("a", "b", pt(Fraction(1, 2), 0)),
           ("a", "b", pt(0, 0)), ("a", "b", pt(Fraction(1, 3), Fraction(1, 4)))]
rep = degeneracy_invariance(cc, samples)
print(f"  {rep.samples} overlap samples, mismatches: {len(rep.mismatches)}")

print("\n== lower semicontinuity around a corner ==")
rep = lower_semicontinuity(chart, pt(0, 0),
                           [pt(0, 0), pt(0, 1), pt(1, 0), pt(1, 1)])
print(f"  d(center) = {rep.center_d}, neighbor d's = {rep.neighbor_ds}: "
      f"passed = {rep.passed}")

print("\n== faces of the quadrant model ==")
coords = [0, 1, 2]
pts2, index = [], {}
for i, x in enumerate(coords):
    for j, y in enumerate(coords):
        index[(i, j)] = len(pts2)
        pts2.append(pt(x, y))
adj = [(a_, index[(i + di, j + dj)]) for (i, j), a_ in index.items()
       for di, dj in ((1, 0), (0, 1)) if (i + di, j + dj) in index]
grid = SampledComplex(chart, pts2, adj, "grid")
rep = faces(grid)
print(f"  faces: {len(rep.faces)}, face structured: {rep.face_structured}")
print(f"  corner point lies in "
      f"{next(r['n_faces'] for r in rep.per_point if r['d'] == 2)} faces")

print("\n== gluing the two edges produces the counterexample ==")
ix = next(i for i, p in enumerate(pts2) if float(p.left[0]) == 2 and float(p.left[1]) == 0)
iy = next(i for i, p in enumerate(pts2) if float(p.left[0]) == 0 and float(p.left[1]) == 2)
glued = SampledComplex(chart, pts2, adj + [(ix, iy)], "glued")
rep = faces(glued)
print(f"  faces: {len(rep.faces)}, face structured: {rep.face_structured} "
      f"(flagged, as required)")

print("\n== products add degeneracies ==")
other = quadrant_chart("y", 2, hi=8.0)
rep = product_degeneracy(chart, other, [(pt(0, 1), pt(0, 2)), (pt(0, 0), pt(0, 0))])
print("  d values on the product:", [r["d_product"] for r in rep["pairs"]])
