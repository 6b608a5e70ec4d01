#!/usr/bin/env python3
"""Fred-submersions: normal forms, composition, preimage manifolds."""

from fractions import Fraction

import numpy as np

from scgeom.modelmaps import conjugating_diffeo, projection_normal_form
from scgeom.polyfold import (PointMap, fred_submersion_check,
                             fred_submersion_compose, preimage_charts,
                             x_point, y_point)
from scgeom.spaces import FiniteSpace, PairVector, SequenceSpace, Vector
from scgeom.splicing import box_domain

E = SequenceSpace(delta=1.0)
PARAM = box_domain(1, 0, hi=2.0)
rng = np.random.default_rng(2)

f, x_norm, y_norm = projection_normal_form(PARAM, E, 2)


def samples(n):
    out = []
    for _ in range(n):
        v = PARAM.sample(rng)
        e = Vector.make({int(k): Fraction(int(rng.integers(-4, 5)), 4)
                         for k in rng.choice(5, 2, replace=False)})
        e2 = Vector.make({k: Fraction(int(rng.integers(-4, 5)), 4) for k in range(2)})
        out.append(x_point(v, e, e2))
    return out


print("== the model projection (v, e', e'') -> (v, e') ==")
w1 = fred_submersion_check(f, PointMap.identity(), PointMap.identity(), 2,
                           samples(12), y_norm)
print(f"  witness accepted: n = {w1.n}, residual {w1.max_residual:.1e}")

print("\n== a conjugated projection, recognized through its charts ==")
conj = conjugating_diffeo(2)
w2 = fred_submersion_check(lambda p: f(conj.inv(p)),
                           PointMap(conj.inv, conj.fwd, "conj"),
                           PointMap.identity(), 2, samples(12), y_norm)
print(f"  witness accepted: residual {w2.max_residual:.1e}")

print("\n== composition of two normal forms ==")
g, _, z_norm = projection_normal_form(PARAM, FiniteSpace(3), 1)
g_samples = [x_point(PARAM.sample(rng),
                     Vector.make({k: Fraction(1, 2) for k in range(3)}),
                     Vector.make({0: Fraction(1, 4)})) for _ in range(8)]
wg = fred_submersion_check(g, PointMap.identity(), PointMap.identity(), 1,
                           g_samples, z_norm)
comp_samples = [PairVector(PARAM.sample(rng),
                           PairVector(Vector.make({0: 1, 2: Fraction(-1, 2)}),
                                      PairVector(Vector.make({0: Fraction(1, 2)}),
                                                 Vector.make({0: 1, 1: 1}))))
                for _ in range(10)]
wc = fred_submersion_compose(w1, wg, comp_samples)
print(f"  composite drops an R^{wc.n} factor; conjugated output is (w, h) "
      f"on all samples (residual {wc.max_residual:.1e})")

print("\n== preimages of smooth points are finite-dimensional manifolds ==")
y = y_point(Vector.make({0: Fraction(1, 2)}), Vector.make({1: 1}))
fiber_samples = [Vector.make({0: a, 1: b})
                 for a in (Fraction(-1, 2), 0, Fraction(1, 2))
                 for b in (Fraction(-1, 2), Fraction(1, 2))]
atlas = preimage_charts([w1, w2], y, fiber_samples)
print(f"  charts: {len(atlas.charts)} open sets in R^2; transition "
      f"second-difference consistency {atlas.transition_smoothness:.2e}; "
      f"dimension locally constant: {atlas.n_locally_constant}")
