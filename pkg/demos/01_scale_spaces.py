#!/usr/bin/env python3
"""Scale spaces: graded norms, compact embeddings, partial quadrants.

The sequence model weighs the k-th basis vector by e^(delta*m*k) on level m.
Everything here is exact: vectors have finite support, so they live on every
level and the smooth core is represented faithfully.
"""

import math

from scgeom import (FiniteSpace, PairVector, SequenceSpace, Vector,
                    direct_sum, embedding_spectrum, level_norm, quadrant,
                    quadrant_contains)

E = SequenceSpace(delta=1.0)

print("== graded norms ==")
x = Vector.make({0: 1, 2: 1})
for m in range(4):
    print(f"  ||e_0 + e_2||_{m} = {level_norm(E, x, m):.6f}")
print("  (monotone in the level: each level norm dominates the previous)")

print("\n== the embedding level m+1 -> level m is compact ==")
sigma = embedding_spectrum(E, 0, 8)
print("  singular values:", ", ".join(f"{s:.5f}" for s in sigma))
print("  against e^-k:   ", ", ".join(f"{math.exp(-k):.5f}" for k in range(8)))
for eps in (0.1, 1e-3, 1e-6):
    print(f"  #{{sigma_k > {eps:g}}} = {E.singular_count_above(eps)}"
          f"  (formula ceil(ln(1/eps)) = {math.ceil(math.log(1/eps))})")

print("\n== finite dimensions force the constant scale ==")
F = FiniteSpace(3)
y = Vector.make({0: 2, 2: -1})
print("  norms across levels:", {m: level_norm(F, y, m) for m in range(3)})

print("\n== partial quadrants and active faces ==")
q = quadrant(2, FiniteSpace(2))
for coords in ({0: 0, 1: 1, 2: 5}, {0: 1, 1: 1}, {0: -1, 1: 1}):
    w = Vector.make(coords)
    inside, active = quadrant_contains(q, w)
    print(f"  w = {dict(coords)}: inside={inside}, active faces={active}")

print("\n== direct sums carry the levelwise product norm ==")
S = direct_sum(E, E)
p = PairVector(Vector.basis(1), Vector.basis(1))
for m in range(3):
    print(f"  ||(e_1, e_1)||_{m} = {S.level_norm(p, m):.6f}"
          f"  (= sqrt(2) e^{m} = {math.sqrt(2)*math.exp(m):.6f})")
