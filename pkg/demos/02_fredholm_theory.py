#!/usr/bin/env python3
"""The exact linear Fredholm theory on the structured operator algebra.

Shift-banded + diagonal + finite-rank operators admit an exact Fredholm
certificate: the limit symbol of the banded part must have all roots
strictly inside the unit disk (decided by a rational Schur-Cohn recursion),
and then the index is minus the top shift.  Kernel and cokernel bases are
materialized from finite windows whenever they are provably complete.
"""

from fractions import Fraction

from scgeom import (DiagRule, NotScFredholmError, ScOperator, ScPlusOperator,
                    SequenceSpace, Vector, analyze, compose_index,
                    fredholm_index, perturb_scplus_index, regularity_lift)

E = SequenceSpace(delta=1.0)
L = ScOperator.shift_left(E)
R = ScOperator.shift_right(E)
I = ScOperator.identity(E)

print("== shifts ==")
for name, op in (("L", L), ("R", R), ("L o L", L.compose(L))):
    idx, split = fredholm_index(op)
    print(f"  index({name}) = {idx:+d}   kernel dim {len(split.kernel_basis)}, "
          f"cokernel dim {len(split.cokernel_basis)}")

print("\n== index additivity ==")
print("  i(L o L) =", compose_index(L, L), " = i(L) + i(L)")
print("  i(L o R) =", compose_index(L, R), " (L o R is the identity)")

print("\n== operators that are NOT Fredholm across the scale ==")
for name, op in (("I - R", I - R), ("I - R/2", I - R.scale(Fraction(1, 2)))):
    try:
        fredholm_index(op)
    except NotScFredholmError as exc:
        print(f"  {name}: rejected ({str(exc)[:60]}...)")

print("\n== stability under one-level-gain perturbations ==")
pert = ScPlusOperator(ScOperator.diagonal(E, DiagRule.geometric(Fraction(1, 8),
                                                                Fraction(1, 4))))
rep = perturb_scplus_index(L, pert)
print(f"  i(L) = {rep.index_base}, i(L + R) = {rep.index_perturbed}, "
      f"kernels level-independent: {rep.kernel_level_spans_equal}")

print("\n== the kernel can escape finite support; the index still stands ==")
import math
T = L + ScOperator.diagonal(E, DiagRule.geometric(0.125, math.exp(-1)))
idx, split = fredholm_index(T)
print(f"  index(L + (1/8) diag(e^-k)) = {idx}; materialized bases: "
      f"{split.materialized} (the kernel vector has infinite support)")

print("\n== the regularizing property ==")
e = Vector.make({0: 5, 2: 1, 6: -2})
lift = regularity_lift(L, e, 3)
print(f"  e = k + x0 reassembled exactly: {lift.reassembled_exactly}; "
      f"cokernel component: {lift.cokernel_coords} (must be all zero)")
