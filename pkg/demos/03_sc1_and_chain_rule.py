#!/usr/bin/env python3
"""Difference-quotient verification of derivatives and the chain rule.

sc1_verify measures q(r) = ||f(x+ru) - f(x) - Df(x)(ru)||_0 / ||ru||_1 over
halving radii: it must either converge below the floor or decay at first
order.  A wrong derivative leaves q bounded below, which is exactly how the
negative control fails.
"""

from fractions import Fraction

from scgeom.calculus import (FunctionMap, TangentPoint, certify_sc1,
                             chain_rule_verify, coordinate_square_map,
                             poly_perturbation_map, sc1_verify, tangent_map)
from scgeom.spaces import SequenceSpace, Vector

E = SequenceSpace(delta=1.0)

print("== the quadratic example f(x) = x + x_0^2 e_1 ==")
f = coordinate_square_map(E)
x = Vector.basis(0).at_level(1)
rep = sc1_verify(f, x)
e0 = next(d for d in rep.directions if d.label == "e0")
print("  q(r) along e_0:", ", ".join(f"{q:.2e}" for q in e0.residuals[:5]), "...")
print(f"  route: {e0.route}, passed: {rep.passed}")

print("\n== a wrong derivative fails with q bounded below ==")
wrong = FunctionMap(f.domain, f.codomain, f.eval, lambda p, h: h)
rep_wrong = sc1_verify(wrong, x)
w0 = next(d for d in rep_wrong.directions if d.label == "e0")
print("  q(r):", ", ".join(f"{q:.2e}" for q in w0.residuals[:5]), "...")
print(f"  route: {w0.route}, passed: {rep_wrong.passed}")

print("\n== tangent maps ==")
certify_sc1(f, [x])
out = tangent_map(f, TangentPoint(x, Vector.basis(0)))
print(f"  Tf(e_0, e_0) = ({out.base.to_dict()}, {out.direction.to_dict()})")
print("  hand value:    ({0: 1, 1: 1}, {0: 1, 1: 2})")

print("\n== chain rule, exact in rational arithmetic ==")
g = poly_perturbation_map(E, [(Fraction(1, 3), 1, 3, 2)])
certify_sc1(g, [x])
points = [TangentPoint(Vector.make({0: Fraction(1, 2), 1: Fraction(1, 3)}).at_level(1),
                       Vector.make({0: 1, 1: Fraction(1, 2)}))]
rep = chain_rule_verify(f, g, points)
print(f"  route: {rep.composite_route} (symbolic expansion, independent of "
      f"the product formula)")
print(f"  max residual of T(g o f) - Tg o Tf: {rep.max_residual} "
      f"(exact mode: {rep.exact})")
