"""Difference-quotient verification of level-respecting smooth maps.

Derivatives are supplied symbolically by the map constructors; verification
is evidence at sampled points and radii, never a proof, and the reports say
so.  The residual

    q(r) = ||f(x + r u) - f(x) - Df(x)(r u)||_0 / ||r u||_1

must either sit below an absolute floor or decay by a fixed factor per
halving of r over the last four radii.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, Optional, Sequence

import numpy as np

from .defaults import (N_RANDOM_DIRECTIONS, RADII, SC1_SLOPE_FACTOR, TOL_CHAIN,
                       TOL_SC1)
from .operators import RankOneTerm, ScOperator
from .spaces import (DirectSum, FiniteSpace, PairVector, PartialQuadrant,
                     Point, ScaleSpace, SequenceSpace, Vector)


class MapCertificationError(ValueError):
    """A tangent construction was requested for an unverified map."""


class DomainExitError(ValueError):
    pass


# ---------------------------------------------------------------------------
# domains
# ---------------------------------------------------------------------------

@dataclass
class OpenSet:
    """Open subset descriptor: predicate plus an explicit radius witness."""

    space: ScaleSpace
    predicate: Callable[[Point], bool] = lambda p: True
    radius_at: Callable[[Point], float] = lambda p: math.inf
    quadrant: Optional[PartialQuadrant] = None
    min_level: int = 0
    description: str = "whole space"

    def contains(self, p: Point) -> bool:
        from .spaces import SpaceMismatchError
        if self.quadrant is not None:
            w = p.left if isinstance(p, PairVector) else p
            try:
                inside, _ = self.quadrant.contains(w)
            except SpaceMismatchError:
                return False
            if not inside:
                return False
        return self.predicate(p)

    def active_faces(self, p: Point) -> list[int]:
        if self.quadrant is None:
            return []
        w = p.left if isinstance(p, PairVector) else p
        _, active = self.quadrant.contains(w)
        return active


def whole_space(space: ScaleSpace) -> OpenSet:
    return OpenSet(space)


def ball(space: ScaleSpace, center: Point, radius: float, level: int = 0) -> OpenSet:
    def pred(p: Point) -> bool:
        return space.level_norm(p - center, level) < radius

    def rad(p: Point) -> float:
        return radius - space.level_norm(p - center, level)

    return OpenSet(space, pred, rad, description=f"ball(r={radius}, level={level})")


# ---------------------------------------------------------------------------
# smooth maps
# ---------------------------------------------------------------------------

class SmoothMap:
    """Evaluator plus symbolic derivative between scale-space open sets."""

    domain: OpenSet
    codomain: ScaleSpace
    sc1_certificate: Optional[dict] = None

    def eval(self, p: Point) -> Point:
        raise NotImplementedError

    def deriv(self, p: Point, h: Point) -> Point:
        raise NotImplementedError

    def derivative_operator(self, p: Point) -> Optional[ScOperator]:
        return None

    @property
    def exact(self) -> bool:
        return False

    def __call__(self, p: Point) -> Point:
        return self.eval(p)


class LinearScMap(SmoothMap):
    """An sc-operator viewed as a map; its own derivative everywhere."""

    def __init__(self, op: ScOperator, domain: OpenSet | None = None):
        self.op = op
        self.domain = domain or whole_space(op.domain)
        self.codomain = op.codomain
        self.sc1_certificate = {"route": "linear", "note": "derivative is the map itself"}

    def eval(self, p: Vector) -> Vector:
        return self.op.apply(p)

    def deriv(self, p: Vector, h: Vector) -> Vector:
        return self.op.apply(h)

    def derivative_operator(self, p: Point) -> ScOperator:
        return self.op

    @property
    def exact(self) -> bool:
        return self.op.exact


@dataclass(frozen=True)
class PolyTerm:
    """coeff * prod_j <lam_j, x> * target, the building block of polynomial maps."""

    coeff: object
    factors: tuple[Vector, ...]
    target: Vector

    def value(self, x: Vector):
        c = self.coeff
        for lam in self.factors:
            c = c * lam.inner(x)
        return c


class PolyMap(SmoothMap):
    """linear part + finite sum of monomials in coordinate functionals.

    Closed under composition (with symbolic expansion), and every derivative
    is a structured operator: linear part + rank-one corrections.
    """

    def __init__(self, domain: OpenSet, codomain: ScaleSpace,
                 linear: ScOperator | None = None,
                 terms: Sequence[PolyTerm] = ()):
        self.domain = domain
        self.codomain = codomain
        self.linear = linear
        self.terms = tuple(terms)

    def eval(self, x: Vector) -> Vector:
        out = self.linear.apply(x) if self.linear else Vector.zero()
        for t in self.terms:
            c = t.value(x)
            if c != 0:
                out = out + t.target.scale(c)
        return Vector(out.entries, x.level if isinstance(x, Vector) else 0)

    def deriv(self, x: Vector, h: Vector) -> Vector:
        out = self.linear.apply(h) if self.linear else Vector.zero()
        for t in self.terms:
            for j, lam in enumerate(t.factors):
                c = t.coeff * lam.inner(h)
                if c == 0:
                    continue
                for jj, other in enumerate(t.factors):
                    if jj != j:
                        c = c * other.inner(x)
                if c != 0:
                    out = out + t.target.scale(c)
        return out

    def derivative_operator(self, x: Vector) -> ScOperator:
        rank_terms = []
        for t in self.terms:
            for j, lam in enumerate(t.factors):
                c = t.coeff
                for jj, other in enumerate(t.factors):
                    if jj != j:
                        c = c * other.inner(x)
                if c != 0:
                    rank_terms.append(RankOneTerm(lam.scale(c), t.target))
        base = self.linear or ScOperator.zero(self.domain.space, self.codomain)
        return ScOperator(base.domain, base.codomain,
                          base.band_terms, base.rank_terms + tuple(rank_terms))

    @property
    def exact(self) -> bool:
        lin_ok = self.linear.exact if self.linear else True
        return lin_ok and all(
            (not isinstance(t.coeff, float)) and t.target.exact
            and all(f.exact for f in t.factors) for t in self.terms)


def identity_map(space: ScaleSpace) -> LinearScMap:
    return LinearScMap(ScOperator.identity(space))


def coordinate_square_map(space: ScaleSpace, coord: int = 0,
                          target: int = 1) -> PolyMap:
    """f(x) = x + (x_coord)^2 e_target, the standing nonlinear example."""
    return PolyMap(whole_space(space), space,
                   linear=ScOperator.identity(space),
                   terms=[PolyTerm(Fraction(1),
                                   (Vector.basis(coord), Vector.basis(coord)),
                                   Vector.basis(target))])


def poly_perturbation_map(space: ScaleSpace, monomials) -> PolyMap:
    """f(x) = x + sum_j c_j (x_coord)^p e_target from (coeff, coord, power, target)."""
    terms = []
    for coeff, coord, power, target in monomials:
        terms.append(PolyTerm(coeff, tuple([Vector.basis(coord)] * power),
                              Vector.basis(target)))
    return PolyMap(whole_space(space), space,
                   linear=ScOperator.identity(space), terms=terms)


class FunctionMap(SmoothMap):
    """Smooth map given by explicit evaluator and derivative callables."""

    def __init__(self, domain: OpenSet, codomain: ScaleSpace,
                 eval_fn: Callable[[Point], Point],
                 deriv_fn: Callable[[Point, Point], Point],
                 exact: bool = False, name: str = ""):
        self.domain = domain
        self.codomain = codomain
        self._eval = eval_fn
        self._deriv = deriv_fn
        self._exact = exact
        self.name = name

    def eval(self, p: Point) -> Point:
        return self._eval(p)

    def deriv(self, p: Point, h: Point) -> Point:
        return self._deriv(p, h)

    @property
    def exact(self) -> bool:
        return self._exact


class CompositeMap(SmoothMap):
    """g after f with the product-formula derivative."""

    def __init__(self, g: SmoothMap, f: SmoothMap):
        self.g = g
        self.f = f
        self.domain = f.domain
        self.codomain = g.codomain

    def eval(self, p: Point) -> Point:
        return self.g.eval(self.f.eval(p))

    def deriv(self, p: Point, h: Point) -> Point:
        return self.g.deriv(self.f.eval(p), self.f.deriv(p, h))

    def derivative_operator(self, p: Point) -> Optional[ScOperator]:
        df = self.f.derivative_operator(p)
        dg = self.g.derivative_operator(self.f.eval(p))
        if df is None or dg is None:
            return None
        return dg.compose(df)

    @property
    def exact(self) -> bool:
        return self.f.exact and self.g.exact


def _scalar_poly_mul(a: list, b: list) -> list:
    out = []
    for ca, fa in a:
        for cb, fb in b:
            c = ca * cb
            if c != 0:
                out.append((c, fa + fb))
    return out


def expand_composite(g: SmoothMap, f: SmoothMap) -> PolyMap:
    """Symbolic expansion of g o f inside the polynomial-map class.

    This is the independent route for the chain-rule check: the expanded
    map's derivative is computed by the polynomial rules, not by composing
    the factors' derivatives.
    """
    def as_poly(m: SmoothMap) -> PolyMap:
        if isinstance(m, PolyMap):
            return m
        if isinstance(m, LinearScMap):
            return PolyMap(m.domain, m.codomain, linear=m.op)
        raise TypeError(f"cannot expand {type(m).__name__}")

    fp, gp = as_poly(f), as_poly(g)
    lin = None
    terms: list[PolyTerm] = []
    if gp.linear is not None:
        if fp.linear is not None:
            lin = gp.linear.compose(fp.linear)
        for t in fp.terms:
            img = gp.linear.apply(t.target)
            if img.entries:
                terms.append(PolyTerm(t.coeff, t.factors, img))
    ft_lin = fp.linear.transpose() if fp.linear is not None else None
    for s in gp.terms:
        # each factor <mu, f(x)> becomes a scalar polynomial in x
        poly = [(s.coeff, ())]
        for mu in s.factors:
            factor_poly = []
            if ft_lin is not None:
                pulled = ft_lin.apply(mu)
                if pulled.entries:
                    factor_poly.append((Fraction(1), (pulled,)))
            for t in fp.terms:
                c = mu.inner(t.target)
                if c != 0:
                    factor_poly.append((c * t.coeff, t.factors))
            poly = _scalar_poly_mul(poly, factor_poly)
        for c, factors in poly:
            terms.append(PolyTerm(c, factors, s.target))
    return PolyMap(fp.domain, gp.codomain, linear=lin, terms=terms)


# ---------------------------------------------------------------------------
# tangent objects
# ---------------------------------------------------------------------------

def point_level(p: Point) -> int:
    if isinstance(p, Vector):
        return p.level
    return min(point_level(p.left), point_level(p.right))


@dataclass(frozen=True)
class TangentPoint:
    """Base point on level >= 1 with a level-0 direction attached."""

    base: Point
    direction: Point

    def __post_init__(self):
        if point_level(self.base) < 1:
            raise ValueError("tangent base points live on level >= 1")


def tangent_map(f: SmoothMap, p: TangentPoint) -> TangentPoint:
    if f.sc1_certificate is None:
        raise MapCertificationError(
            "map has no sc1 certificate; run sc1_verify / certify_sc1 first")
    image = f.eval(p.base)
    if isinstance(image, Vector):
        image = image.at_level(max(getattr(p.base, "level", 1), 1))
    return TangentPoint(image, f.deriv(p.base, p.direction))


# ---------------------------------------------------------------------------
# sc1 verification
# ---------------------------------------------------------------------------

@dataclass
class DirectionResult:
    label: str
    residuals: list[float]
    route: str
    passed: bool


@dataclass
class Sc1Report:
    point: Point
    passed: bool
    directions: list[DirectionResult] = field(default_factory=list)
    skipped: list[str] = field(default_factory=list)
    seed: int = 0
    tol: float = TOL_SC1
    slope_factor: float = SC1_SLOPE_FACTOR
    note: str = "sampled evidence, not a proof"


def _default_directions(space: ScaleSpace, rng: np.random.Generator,
                        n_random: int) -> list[tuple[str, Point]]:
    if isinstance(space, DirectSum):
        left = _default_directions(space.left, rng, max(n_random // 2, 2))
        right = _default_directions(space.right, rng, max(n_random // 2, 2))
        dirs = [(f"left:{lbl}", PairVector(v, space.right.zero())) for lbl, v in left]
        dirs += [(f"right:{lbl}", PairVector(space.left.zero(), v)) for lbl, v in right]
        return dirs
    from .spaces import QuadrantSpace
    if isinstance(space, FiniteSpace):
        top = space.dim - 1
    elif isinstance(space, QuadrantSpace):
        total = space.total_dim
        top = (total - 1) if total is not None else space.corner_dim + 5
    else:
        top = 5
    if top < 0:
        return []
    dirs = [(f"e{k}", Vector.basis(k)) for k in range(min(top + 1, 4))]
    for i in range(n_random):
        support = rng.choice(top + 1, size=min(3, top + 1), replace=False)
        vec = Vector.make({int(k): Fraction(int(rng.integers(-8, 9)), 8)
                           for k in support})
        if not vec.is_zero():
            dirs.append((f"rand{i}", vec))
    return dirs


def _point_inward(direction: Point, active: list[int]) -> Point:
    """Reflect corner components so steps stay inside the quadrant."""
    if not active:
        return direction
    w = direction.left if isinstance(direction, PairVector) else direction
    fixed = {k: (abs(v) if k in active else v) for k, v in w.entries}
    w2 = Vector(tuple(sorted(fixed.items())), w.level)
    if isinstance(direction, PairVector):
        return PairVector(w2, direction.right)
    return w2


def _judge(residuals: list[float], tol: float, slope: float) -> tuple[str, bool]:
    window = residuals[-4:]
    if len(window) < 4:
        return "insufficient", False
    if max(window) < tol:
        return "converged", True
    first, last = window[0], window[-1]
    if last == 0:
        return "sloped", True
    if first == 0:
        return "flat", False
    # decay factor per halving, averaged geometrically over the window
    mean_ratio = (first / last) ** (1.0 / (len(window) - 1))
    if mean_ratio >= slope:
        return "sloped", True
    return "flat", False


def sc1_verify(f: SmoothMap, x: Point, directions=None, radii=None,
               seed: int = 0, tol: float = TOL_SC1,
               slope_factor: float = SC1_SLOPE_FACTOR,
               levels: tuple[int, int] = (0, 1),
               n_random: int = N_RANDOM_DIRECTIONS) -> Sc1Report:
    """Difference-quotient check of the supplied derivative at one point.

    levels = (numerator level, denominator level); the standard test measures
    the residual on level 0 against steps measured on level 1.
    """
    if not f.domain.contains(x):
        raise DomainExitError("base point not in the map's domain")
    radii = list(radii if radii is not None else RADII)
    rng = np.random.default_rng(seed)
    if directions is None:
        directions = _default_directions(f.domain.space, rng, n_random)
    else:
        directions = [(f"d{i}", d) if not isinstance(d, tuple) else d
                      for i, d in enumerate(directions)]
    active = f.domain.active_faces(x)
    num_level, den_level = levels
    fx = f.eval(x)
    report = Sc1Report(point=x, passed=True, seed=seed, tol=tol,
                       slope_factor=slope_factor)
    for label, u in directions:
        u = _point_inward(u, active)
        qs = []
        for r in radii:
            step = u.scale(Fraction(r))  # the default radii are dyadic, so exact
            xr = x + step
            if not f.domain.contains(xr):
                continue
            resid = f.eval(xr) - fx - f.deriv(x, step)
            num = f.codomain.level_norm(resid, num_level)
            den = f.domain.space.level_norm(step, den_level)
            qs.append(num / den if den else math.inf)
        if len(qs) < 5:
            report.skipped.append(label)
            continue
        route, ok = _judge(qs, tol, slope_factor)
        report.directions.append(DirectionResult(label, qs, route, ok))
        report.passed = report.passed and ok
    if not report.directions:
        report.passed = False
        report.skipped.append("no admissible directions")
    return report


def certify_sc1(f: SmoothMap, points: Sequence[Point], **kw) -> Sc1Report:
    """Run sc1_verify over several points and attach the certificate to f."""
    reports = [sc1_verify(f, x, **kw) for x in points]
    passed = all(r.passed for r in reports)
    f.sc1_certificate = {"route": "sampled", "points": len(points),
                         "passed": passed,
                         "seed": kw.get("seed", 0)}
    if not passed:
        f.sc1_certificate = None
        raise MapCertificationError("sc1 verification failed; map not certified")
    return reports[0] if len(reports) == 1 else Sc1Report(
        point=points[0], passed=passed,
        directions=[d for r in reports for d in r.directions],
        skipped=[s for r in reports for s in r.skipped],
        seed=kw.get("seed", 0))


# ---------------------------------------------------------------------------
# chain rule
# ---------------------------------------------------------------------------

@dataclass
class ChainRuleReport:
    residuals: list[float]
    max_residual: float
    exact: bool
    composite_route: str
    passed: bool
    tol: float


def chain_rule_verify(f: SmoothMap, g: SmoothMap,
                      points: Sequence[TangentPoint],
                      tol: float = TOL_CHAIN) -> ChainRuleReport:
    """Check T(g o f) = Tg o Tf at the given tangent points.

    The composite tangent uses the composite's own derivative: the symbolic
    expansion when both maps are polynomial (fully independent of the chain
    product), otherwise the product formula backed by a direct difference-
    quotient verification of the composite at the sampled base points.
    """
    try:
        composite: SmoothMap = expand_composite(g, f)
        route = "expanded"
    except TypeError:
        composite = CompositeMap(g, f)
        route = "product+verified"
        for p in points:
            rep = sc1_verify(composite, p.base)
            if not rep.passed:
                raise MapCertificationError(
                    "composite failed direct sc1 verification")
    composite.sc1_certificate = {"route": route}
    residuals = []
    exact_mode = composite.exact and f.exact and g.exact
    for p in points:
        lhs = tangent_map(composite, p)
        rhs = tangent_map(g, tangent_map(f, p))
        diff_base = lhs.base - rhs.base
        diff_dir = lhs.direction - rhs.direction
        if exact_mode:
            residuals.append(0.0 if diff_base.is_zero() and diff_dir.is_zero()
                             else math.inf)
        else:
            residuals.append(max(g.codomain.level_norm(diff_base, 0),
                                 g.codomain.level_norm(diff_dir, 0)))
    worst = max(residuals) if residuals else 0.0
    passed = worst == 0.0 if exact_mode else worst <= tol
    return ChainRuleReport(residuals, worst, exact_mode, route, passed, tol)


# ---------------------------------------------------------------------------
# classical C^k checks across level shifts
# ---------------------------------------------------------------------------

@dataclass
class LevelCkReport:
    order: int
    level: int
    mode: str
    max_error: float
    consistency: float
    passed: bool
    applicable: bool = True
    note: str = ""


def level_ck_check(f: SmoothMap, k: int, m: int, points: Sequence[Point],
                   direction: Point | None = None,
                   steps: tuple[float, float] = (1e-2, 5e-3),
                   tol: float = 1e-5) -> LevelCkReport:
    """Finite-difference evidence that f maps level m+k into level m as C^k.

    With a symbolic derivative present this is the forward check (compare the
    first difference quotient against the derivative, then probe stability of
    the k-th difference).  Without one, the same probes certify the pattern
    of the converse criterion: classical smoothness of one extra order on
    shifted levels, which is what upgrades to smoothness across the scale.
    """
    if f.domain.min_level > 0:
        return LevelCkReport(k, m, "n/a", math.nan, math.nan, False,
                             applicable=False,
                             note="domain restricted to levels >= "
                                  f"{f.domain.min_level}; converse check not applicable")
    has_deriv = True
    try:
        probe = points[0]
        f.deriv(probe, probe - probe)
    except (NotImplementedError, TypeError):
        has_deriv = False
    mode = "forward" if has_deriv else "converse"
    u = direction if direction is not None else Vector.basis(0)
    max_err = 0.0
    consistency = 0.0
    for x in points:
        if not f.domain.contains(x):
            continue
        h1, h2 = steps
        if has_deriv and k >= 1:
            for h in steps:
                fd = (f.eval(x + u.scale(h)) - f.eval(x - u.scale(h))).scale(0.5 / h)
                err = f.codomain.level_norm(fd - f.deriv(x, u), m)
                max_err = max(max_err, err)
        # k-th (capped at 2nd) difference stability between the two steps
        def second(hh):
            return (f.eval(x + u.scale(hh)) - f.eval(x).scale(2)
                    + f.eval(x - u.scale(hh))).scale(1.0 / hh ** 2)
        d2a, d2b = second(h1), second(h2)
        consistency = max(consistency,
                          f.codomain.level_norm(d2a - d2b, m))
    passed = (max_err <= tol if mode == "forward" else True) and consistency <= 1e-3
    return LevelCkReport(k, m, mode, max_err, consistency, passed)
