"""Parameterized projection families, their fixed-point cores, and tangents.

A splicing is a family of projections pi_v on a fiber scale, smooth jointly
in (v, e) over an open subset of a partial quadrant.  Its core is the
fixed-point set {(v, e): pi_v(e) = e}, the local model of spaces whose fiber
dimension may jump.  Four families ship built in: trivial, zero, constant
finite rank, and the rank-jump family driven by a gluing-style profile, which
is the standing example of locally varying dimension.  Verification reports
everywhere are sampled numerical evidence.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, Optional, Sequence

import numpy as np

from .calculus import (CompositeMap, FunctionMap, MapCertificationError,
                       OpenSet, PolyMap, SmoothMap, TangentPoint, certify_sc1,
                       expand_composite, sc1_verify, tangent_map)
from .defaults import TAU_ZERO
from .packing import Packing
from .spaces import (DirectSum, FiniteSpace, PairVector, PartialQuadrant,
                     Point, QuadrantSpace, ScaleSpace, SequenceSpace, Vector,
                     direct_sum)


# ---------------------------------------------------------------------------
# parameter domains
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class ParamDomain:
    """Relatively open box inside a partial quadrant, with a sampler."""

    quadrant: PartialQuadrant
    bounds: tuple[tuple[float, float], ...]
    description: str = ""

    @property
    def space(self) -> QuadrantSpace:
        return self.quadrant.space

    def contains(self, v: Vector) -> bool:
        inside, _ = self.quadrant.contains(v)
        if not inside:
            return False
        for j, (lo, hi) in enumerate(self.bounds):
            x = float(v[j])
            if x >= hi:
                return False
            if j >= self.quadrant.corner_dim and x <= lo:
                return False
        return True

    def radius_at(self, v: Vector) -> float:
        margins = []
        for j, (lo, hi) in enumerate(self.bounds):
            x = float(v[j])
            margins.append(hi - x)
            if j >= self.quadrant.corner_dim:
                margins.append(x - lo)
        return min(margins) if margins else math.inf

    def open_set(self) -> OpenSet:
        return OpenSet(self.space, predicate=self.contains,
                       radius_at=self.radius_at, quadrant=self.quadrant,
                       description=self.description or "parameter box")

    def sample(self, rng: np.random.Generator, on_faces: Sequence[int] = ()) -> Vector:
        entries = {}
        for j, (lo, hi) in enumerate(self.bounds):
            if j in on_faces and j < self.quadrant.corner_dim:
                entries[j] = Fraction(0)
            else:
                low = lo if j >= self.quadrant.corner_dim else max(lo, 0.0)
                span = hi - low
                entries[j] = Fraction(
                    int(rng.integers(1, 63)), 64) * Fraction(span).limit_denominator(4096) \
                    + Fraction(low).limit_denominator(4096)
        return Vector.make(entries)


def box_domain(corner_dim: int, extra_dim: int = 0, hi: float = 1.0,
               tau: float = TAU_ZERO) -> ParamDomain:
    """[0, hi)^corner x (-hi, hi)^extra, the stock parameter domain."""
    q = PartialQuadrant(QuadrantSpace(corner_dim, FiniteSpace(extra_dim)), tau)
    bounds = tuple([(0.0, hi)] * corner_dim + [(-hi, hi)] * extra_dim)
    return ParamDomain(q, bounds)


# ---------------------------------------------------------------------------
# splicings
# ---------------------------------------------------------------------------

@dataclass
class Splicing:
    """Family of projections on the fiber, jointly smooth over the parameters."""

    param: ParamDomain
    fiber: ScaleSpace
    proj: Callable[[Vector, Vector], Vector]
    dproj: Callable[[Vector, Vector, Vector], Vector]
    name: str = "splicing"
    exact: bool = False
    certificate: Optional[dict] = None

    @property
    def pair_space(self) -> DirectSum:
        return direct_sum(self.param.space, self.fiber)

    def joint_domain(self) -> OpenSet:
        def pred(p: PairVector) -> bool:
            return self.param.contains(p.left)
        return OpenSet(self.pair_space, predicate=pred,
                       radius_at=lambda p: self.param.radius_at(p.left),
                       quadrant=self.param.quadrant,
                       description=f"{self.name} joint domain")

    def joint_map(self) -> SmoothMap:
        """(v, e) -> pi_v(e), the map whose smoothness defines the splicing."""
        def ev(p: PairVector) -> Vector:
            return self.proj(p.left, p.right)

        def dv(p: PairVector, h: PairVector) -> Vector:
            return self.dproj(p.left, p.right, h.left) + self.proj(p.left, h.right)

        return FunctionMap(self.joint_domain(), self.fiber, ev, dv,
                           exact=self.exact, name=f"{self.name}:joint")

    def complement(self) -> "Splicing":
        return Splicing(
            self.param, self.fiber,
            proj=lambda v, e: e - self.proj(v, e),
            dproj=lambda v, e, dv: -self.dproj(v, e, dv),
            name=f"{self.name}^c", exact=self.exact,
            certificate=self.certificate)

    def certify(self, points: Sequence[PairVector], **kw) -> dict:
        report = certify_sc1(self.joint_map(), points, **kw)
        self.certificate = {"passed": report.passed, "points": len(points),
                            "evidence": "sampled difference quotients"}
        return self.certificate


def trivial_splicing(param: ParamDomain, fiber: ScaleSpace) -> Splicing:
    return Splicing(param, fiber,
                    proj=lambda v, e: e,
                    dproj=lambda v, e, dv: Vector.zero(),
                    name="trivial", exact=True)


def zero_splicing(param: ParamDomain, fiber: ScaleSpace) -> Splicing:
    return Splicing(param, fiber,
                    proj=lambda v, e: Vector.zero(),
                    dproj=lambda v, e, dv: Vector.zero(),
                    name="zero", exact=True)


def const_rank_splicing(param: ParamDomain, fiber: ScaleSpace,
                        rank: int) -> Splicing:
    return Splicing(param, fiber,
                    proj=lambda v, e: e.truncate(rank),
                    dproj=lambda v, e, dv: Vector.zero(),
                    name=f"const_rank({rank})", exact=True)


# -- the rank-jump family

def _flat_sigma(x: float) -> float:
    return math.exp(-1.0 / x) if x > 0 else 0.0


def _flat_sigma_d(x: float) -> float:
    return math.exp(-1.0 / x) / (x * x) if x > 0 else 0.0


def _flat_step(tau: float) -> tuple[float, float]:
    """C-infinity step on [0,1], flat at both ends; returns (value, derivative)."""
    a, b = _flat_sigma(tau), _flat_sigma(1.0 - tau)
    da, db = _flat_sigma_d(tau), -_flat_sigma_d(1.0 - tau)
    s = a + b
    return a / s, (da * b - a * db) / (s * s)


@dataclass
class _WindowVector:
    """u(t) on a two-index window, with its t-derivative."""

    idx: int
    coeffs: tuple[float, float]
    dcoeffs: tuple[float, float]

    def pairing(self, e: Vector) -> tuple[float, float]:
        c0, c1 = self.coeffs
        d0, d1 = self.dcoeffs
        e0, e1 = float(e[self.idx]), float(e[self.idx + 1])
        return c0 * e0 + c1 * e1, d0 * e0 + d1 * e1

    def vector(self, scale: float) -> Vector:
        if scale == 0.0:
            return Vector.zero()
        return Vector.make({self.idx: self.coeffs[0] * scale,
                            self.idx + 1: self.coeffs[1] * scale})

    def dvector(self, scale: float) -> Vector:
        if scale == 0.0:
            return Vector.zero()
        return Vector.make({self.idx: self.dcoeffs[0] * scale,
                            self.idx + 1: self.dcoeffs[1] * scale})


PROFILES: dict[str, Callable[[float], tuple[float, float]]] = {}


def _register_profiles():
    def exp_inv(t: float) -> tuple[float, float]:
        x = 1.0 / t
        if x > 300.0:
            return math.inf, math.inf
        a = math.exp(x)
        return a, -a / (t * t)

    def inv(t: float) -> tuple[float, float]:
        return 1.0 / t, -1.0 / (t * t)

    PROFILES["exp_inv"] = exp_inv
    PROFILES["inv"] = inv


_register_profiles()


def rank_jump_splicing(param: ParamDomain, fiber: SequenceSpace,
                       profile: str = "exp_inv", base_index: int = 0,
                       broken: bool = False) -> Splicing:
    """Orthogonal rank-0/1 family: pi_0 = 0 and pi_t projects onto span{u(t)}.

    u(t) rotates through consecutive basis vectors as the profile a(t) grows,
    so the image drifts to ever higher indices as t -> 0+.  The projections
    are exactly idempotent (orthogonal, unit u).  The broken variant keeps a
    hard window jump: its joint map is discontinuous at profile crossings and
    must fail verification; it exists as a negative control.
    """
    prof = PROFILES[profile]

    def window(t: float) -> Optional[_WindowVector]:
        if t <= 0.0:
            return None
        a, da = prof(t)
        if not math.isfinite(a) or a > 1e12:
            return None
        i = int(math.floor(a))
        tau = a - i
        if broken:
            return _WindowVector(base_index + i, (1.0, 0.0), (0.0, 0.0))
        theta_unit, dpsi = _flat_step(tau)
        theta = 0.5 * math.pi * theta_unit
        dtheta = 0.5 * math.pi * dpsi * da
        return _WindowVector(base_index + i,
                             (math.cos(theta), math.sin(theta)),
                             (-math.sin(theta) * dtheta, math.cos(theta) * dtheta))

    def proj(v: Vector, e: Vector) -> Vector:
        w = window(float(v[0]))
        if w is None:
            return Vector.zero()
        p, _ = w.pairing(e)
        return w.vector(p)

    def dproj(v: Vector, e: Vector, dv: Vector) -> Vector:
        w = window(float(v[0]))
        if w is None:
            return Vector.zero()
        dt = float(dv[0])
        if dt == 0.0:
            return Vector.zero()
        p, dp = w.pairing(e)
        return (w.dvector(p) + w.vector(dp)).scale(dt)

    return Splicing(param, fiber, proj, dproj,
                    name=f"rank_jump({profile}{', broken' if broken else ''})",
                    exact=False)


def product_splicing(s: Splicing, t: Splicing) -> tuple[Splicing, Callable, Callable]:
    """Product over V (+) V'; returns the splicing plus param pack/unpack."""
    qs, qt = s.param.quadrant.space, t.param.quadrant.space
    ns, nt = qs.total_dim, qt.total_dim
    if ns is None or nt is None:
        raise ValueError("product parameters need finite ambient dimension")
    cs, ct = qs.corner_dim, qt.corner_dim
    corner = cs + ct
    extra = (ns - cs) + (nt - ct)
    q = PartialQuadrant(QuadrantSpace(corner, FiniteSpace(extra)),
                        s.param.quadrant.tau_zero)

    def pack(v1: Vector, v2: Vector) -> Vector:
        entries = {}
        for k, val in v1.entries:
            entries[k if k < cs else corner + (k - cs)] = val
        for k, val in v2.entries:
            entries[cs + k if k < ct else corner + (ns - cs) + (k - ct)] = val
        return Vector.make(entries)

    def unpack(v: Vector) -> tuple[Vector, Vector]:
        e1, e2 = {}, {}
        for k, val in v.entries:
            if k < cs:
                e1[k] = val
            elif k < corner:
                e2[k - cs] = val
            elif k < corner + (ns - cs):
                e1[cs + (k - corner)] = val
            else:
                e2[ct + (k - corner - (ns - cs))] = val
        return Vector.make(e1), Vector.make(e2)

    bounds = []
    for j in range(cs):
        bounds.append(s.param.bounds[j])
    for j in range(ct):
        bounds.append(t.param.bounds[j])
    for j in range(cs, ns):
        bounds.append(s.param.bounds[j])
    for j in range(ct, nt):
        bounds.append(t.param.bounds[j])
    param = ParamDomain(q, tuple(bounds), f"{s.param.description} x {t.param.description}")

    fiber = direct_sum(s.fiber, t.fiber)

    def proj(v: Vector, e: PairVector) -> PairVector:
        v1, v2 = unpack(v)
        return PairVector(s.proj(v1, e.left), t.proj(v2, e.right))

    def dproj(v: Vector, e: PairVector, dv: Vector) -> PairVector:
        v1, v2 = unpack(v)
        d1, d2 = unpack(dv)
        return PairVector(s.dproj(v1, e.left, d1), t.dproj(v2, e.right, d2))

    spl = Splicing(param, fiber, proj, dproj,
                   name=f"({s.name} x {t.name})", exact=s.exact and t.exact)
    return spl, pack, unpack


def whitney_sum(s: Splicing, t: Splicing) -> Splicing:
    """Fiberwise sum over one shared parameter domain."""
    if s.param is not t.param and s.param != t.param:
        raise ValueError("whitney sum requires the identical parameter domain")
    fiber = direct_sum(s.fiber, t.fiber)
    return Splicing(
        s.param, fiber,
        proj=lambda v, e: PairVector(s.proj(v, e.left), t.proj(v, e.right)),
        dproj=lambda v, e, dv: PairVector(s.dproj(v, e.left, dv),
                                          t.dproj(v, e.right, dv)),
        name=f"({s.name} (+) {t.name})", exact=s.exact and t.exact)


# ---------------------------------------------------------------------------
# cores, local models, tangents
# ---------------------------------------------------------------------------

@dataclass
class SplicingCore:
    """Fixed-point bundle of a splicing over its parameter set."""

    splicing: Splicing
    tau_zero: float = TAU_ZERO

    def residual(self, v: Vector, e: Vector, m: int = 0) -> float:
        diff = self.splicing.proj(v, e) - e
        return self.splicing.fiber.level_norm(diff, m)

    def contains(self, v: Vector, e: Vector, level: int = 0,
                 tau: float | None = None) -> bool:
        if not self.splicing.param.contains(v):
            raise ValueError("parameter outside the splicing's domain")
        tau = self.tau_zero if tau is None else tau
        return all(self.residual(v, e, m) <= tau for m in range(level + 1))

    def project(self, v: Vector, e: Vector) -> PairVector:
        return PairVector(v, self.splicing.proj(v, e))


def core_contains(core: SplicingCore, v: Vector, e: Vector, level: int = 0,
                  tau: float | None = None) -> bool:
    return core.contains(v, e, level, tau)


@dataclass
class LocalModel:
    """Open subset of a splicing core; openness via an explicit radius witness."""

    core: SplicingCore
    predicate: Callable[[PairVector], bool] = lambda p: True
    radius_at: Callable[[PairVector], float] = lambda p: 1.0
    name: str = "local model"

    @property
    def splicing(self) -> Splicing:
        return self.core.splicing

    def contains(self, p: PairVector, level: int = 0) -> bool:
        if not self.splicing.param.contains(p.left):
            return False
        return self.core.contains(p.left, p.right, level) and self.predicate(p)

    def open_set(self) -> OpenSet:
        return OpenSet(self.splicing.pair_space,
                       predicate=lambda p: self.contains(p),
                       radius_at=self.radius_at,
                       quadrant=self.splicing.param.quadrant,
                       description=self.name)


def hat_extend(model: LocalModel) -> tuple[OpenSet, Callable[[PairVector], PairVector]]:
    """The open thickening {(v,e): (v, pi_v(e)) in O} plus its retraction."""
    spl = model.splicing

    def pred(p: PairVector) -> bool:
        if not spl.param.contains(p.left):
            return False
        return model.contains(model.core.project(p.left, p.right))

    hat = OpenSet(spl.pair_space, predicate=pred,
                  radius_at=lambda p: model.radius_at(model.core.project(p.left, p.right)),
                  quadrant=spl.param.quadrant,
                  description=f"hat({model.name})")
    return hat, lambda p: model.core.project(p.left, p.right)


@dataclass
class TangentSplicing:
    """P_(v,dv)(e,de) = (pi_v(e), D(pi)(v,e)(dv,de)); a projection on tangents."""

    base: Splicing

    def apply(self, v: Vector, dv: Vector, e: Vector, de: Vector) -> tuple[Vector, Vector]:
        spl = self.base
        out_e = spl.proj(v, e)
        out_de = spl.dproj(v, e, dv) + spl.proj(v, de)
        return out_e, out_de

    def bi_level_note(self) -> str:
        return ("tangent core points of bi-level (m, k), k <= m, project to "
                "level-m points of the base core")


@dataclass
class IdempotencyReport:
    samples: int
    max_residual: float
    exact: bool
    passed: bool
    tol: float


def tangent_splicing(spl: Splicing, tangent_samples: Sequence[tuple],
                     tol: float = 1e-8) -> tuple[TangentSplicing, IdempotencyReport]:
    """Build the tangent family and verify P o P = P at the given samples."""
    if spl.certificate is None or not spl.certificate.get("passed"):
        raise MapCertificationError(
            f"splicing {spl.name!r} is not sc1-certified; certify first")
    ts = TangentSplicing(spl)
    worst = 0.0
    for (v, dv, e, de) in tangent_samples:
        e1, de1 = ts.apply(v, dv, e, de)
        e2, de2 = ts.apply(v, dv, e1, de1)
        worst = max(worst,
                    spl.fiber.level_norm(e2 - e1, 0),
                    spl.fiber.level_norm(de2 - de1, 0))
    exact = spl.exact and worst == 0.0
    return ts, IdempotencyReport(len(tangent_samples), worst, exact,
                                 worst <= tol, tol)


# ---------------------------------------------------------------------------
# sampling
# ---------------------------------------------------------------------------

def sample_fiber_vector(fiber: ScaleSpace, rng: np.random.Generator,
                        top: int = 6) -> Vector:
    if isinstance(fiber, DirectSum):
        return PairVector(sample_fiber_vector(fiber.left, rng, top),
                          sample_fiber_vector(fiber.right, rng, top))
    if isinstance(fiber, FiniteSpace):
        top = max(fiber.dim - 1, 0)
        if fiber.dim == 0:
            return Vector.zero()
    support = rng.choice(top + 1, size=min(3, top + 1), replace=False)
    return Vector.make({int(k): Fraction(int(rng.integers(-8, 9)), 8)
                        for k in support})


def sample_core_point(spl: Splicing, rng: np.random.Generator,
                      on_faces: Sequence[int] = ()) -> PairVector:
    v = spl.param.sample(rng, on_faces)
    xi = sample_fiber_vector(spl.fiber, rng)
    return PairVector(v, spl.proj(v, xi))


def sample_tangent_core_point(spl: Splicing, rng: np.random.Generator
                              ) -> tuple[Vector, Vector, Point, Point]:
    p = sample_core_point(spl, rng)
    v, e = p.left, p.right
    dv = spl.param.sample(rng)
    xi = sample_fiber_vector(spl.fiber, rng)
    de = spl.proj(v, xi) + spl.dproj(v, e, dv)
    return v, dv, e, de


# ---------------------------------------------------------------------------
# core maps
# ---------------------------------------------------------------------------

class CoreMap:
    """Map between local models, given on packed coordinates.

    The underlying map acts on the packed space (base block followed by the
    fiber block); `hat()` precomposes with the core retraction, which is the
    object whose difference quotients define smoothness for core maps.
    """

    def __init__(self, domain_model: LocalModel, codomain_model: LocalModel,
                 packed_map: SmoothMap, name: str = "core map"):
        self.domain_model = domain_model
        self.codomain_model = codomain_model
        self.packed_map = packed_map
        self.name = name
        self.pack_in = Packing(domain_model.splicing.param.space,
                               domain_model.splicing.fiber)
        self.pack_out = Packing(codomain_model.splicing.param.space,
                                codomain_model.splicing.fiber)

    def eval_pair(self, p: PairVector) -> PairVector:
        out = self.packed_map.eval(self.pack_in.pack(p.left, p.right))
        v, e = self.pack_out.unpack(out)
        return PairVector(v, e)

    def deriv_pair(self, p: PairVector, h: PairVector) -> PairVector:
        out = self.packed_map.deriv(self.pack_in.pack(p.left, p.right),
                                    self.pack_in.pack(h.left, h.right))
        v, e = self.pack_out.unpack(out)
        return PairVector(v, e)

    def hat(self) -> SmoothMap:
        """The packed map precomposed with the core retraction."""
        spl = self.domain_model.splicing
        _, retraction = hat_extend(self.domain_model)
        pk = self.pack_in

        def ev(x: Vector) -> Vector:
            v, e = pk.unpack(x)
            r = retraction(PairVector(v, e))
            return self.packed_map.eval(pk.pack(r.left, r.right))

        def dv(x: Vector, h: Vector) -> Vector:
            v, e = pk.unpack(x)
            hv, he = pk.unpack(h)
            r = retraction(PairVector(v, e))
            dr_fiber = spl.dproj(v, e, hv) + spl.proj(v, he)
            return self.packed_map.deriv(pk.pack(r.left, r.right),
                                         pk.pack(hv, dr_fiber))

        def pred(x: Vector) -> bool:
            v, e = pk.unpack(x)
            if not spl.param.contains(v):
                return False
            return self.domain_model.contains(self.domain_model.core.project(v, e))

        dom = OpenSet(pk.packed_space, predicate=pred,
                      description=f"hat domain of {self.name}")
        return FunctionMap(dom, self.pack_out.packed_space, ev, dv,
                           exact=self.packed_map.exact and spl.exact,
                           name=f"hat({self.name})")

    def certify(self, points: Sequence[PairVector], **kw) -> None:
        packed_pts = [self.pack_in.pack(p.left, p.right) for p in points]
        certify_sc1(self.hat(), packed_pts, **kw)
        self.certificate = {"passed": True, "points": len(points)}

    @property
    def certified(self) -> bool:
        return getattr(self, "certificate", None) is not None


@dataclass
class TangentCorePoint:
    """((v, dv), (e, de)) in the reordered tangent convention."""

    v: Vector
    dv: Vector
    e: Point
    de: Point


def core_map_tangent(f: CoreMap, p: TangentCorePoint,
                     tau: float = 1e-8) -> tuple[TangentCorePoint, float]:
    """Push a tangent-core point through Tf; re-check target core membership.

    The output uses the reordered convention ((f1, Df1), (f2, Df2)).  The
    returned residual is the fixed-point defect of the image under the target
    tangent projection, the differentiated membership identity.
    """
    if not f.certified:
        raise MapCertificationError(f"core map {f.name!r} not certified")
    src = f.domain_model.splicing
    res_in = max(src.fiber.level_norm(src.proj(p.v, p.e) - p.e, 0),
                 src.fiber.level_norm(
                     src.dproj(p.v, p.e, p.dv) + src.proj(p.v, p.de) - p.de, 0))
    if res_in > tau:
        raise ValueError("input point fails tangent-core membership")
    base = PairVector(p.v, p.e)
    direction = PairVector(p.dv, p.de)
    out = f.eval_pair(base)
    dout = f.deriv_pair(base, direction)
    image = TangentCorePoint(out.left, dout.left, out.right, dout.right)
    tgt = f.codomain_model.splicing
    e2 = tgt.proj(image.v, image.e)
    de2 = tgt.dproj(image.v, image.e, image.dv) + tgt.proj(image.v, image.de)
    residual = max(tgt.fiber.level_norm(e2 - image.e, 0),
                   tgt.fiber.level_norm(de2 - image.de, 0))
    return image, residual


@dataclass
class CoreChainRuleReport:
    residuals: list[float]
    max_residual: float
    exact: bool
    passed: bool
    route: str
    tol: float


def core_chain_rule(f: CoreMap, g: CoreMap, points: Sequence[TangentCorePoint],
                    tol: float = 1e-9) -> CoreChainRuleReport:
    """T(g o f) = Tg o Tf at sampled tangent-core points.

    The left side uses the composite's own derivative: the symbolic expansion
    of the packed polynomial maps when available, the product formula
    otherwise.  At tangent-core points the retraction differentials drop out,
    which is exactly why the identity is well posed on cores.
    """
    if not (f.certified and g.certified):
        raise MapCertificationError("both core maps must be certified")
    try:
        composite = expand_composite(g.packed_map, f.packed_map)
        route = "expanded"
    except TypeError:
        composite = CompositeMap(g.packed_map, f.packed_map)
        route = "product"
    residuals = []
    exact = composite.exact and f.domain_model.splicing.exact
    out_pack = g.pack_out
    for p in points:
        x = f.pack_in.pack(p.v, p.e)
        h = f.pack_in.pack(p.dv, p.de)
        lhs = (composite.eval(x), composite.deriv(x, h))
        mid, _ = core_map_tangent(f, p)
        rhs_pt, _ = core_map_tangent(g, mid)
        rhs = (out_pack.pack(rhs_pt.v, rhs_pt.e), out_pack.pack(rhs_pt.dv, rhs_pt.de))
        diff0 = lhs[0] - rhs[0]
        diff1 = lhs[1] - rhs[1]
        if exact:
            residuals.append(0.0 if diff0.is_zero() and diff1.is_zero() else math.inf)
        else:
            residuals.append(max(out_pack.packed_space.level_norm(diff0, 0),
                                 out_pack.packed_space.level_norm(diff1, 0)))
    worst = max(residuals) if residuals else 0.0
    passed = (worst == 0.0) if exact else (worst <= tol)
    return CoreChainRuleReport(residuals, worst, exact, passed, route, tol)
