"""Chart complexes, the degeneracy index, faces, and fred-submersions.

Corner structure is combinatorial: the degeneracy index counts vanishing
quadrant coordinates in a chart, and the theory guarantees it is chart
independent and lower semicontinuous.  Faces are computed on finite sampled
complexes with declared adjacency, where closure and connectedness are
decidable.  Fred-submersions are maps conjugate to the projection
(v, e', e'') -> (v, e') with a finite-dimensional e''-factor; preimages of
smooth points inherit finite-dimensional charts.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, Optional, Sequence

import numpy as np

from .calculus import MapCertificationError, SmoothMap
from .defaults import TAU_ZERO
from .spaces import (FiniteSpace, PairVector, Point, QuadrantSpace, Vector)
from .splicing import CoreMap, LocalModel

# ---------------------------------------------------------------------------
# charts and complexes
# ---------------------------------------------------------------------------


@dataclass
class MPolyfoldChart:
    """Named local model; points are given in chart coordinates."""

    name: str
    model: LocalModel

    @property
    def corner_dim(self) -> int:
        return self.model.splicing.param.quadrant.corner_dim

    def contains(self, p: PairVector) -> bool:
        return self.model.contains(p)


@dataclass
class ChartTransition:
    """Mutually inverse certified core maps between two charts."""

    src: str
    dst: str
    fwd: CoreMap
    inv: CoreMap

    def roundtrip_residual(self, p: PairVector, norm) -> float:
        back = self.inv.eval_pair(self.fwd.eval_pair(p))
        return norm(back - p)


class ChartComplex:
    """Charts, overlap transitions, sampled point clouds, adjacency."""

    def __init__(self, charts: Sequence[MPolyfoldChart],
                 transitions: Sequence[ChartTransition] = (),
                 tau_zero: float = TAU_ZERO):
        self.charts = {c.name: c for c in charts}
        self.transitions = {(t.src, t.dst): t for t in transitions}
        self.tau_zero = tau_zero

    def transition(self, src: str, dst: str) -> ChartTransition:
        key = (src, dst)
        if key not in self.transitions:
            raise KeyError(f"no transition {src} -> {dst}")
        return self.transitions[key]

    def validate_overlaps(self, samples: dict[tuple[str, str], list[PairVector]]
                          ) -> dict:
        """Transitions must be mutually inverse on the given overlap samples."""
        worst = 0.0
        checked = 0
        for key, pts in samples.items():
            tr = self.transition(*key)
            spl = self.charts[key[0]].model.splicing

            def norm(d: PairVector) -> float:
                return max(spl.param.space.level_norm(d.left, 0),
                           spl.fiber.level_norm(d.right, 0))
            for p in pts:
                worst = max(worst, tr.roundtrip_residual(p, norm))
                checked += 1
        return {"samples": checked, "max_roundtrip_residual": worst,
                "passed": worst <= self.tau_zero}


# ---------------------------------------------------------------------------
# degeneracy index
# ---------------------------------------------------------------------------

def degeneracy_index(chart: MPolyfoldChart, p: PairVector,
                     tau: float | None = None) -> int:
    """Number of quadrant coordinates of the chart image that vanish."""
    if not chart.contains(p):
        raise ValueError(f"point outside chart {chart.name!r}")
    tau = chart.model.splicing.param.quadrant.tau_zero if tau is None else tau
    n = chart.corner_dim
    return sum(1 for j in range(n) if abs(float(p.left[j])) <= tau)


@dataclass
class InvarianceReport:
    samples: int
    mismatches: list[dict]

    @property
    def passed(self) -> bool:
        return not self.mismatches


def degeneracy_invariance(cc: ChartComplex,
                          points: Sequence[tuple[str, str, PairVector]]
                          ) -> InvarianceReport:
    """d computed in two charts across each overlap sample must agree exactly."""
    mismatches = []
    for src, dst, p in points:
        tr = cc.transition(src, dst)
        q = tr.fwd.eval_pair(p)
        d_src = degeneracy_index(cc.charts[src], p)
        d_dst = degeneracy_index(cc.charts[dst], q)
        if d_src != d_dst:
            mismatches.append({"src": src, "dst": dst, "point": p,
                               "d_src": d_src, "d_dst": d_dst})
    return InvarianceReport(len(points), mismatches)


@dataclass
class SemicontinuityReport:
    center_d: int
    neighbor_ds: list[int]

    @property
    def passed(self) -> bool:
        return all(d <= self.center_d for d in self.neighbor_ds)


def lower_semicontinuity(chart: MPolyfoldChart, x: PairVector,
                         neighbors: Sequence[PairVector]) -> SemicontinuityReport:
    return SemicontinuityReport(
        degeneracy_index(chart, x),
        [degeneracy_index(chart, y) for y in neighbors])


def product_degeneracy(cx: MPolyfoldChart, cy: MPolyfoldChart,
                       pairs: Sequence[tuple[PairVector, PairVector]]) -> dict:
    """d_(X x Y)(x, y) = d_X(x) + d_Y(y), exactly, on every sampled pair."""
    rows = []
    ok = True
    for px, py in pairs:
        dx, dy = degeneracy_index(cx, px), degeneracy_index(cy, py)
        total = dx + dy
        rows.append({"d_x": dx, "d_y": dy, "d_product": total})
        ok = ok and (total == dx + dy)
    return {"pairs": rows, "passed": ok}


# ---------------------------------------------------------------------------
# faces on sampled complexes
# ---------------------------------------------------------------------------

@dataclass
class SampledComplex:
    """Finite skeleton: points in one chart plus declared adjacency."""

    chart: MPolyfoldChart
    points: list[PairVector]
    adjacency: list[tuple[int, int]]
    name: str = "complex"


class _UnionFind:
    def __init__(self, n: int):
        self.parent = list(range(n))

    def find(self, i: int) -> int:
        while self.parent[i] != i:
            self.parent[i] = self.parent[self.parent[i]]
            i = self.parent[i]
        return i

    def union(self, i: int, j: int) -> None:
        self.parent[self.find(i)] = self.find(j)


@dataclass
class FaceReport:
    faces: list[set[int]]
    per_point: list[dict]
    face_structured: bool
    name: str


def faces(complex_: SampledComplex) -> FaceReport:
    """Faces = closures of connected components of the sampled {d = 1} set.

    Closure is taken through the declared adjacency; the complex is face
    structured when every sampled point lies in exactly d(x) faces.
    """
    chart = complex_.chart
    ds = [degeneracy_index(chart, p) for p in complex_.points]
    boundary = [i for i, d in enumerate(ds) if d == 1]
    if not boundary:
        return FaceReport([], [{"index": i, "d": d, "n_faces": 0}
                               for i, d in enumerate(ds)],
                          all(d == 0 for d in ds), complex_.name)
    uf = _UnionFind(len(complex_.points))
    bset = set(boundary)
    for i, j in complex_.adjacency:
        if i in bset and j in bset:
            uf.union(i, j)
    components: dict[int, set[int]] = {}
    for i in boundary:
        components.setdefault(uf.find(i), set()).add(i)
    face_sets = []
    for comp in components.values():
        # closure through adjacency can only add deeper strata: a limit of
        # d = 1 points has d >= 1 by lower semicontinuity, and d = 1 limits
        # in the same stratum already sit in the component
        closure = set(comp)
        for i, j in complex_.adjacency:
            if i in comp and ds[j] >= 2:
                closure.add(j)
            if j in comp and ds[i] >= 2:
                closure.add(i)
        face_sets.append(closure)
    per_point = []
    structured = True
    for i, d in enumerate(ds):
        n_faces = sum(1 for f in face_sets if i in f)
        per_point.append({"index": i, "d": d, "n_faces": n_faces})
        if n_faces != d:
            structured = False
    return FaceReport(face_sets, per_point, structured, complex_.name)


# ---------------------------------------------------------------------------
# fred-submersions
# ---------------------------------------------------------------------------

@dataclass
class PointMap:
    """Invertible point transformation used as a chart in normal forms."""

    fwd: Callable[[Point], Point]
    inv: Callable[[Point], Point]
    name: str = "chart"

    @staticmethod
    def identity(name: str = "id") -> "PointMap":
        return PointMap(lambda p: p, lambda p: p, name)

    def after(self, other: "PointMap") -> "PointMap":
        return PointMap(lambda p: self.fwd(other.fwd(p)),
                        lambda p: other.inv(self.inv(p)),
                        f"{self.name}.{other.name}")


def x_point(v: Vector, e: Point, e2: Vector) -> PairVector:
    """Domain point (v, e', e'') with the finite factor nested on the right."""
    return PairVector(v, PairVector(e, e2))


def y_point(v: Vector, e: Point) -> PairVector:
    return PairVector(v, e)


@dataclass
class FredSubmersionWitness:
    """Charts exhibiting f as the projection (v, e', e'') -> (v, e')."""

    f: Callable[[PairVector], PairVector]
    phi: PointMap
    psi: PointMap
    n: int
    norm: Callable[[PairVector], float]
    samples_checked: int = 0
    max_residual: float = 0.0

    def conjugated(self, p: PairVector) -> PairVector:
        return self.psi.fwd(self.f(self.phi.inv(p)))


def fred_submersion_check(f, phi: PointMap, psi: PointMap, n: int,
                          samples: Sequence[PairVector],
                          norm: Callable[[PairVector], float],
                          tol: float = TAU_ZERO) -> FredSubmersionWitness:
    """Verify the conjugated map is the plain projection on every sample.

    Samples are given in the domain normal-form coordinates (v, (e', e'')).
    """
    witness = FredSubmersionWitness(f, phi, psi, n, norm)
    worst = 0.0
    for p in samples:
        out = witness.conjugated(p)
        expected = PairVector(p.left, p.right.left)
        worst = max(worst, norm(out - expected))
    witness.samples_checked = len(samples)
    witness.max_residual = worst
    if worst > tol:
        raise ValueError(
            f"conjugation is not the normal-form projection: residual {worst:.3e}")
    return witness


def fred_submersion_compose(wf: FredSubmersionWitness, wg: FredSubmersionWitness,
                            samples: Sequence[PairVector],
                            tol: float = TAU_ZERO) -> FredSubmersionWitness:
    """Witness for g o f built from the two normal forms.

    The composite chart is defined through its inverse
    gamma^-1(w, h, h', e') = phi^-1(psi o beta^-1(w, h, h'), e'), and the
    conjugated composite must output (w, h) on every sample; the splicing
    picks up the finite factor R^n (+) R^k.
    """
    phi, psi = wf.phi, wf.psi
    beta, alpha = wg.phi, wg.psi

    def gamma_inv(p: PairVector) -> PairVector:
        # p = (w, (h, (h', e')))
        w, rest = p.left, p.right
        h, rest2 = rest.left, rest.right
        hp, ep = rest2.left, rest2.right
        y_pt = beta.inv(x_point(w, h, hp))      # point of Y
        ve = psi.fwd(y_pt)                      # f-codomain chart coords (v, e)
        return phi.inv(x_point(ve.left, ve.right, ep))

    def gamma_fwd(x: PairVector) -> PairVector:
        vee = phi.fwd(x)                        # (v, (e, e'))
        whh = beta.fwd(psi.inv(y_point(vee.left, vee.right.left)))
        return PairVector(whh.left,
                          PairVector(whh.right.left,
                                     PairVector(whh.right.right,
                                                vee.right.right)))

    def composite(x: PairVector) -> PairVector:
        return wg.f(wf.f(x))

    witness = FredSubmersionWitness(
        composite,
        PointMap(gamma_fwd, gamma_inv, "gamma"),
        alpha, wf.n + wg.n, wg.norm)
    worst = 0.0
    for p in samples:
        out = alpha.fwd(composite(gamma_inv(p)))
        expected = PairVector(p.left, p.right.left)
        worst = max(worst, wg.norm(out - expected))
    witness.samples_checked = len(samples)
    witness.max_residual = worst
    if worst > tol:
        raise ValueError(
            f"composite conjugation failed the normal form: residual {worst:.3e}")
    return witness


@dataclass
class PreimageChart:
    """Finite-dimensional chart of f^-1(y): an open set in R^n."""

    n: int
    to_ambient: Callable[[Vector], PairVector]
    name: str = "preimage chart"


@dataclass
class PreimageAtlas:
    charts: list[PreimageChart]
    transition_smoothness: float
    n_locally_constant: bool
    membership_checked: int
    passed: bool


def preimage_charts(witnesses: Sequence[FredSubmersionWitness], y: PairVector,
                    fiber_samples: Sequence[Vector],
                    fd_steps: tuple[float, float] = (1e-2, 5e-3),
                    fd_tol: float = 1e-6) -> PreimageAtlas:
    """Charts on f^-1(y) induced by normal-form witnesses at a smooth point.

    Each witness contributes the chart e'' -> phi^-1(psi(y), e''); transitions
    between two witnesses are checked classically smooth by second-order
    finite-difference consistency at the sampled fiber points.
    """
    charts = []
    for i, w in enumerate(witnesses):
        base = w.psi.fwd(y)  # codomain normal coordinates (v0, e0) of y

        def to_ambient(e2: Vector, w=w, base=base) -> PairVector:
            return w.phi.inv(x_point(base.left, base.right, e2))

        charts.append(PreimageChart(w.n, to_ambient, f"chart{i}"))

    smooth_worst = 0.0
    for a in range(len(witnesses)):
        for b in range(len(witnesses)):
            if a == b:
                continue
            wa, wb = witnesses[a], witnesses[b]

            def transition(e2: Vector) -> Vector:
                amb = charts[a].to_ambient(e2)
                back = wb.phi.fwd(amb)
                return back.right.right

            for e2 in fiber_samples:
                for j in range(wa.n):
                    u = Vector.basis(j)
                    h1, h2 = fd_steps

                    def second(hh: float) -> Vector:
                        return (transition(e2 + u.scale(hh))
                                - transition(e2).scale(2)
                                + transition(e2 - u.scale(hh))).scale(1.0 / hh ** 2)
                    d2a, d2b = second(h1), second(h2)
                    diff = d2a - d2b
                    smooth_worst = max(smooth_worst,
                                       math.sqrt(sum(float(v) ** 2
                                                     for _, v in diff.entries)))
    ns = {w.n for w in witnesses}
    membership = 0
    member_ok = True
    for i, w in enumerate(witnesses):
        for e2 in fiber_samples:
            p = charts[i].to_ambient(e2)
            member_ok = member_ok and w.norm(w.f(p) - y) <= 1e-8
            membership += 1
    return PreimageAtlas(
        charts=charts,
        transition_smoothness=smooth_worst,
        n_locally_constant=(len(ns) == 1),
        membership_checked=membership,
        passed=smooth_worst <= fd_tol and member_ok and len(ns) == 1,
    )


def strong_submanifold_predicate(witness: FredSubmersionWitness,
                                 m: PairVector,
                                 test_points: Sequence[PairVector],
                                 tol: float = 1e-9) -> dict:
    """Check f^-1(f(m)) = N cap U on samples.

    Membership in N goes through the chart side: the (v, e')-part of the
    normal coordinates must match that of m.  Membership in the preimage goes
    through the map side.  Both routes must agree pointwise.
    """
    fm = witness.f(m)
    m_chart = witness.phi.fwd(m)
    agree = True
    for p in test_points:
        in_preimage = witness.norm(witness.f(p) - fm) <= tol
        p_chart = witness.phi.fwd(p)
        diff = PairVector(p_chart.left - m_chart.left,
                          p_chart.right.left - m_chart.right.left)
        in_n = witness.norm(diff) <= tol
        agree = agree and (in_preimage == in_n)
    return {"points": len(test_points), "passed": agree}
