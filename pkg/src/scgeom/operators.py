"""Structured operator algebra on the sequence model, with exact Fredholm data.

Operators are finite sums of banded monomials (a net shift composed with a
certified diagonal) and rank-one terms with finite-support data.  The algebra
is closed under sum, composition and transpose, and three exact procedures
live on top of it:

* a levelwise boundedness certificate per term,
* a one-level-gain (compact) certificate for perturbation operators,
* the Fredholm certificate: the banded part has a limit symbol, a Laurent
  polynomial whose coefficients are the diagonal limits.  The operator is
  Fredholm compatibly on every level of the scale iff that symbol has all its
  roots strictly inside the unit disk, and then the index equals minus the
  top nonvanishing shift.  Root location is decided exactly over the
  rationals by a Schur-Cohn recursion.

Kernel and cokernel bases are materialized afterwards from finite windows.
The windowed kernel can only miss kernel vectors with infinite support and
the windowed cokernel can only overcount, so whenever the windowed dimension
difference equals the symbol index both bases are provably complete; the
splitting records this through its `materialized` flag.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, Optional, Sequence

from .defaults import SAMPLE_LEVELS, TAU_ZERO
from .spaces import (FiniteSpace, Scalar, ScaleSpace, SequenceSpace,
                     SpaceMismatchError, Vector, as_scalar, is_exact)


class IndexUndecidableError(ValueError):
    """The operator leaves the class with certified Fredholm data."""


class NotScFredholmError(ValueError):
    """Certified failure: no compatible splittings across the scale exist."""


class DependentBasisError(ValueError):
    pass


class CodimensionError(ValueError):
    pass


# ---------------------------------------------------------------------------
# diagonal rules
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class DiagRule:
    """Diagonal coefficient rule d(k) = sum_i c_i * r_i^k with finite overrides.

    `window` holds full-value overrides at finitely many indices and
    `mask_below` forces the value 0 for k below a threshold.  Shifts, sums and
    products stay in this class, which is what keeps every certificate
    closed-form.
    """

    geoms: tuple[tuple[Scalar, Scalar], ...] = ()
    window: tuple[tuple[int, Scalar], ...] = ()
    mask_below: int = 0

    # -- construction helpers

    @staticmethod
    def const(c) -> "DiagRule":
        c = as_scalar(c)
        if c == 0:
            return DiagRule()
        return DiagRule(geoms=((c, Fraction(1)),))

    @staticmethod
    def geometric(c, ratio) -> "DiagRule":
        c = as_scalar(c)
        ratio = as_scalar(ratio)
        if c == 0:
            return DiagRule()
        if ratio == 0:
            raise ValueError("use a window entry instead of ratio 0")
        return DiagRule(geoms=((c, ratio),))

    @staticmethod
    def from_window(values: dict[int, Scalar]) -> "DiagRule":
        return DiagRule(window=tuple(sorted((k, as_scalar(v)) for k, v in values.items())))

    @staticmethod
    def _merge_geoms(geoms) -> tuple[tuple[Scalar, Scalar], ...]:
        acc: dict[Scalar, Scalar] = {}
        for c, r in geoms:
            acc[r] = acc.get(r, Fraction(0)) + c
        return tuple(sorted(((c, r) for r, c in acc.items() if c != 0),
                            key=lambda cr: (float(cr[1]), float(cr[0]))))

    # -- evaluation

    def value(self, k: int) -> Scalar:
        if k < self.mask_below:
            return Fraction(0)
        for i, v in self.window:
            if i == k:
                return v
        total: Scalar = Fraction(0)
        for c, r in self.geoms:
            total = total + c * (r ** k)
        return total

    @property
    def window_end(self) -> int:
        """First index from which the pure geometric formula applies."""
        end = self.mask_below
        if self.window:
            end = max(end, max(i for i, _ in self.window) + 1)
        return end

    @property
    def exact(self) -> bool:
        return (all(is_exact(c) and is_exact(r) for c, r in self.geoms)
                and all(is_exact(v) for _, v in self.window))

    # -- algebra

    def add(self, other: "DiagRule") -> "DiagRule":
        lo = min(self.mask_below, other.mask_below)
        forced = set(range(lo, max(self.mask_below, other.mask_below)))
        forced.update(i for i, _ in self.window)
        forced.update(i for i, _ in other.window)
        window = tuple(sorted((k, self.value(k) + other.value(k))
                              for k in forced if k >= lo))
        geoms = self._merge_geoms(self.geoms + other.geoms)
        return DiagRule(geoms, window, lo)

    def mul(self, other: "DiagRule") -> "DiagRule":
        lo = max(self.mask_below, other.mask_below)
        forced = {i for i, _ in self.window} | {i for i, _ in other.window}
        window = tuple(sorted((k, self.value(k) * other.value(k))
                              for k in forced if k >= lo))
        geoms = self._merge_geoms(
            (c1 * c2, r1 * r2) for c1, r1 in self.geoms for c2, r2 in other.geoms)
        return DiagRule(geoms, window, lo)

    def scale(self, c) -> "DiagRule":
        c = as_scalar(c)
        if c == 0:
            return DiagRule()
        return DiagRule(tuple((c * ci, r) for ci, r in self.geoms),
                        tuple((k, c * v) for k, v in self.window),
                        self.mask_below)

    def shifted(self, s: int) -> "DiagRule":
        """Rule k -> value(k + s), masked so it is never queried below index 0."""
        mask = max(0, self.mask_below - s, -s)
        window = tuple(sorted((i - s, v) for i, v in self.window if i - s >= mask))
        geoms = tuple((c * (r ** s), r) for c, r in self.geoms)
        return DiagRule(geoms, window, mask)

    def masked(self, lo: int) -> "DiagRule":
        if lo <= self.mask_below:
            return self
        window = tuple((i, v) for i, v in self.window if i >= lo)
        return DiagRule(self.geoms, window, lo)

    # -- certificates

    def sup_abs(self) -> float:
        total = 0.0
        for c, r in self.geoms:
            if abs(float(r)) > 1.0:
                return math.inf
            total += abs(float(c))
        if self.window:
            total = max(total, max(abs(float(v)) for _, v in self.window))
        return total

    def limit(self) -> Optional[Scalar]:
        """Limit of d(k) as k -> infinity, or None when it cannot be certified."""
        total: Scalar = Fraction(0)
        for c, r in self.geoms:
            ar = abs(float(r))
            if ar < 1.0:
                continue
            if r == 1:
                total = total + c
            else:
                return None
        return total

    def is_eventually_zero(self) -> bool:
        return not self.geoms

    def nonzero_from(self) -> Optional[int]:
        """Threshold beyond which d(k) != 0, or None when not certifiable."""
        start = self.window_end
        if not self.geoms:
            return None
        if len(self.geoms) == 1:
            return start
        lim = self.limit()
        if lim is None or lim == 0:
            return None
        dev = [(abs(float(c)), abs(float(r))) for c, r in self.geoms if abs(float(r)) < 1.0]
        target = abs(float(lim))
        k = start
        for _ in range(100000):
            if sum(c * (r ** k) for c, r in dev) < target:
                return k
            k += 1
        return None

    def decay_ratio(self) -> float:
        """Smallest rho with |d(k)| = O(rho^k) beyond the window."""
        if not self.geoms:
            return 0.0
        return max(abs(float(r)) for _, r in self.geoms)

    def describe(self) -> str:
        parts = [f"{c}*({r})^k" for c, r in self.geoms]
        if self.window:
            parts.append(f"window{dict(self.window)}")
        if self.mask_below:
            parts.append(f"mask<{self.mask_below}")
        return " + ".join(parts) if parts else "0"


# ---------------------------------------------------------------------------
# terms and operators
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class BandTerm:
    """e_k -> rule(k) * e_(k+shift); the rule's mask keeps indices nonnegative."""

    shift: int
    rule: DiagRule

    def __post_init__(self):
        if self.rule.mask_below < max(0, -self.shift):
            object.__setattr__(self, "rule", self.rule.masked(max(0, -self.shift)))

    def apply_into(self, x: Vector, acc: dict[int, Scalar]) -> None:
        for k, v in x.entries:
            d = self.rule.value(k)
            if d != 0:
                j = k + self.shift
                acc[j] = acc.get(j, Fraction(0)) + v * d

    def transpose(self) -> "BandTerm":
        return BandTerm(-self.shift, self.rule.shifted(-self.shift))

    @property
    def exact(self) -> bool:
        return self.rule.exact


@dataclass(frozen=True)
class RankOneTerm:
    """x -> <lam, x> * u with finite-support functional and image."""

    lam: Vector
    u: Vector

    def apply_into(self, x: Vector, acc: dict[int, Scalar]) -> None:
        c = self.lam.inner(x)
        if c != 0:
            for k, v in self.u.entries:
                acc[k] = acc.get(k, Fraction(0)) + c * v

    def transpose(self) -> "RankOneTerm":
        return RankOneTerm(self.u, self.lam)

    @property
    def exact(self) -> bool:
        return self.lam.exact and self.u.exact


class ScOperator:
    """Level-respecting linear operator in the structured algebra."""

    def __init__(self, domain: ScaleSpace, codomain: ScaleSpace,
                 band_terms: Sequence[BandTerm] = (),
                 rank_terms: Sequence[RankOneTerm] = ()):
        self.domain = domain
        self.codomain = codomain
        merged: dict[int, DiagRule] = {}
        for t in band_terms:
            merged[t.shift] = merged[t.shift].add(t.rule) if t.shift in merged else t.rule
        self.band_terms = tuple(BandTerm(s, r) for s, r in sorted(merged.items())
                                if not (r.is_eventually_zero() and not r.window))
        self.rank_terms = tuple(t for t in rank_terms
                                if t.lam.entries and t.u.entries)
        for t in self.band_terms:
            if t.rule.sup_abs() == math.inf:
                raise ValueError("diagonal rule is unbounded; not an sc-operator")

    # -- constructors

    @staticmethod
    def identity(space: ScaleSpace) -> "ScOperator":
        return ScOperator(space, space, [BandTerm(0, DiagRule.const(1))])

    @staticmethod
    def zero(domain: ScaleSpace, codomain: ScaleSpace | None = None) -> "ScOperator":
        return ScOperator(domain, codomain or domain)

    @staticmethod
    def shift_left(space: ScaleSpace, power: int = 1) -> "ScOperator":
        """L^power: e_k -> e_(k-power), annihilating the first `power` basis vectors."""
        return ScOperator(space, space, [BandTerm(-power, DiagRule.const(1))])

    @staticmethod
    def shift_right(space: ScaleSpace, power: int = 1) -> "ScOperator":
        return ScOperator(space, space, [BandTerm(power, DiagRule.const(1))])

    @staticmethod
    def diagonal(space: ScaleSpace, rule: DiagRule) -> "ScOperator":
        return ScOperator(space, space, [BandTerm(0, rule)])

    @staticmethod
    def rank_one(domain: ScaleSpace, codomain: ScaleSpace,
                 lam: Vector, u: Vector) -> "ScOperator":
        return ScOperator(domain, codomain, [], [RankOneTerm(lam, u)])

    @staticmethod
    def from_matrix(rows: Sequence[Sequence], domain: ScaleSpace,
                    codomain: ScaleSpace) -> "ScOperator":
        terms = []
        for i, row in enumerate(rows):
            lam = Vector.make({j: as_scalar(v) for j, v in enumerate(row) if v != 0})
            if lam.entries:
                terms.append(RankOneTerm(lam, Vector.basis(i)))
        return ScOperator(domain, codomain, [], terms)

    # -- algebra

    def apply(self, x: Vector) -> Vector:
        if not self.domain.contains(x):
            raise SpaceMismatchError("vector not in the operator's domain")
        acc: dict[int, Scalar] = {}
        for t in self.band_terms:
            t.apply_into(x, acc)
        for t in self.rank_terms:
            t.apply_into(x, acc)
        out = Vector(tuple(sorted((k, v) for k, v in acc.items() if v != 0)), x.level)
        if not self.codomain.contains(out):
            raise SpaceMismatchError("image escapes the codomain")
        return out

    def __call__(self, x: Vector) -> Vector:
        return self.apply(x)

    def __add__(self, other: "ScOperator") -> "ScOperator":
        return ScOperator(self.domain, self.codomain,
                          self.band_terms + other.band_terms,
                          self.rank_terms + other.rank_terms)

    def __sub__(self, other: "ScOperator") -> "ScOperator":
        return self + other.scale(-1)

    def scale(self, c) -> "ScOperator":
        c = as_scalar(c)
        return ScOperator(self.domain, self.codomain,
                          [BandTerm(t.shift, t.rule.scale(c)) for t in self.band_terms],
                          [RankOneTerm(t.lam.scale(c), t.u) for t in self.rank_terms])

    def compose(self, other: "ScOperator") -> "ScOperator":
        """self after other."""
        bands = []
        ranks = []
        for t1 in self.band_terms:
            for t2 in other.band_terms:
                rule = t2.rule.mul(t1.rule.shifted(t2.shift))
                bands.append(BandTerm(t1.shift + t2.shift,
                                      rule.masked(max(0, -(t1.shift + t2.shift)))))
            for t2 in other.rank_terms:
                acc: dict[int, Scalar] = {}
                t1.apply_into(t2.u, acc)
                image = Vector(tuple(sorted((k, v) for k, v in acc.items() if v != 0)))
                if image.entries:
                    ranks.append(RankOneTerm(t2.lam, image))
        for t1 in self.rank_terms:
            band_part = ScOperator(other.domain, other.codomain, other.band_terms)
            pulled = band_part.transpose().apply(t1.lam)
            if pulled.entries:
                ranks.append(RankOneTerm(pulled, t1.u))
            for t2 in other.rank_terms:
                c = t1.lam.inner(t2.u)
                if c != 0:
                    ranks.append(RankOneTerm(t2.lam.scale(c), t1.u))
        return ScOperator(other.domain, self.codomain, bands, ranks)

    def transpose(self) -> "ScOperator":
        return ScOperator(self.codomain, self.domain,
                          [t.transpose() for t in self.band_terms],
                          [t.transpose() for t in self.rank_terms])

    @property
    def exact(self) -> bool:
        return (all(t.exact for t in self.band_terms)
                and all(t.exact for t in self.rank_terms))

    # -- certificates

    def level_bound(self, m: int) -> float:
        """Closed-form bound on the operator norm at level m (sequence model)."""
        delta = float(self.domain.delta) if isinstance(self.domain, SequenceSpace) else 0.0
        total = 0.0
        for t in self.band_terms:
            total += t.rule.sup_abs() * math.exp(delta * m * max(t.shift, 0))
        for t in self.rank_terms:
            lam_dual = math.sqrt(sum(float(v) ** 2 * math.exp(-2 * delta * m * k)
                                     for k, v in t.lam.entries))
            u_norm = math.sqrt(sum(float(v) ** 2 * math.exp(2 * delta * m * k)
                                   for k, v in t.u.entries))
            total += lam_dual * u_norm
        return total

    def scplus_certificate(self, delta: float | None = None) -> tuple[bool, str]:
        """Check that every term gains one level: band diagonals must decay at
        least like e^(-delta*k); rank-one terms always land in the smooth core."""
        if delta is None:
            if not isinstance(self.codomain, SequenceSpace):
                return True, "finite-dimensional codomain: constant scale"
            delta = float(self.codomain.delta)
        bound = math.exp(-delta) * (1 + 1e-12)
        for t in self.band_terms:
            rho = t.rule.decay_ratio()
            if rho > bound:
                return False, (f"band term shift={t.shift} decays like {rho:.6g}^k, "
                               f"needs <= e^-delta = {math.exp(-delta):.6g}")
        return True, "all band diagonals decay at one-level-gain rate"

    def describe(self) -> str:
        parts = [f"shift({t.shift})*diag[{t.rule.describe()}]" for t in self.band_terms]
        parts += [f"rank1(lam={t.lam!r}, u={t.u!r})" for t in self.rank_terms]
        return " + ".join(parts) if parts else "0"


class ScPlusOperator:
    """An operator certified to map level m into level m+1 boundedly."""

    def __init__(self, underlying: ScOperator, delta: float | None = None):
        ok, detail = underlying.scplus_certificate(delta)
        if not ok:
            raise ValueError(f"not a one-level-gain operator: {detail}")
        self.op = underlying
        self.certificate = detail

    def apply(self, x: Vector) -> Vector:
        out = self.op.apply(x)
        return out.at_level(x.level + 1)


# ---------------------------------------------------------------------------
# exact linear algebra on small windows
# ---------------------------------------------------------------------------

def _rref(rows: list[list[Scalar]], tol: float = 0.0) -> tuple[list[list[Scalar]], list[int]]:
    """Reduced row echelon form; returns (rows, pivot column indices).

    Exact for Fraction entries (tol 0); float entries use |entry| <= tol as zero.
    """
    rows = [list(r) for r in rows]
    if not rows:
        return rows, []
    ncols = len(rows[0])
    pivots: list[int] = []
    r = 0
    for c in range(ncols):
        pivot = None
        best = tol
        for i in range(r, len(rows)):
            mag = abs(float(rows[i][c]))
            if mag > best:
                pivot, best = i, mag
        if pivot is None:
            continue
        rows[r], rows[pivot] = rows[pivot], rows[r]
        pv = rows[r][c]
        rows[r] = [v / pv for v in rows[r]]
        for i in range(len(rows)):
            if i != r and rows[i][c] != 0:
                f = rows[i][c]
                rows[i] = [a - f * b for a, b in zip(rows[i], rows[r])]
        pivots.append(c)
        r += 1
        if r == len(rows):
            break
    return rows[:r], pivots


def _nullspace(columns: list[list[Scalar]], tol: float = 0.0) -> list[list[Scalar]]:
    """Nullspace basis of the matrix whose columns are given, in RREF form."""
    ncols = len(columns)
    if ncols == 0:
        return []
    nrows = len(columns[0])
    rows = [[columns[j][i] for j in range(ncols)] for i in range(nrows)]
    rref, pivots = _rref(rows, tol)
    free = [j for j in range(ncols) if j not in pivots]
    basis = []
    for f in free:
        v: list[Scalar] = [Fraction(0)] * ncols
        v[f] = Fraction(1)
        for r, p in enumerate(pivots):
            v[p] = -rref[r][f]
        basis.append(v)
    return basis


def _span_rref(vectors: list[list[Scalar]], tol: float = 0.0) -> tuple[list[list[Scalar]], list[int]]:
    return _rref(vectors, tol)


def _solve_columns(columns: list[list[Scalar]], target: list[Scalar],
                   tol: float = 0.0) -> Optional[list[Scalar]]:
    """One solution x of (columns)x = target, or None if inconsistent."""
    ncols = len(columns)
    nrows = len(target)
    rows = [[columns[j][i] for j in range(ncols)] + [target[i]] for i in range(nrows)]
    rref, pivots = _rref(rows, tol)
    if ncols in pivots:
        return None
    x: list[Scalar] = [Fraction(0)] * ncols
    for r, p in enumerate(pivots):
        x[p] = rref[r][ncols]
    return x


# ---------------------------------------------------------------------------
# symbol certificate
# ---------------------------------------------------------------------------

def _schur_cohn_all_inside(coeffs: list[Scalar]) -> str:
    """Exact test: do all roots of sum a_j z^j lie strictly inside |z| < 1?

    Returns "inside", "boundary" (some root certified on the circle or the
    test degenerates), or "outside" (some root on or outside the circle).
    """
    a = [Fraction(c) if is_exact(c) else float(c) for c in coeffs]
    while a and a[-1] == 0:
        a.pop()
    if not a:
        raise ValueError("zero polynomial")
    while len(a) > 1:
        n = len(a) - 1
        lead2 = a[n] * a[n]
        const2 = a[0] * a[0]
        if const2 == lead2:
            return "boundary"
        if const2 > lead2:
            return "outside"
        b = [a[n] * a[j + 1] - a[0] * a[n - 1 - j] for j in range(n)]
        a = b
        while a and a[-1] == 0:
            a.pop()
        if not a:
            return "boundary"
    return "inside"


def _roots_all_inside_float(coeffs: list[float], margin: float = 1e-9) -> str:
    import numpy as np

    arr = np.array(coeffs[::-1], dtype=float)
    arr = np.trim_zeros(arr, trim="f")
    if arr.size <= 1:
        return "inside"
    radii = np.abs(np.roots(arr))
    if radii.size == 0:
        return "inside"
    top = float(radii.max())
    if top < 1.0 - margin:
        return "inside"
    if top <= 1.0 + margin:
        return "boundary"
    return "outside"


@dataclass
class SymbolCertificate:
    """Limit symbol of the banded part and the root-location verdict."""

    limits: tuple[tuple[int, Scalar], ...]
    s_min: int
    s_max: int
    verdict: str
    regime: str

    @property
    def index(self) -> int:
        return -self.s_max

    def describe(self) -> str:
        sym = " + ".join(f"({c})z^{s}" for s, c in self.limits)
        return f"symbol {sym}; roots {self.verdict}; regime {self.regime}"


def symbol_certificate(op: ScOperator) -> SymbolCertificate:
    limits = []
    for t in op.band_terms:
        lim = t.rule.limit()
        if lim is None:
            raise IndexUndecidableError(
                f"diagonal at shift {t.shift} has no certified limit "
                f"({t.rule.describe()})")
        if lim != 0:
            limits.append((t.shift, lim))
    if not limits:
        raise NotScFredholmError(
            "limit symbol vanishes: the operator is levelwise compact, "
            "never Fredholm on an infinite-dimensional scale")
    limits.sort()
    s_min = limits[0][0]
    s_max = limits[-1][0]
    coeff_map = dict(limits)
    coeffs = [coeff_map.get(s, Fraction(0)) for s in range(s_min, s_max + 1)]
    exact = all(is_exact(c) for c in coeffs)
    if exact:
        verdict = _schur_cohn_all_inside(coeffs)
        regime = "exact"
    else:
        verdict = _roots_all_inside_float([float(c) for c in coeffs])
        regime = "float"
    return SymbolCertificate(tuple(limits), s_min, s_max, verdict, regime)


# ---------------------------------------------------------------------------
# splittings and analysis
# ---------------------------------------------------------------------------

@dataclass
class FredholmSplitting:
    """Kernel/cokernel data of a Fredholm sc-operator.

    `materialized` records that the finite-support bases are provably
    complete; when False only the index (from the symbol) is authoritative.
    """

    index: int
    kernel_basis: list[Vector]
    cokernel_basis: list[Vector]
    projection: Optional[ScOperator]
    materialized: bool
    regime: str
    certificates: dict = field(default_factory=dict)


class OperatorAnalysis:
    """Full Fredholm analysis plus an exact solver for T x + C gamma = y."""

    def __init__(self, op: ScOperator, extra_margin: int = 0):
        self.op = op
        self.regime = "exact" if op.exact else "float"
        self._tol = 0.0 if self.regime == "exact" else 1e-11
        if isinstance(op.domain, FiniteSpace):
            self._analyze_finite()
        else:
            self._analyze_sequence(extra_margin)

    # -- finite-dimensional branch: plain exact linear algebra

    def _analyze_finite(self):
        n = self.op.domain.dim
        if not isinstance(self.op.codomain, FiniteSpace):
            raise NotScFredholmError(
                "finite-dimensional domain into an infinite scale has an "
                "infinite-dimensional cokernel")
        m = self.op.codomain.dim
        cols = [self._coords(self.op.apply(Vector.basis(k)), m) for k in range(n)]
        self.symbol = None
        null = _nullspace(cols, self._tol)
        self.kernel_basis = [Vector.make({i: v for i, v in enumerate(vec) if v != 0})
                             for vec in null]
        span, pivots = _span_rref([list(c) for c in cols], self._tol)
        rank = len(span)
        free_rows = [i for i in range(m) if i not in pivots]
        self.cokernel_basis = [Vector.basis(i) for i in free_rows]
        self.index = len(self.kernel_basis) - len(self.cokernel_basis)
        self.materialized = True
        self._solve_cols = cols
        self._solve_rows = m
        self.certificates = {"kind": "finite", "rank": rank}

    # -- sequence branch

    def _analyze_sequence(self, extra_margin: int):
        op = self.op
        self.symbol = symbol_certificate(op)
        if self.symbol.verdict != "inside":
            raise NotScFredholmError(
                "symbol roots on or outside the unit disk: level splittings "
                f"would disagree across the scale ({self.symbol.describe()})")
        self.index = self.symbol.index
        s_max = self.symbol.s_max

        lead_rule = None
        for t in op.band_terms:
            if t.shift == s_max:
                lead_rule = t.rule
        if lead_rule is None:
            raise IndexUndecidableError("leading shift lost during merge")
        k0 = lead_rule.nonzero_from()
        if k0 is None:
            raise IndexUndecidableError(
                "leading diagonal has no certified nonvanishing tail: "
                f"{lead_rule.describe()}")
        # window reduction clears tops through the leading shift; band terms
        # with infinite tails above it would re-populate cleared coordinates
        self._solve_safe = all(t.shift <= s_max or t.rule.is_eventually_zero()
                               for t in op.band_terms)

        lam_top = max((t.lam.top() for t in op.rank_terms), default=-1)
        u_top = max((t.u.top() for t in op.rank_terms), default=-1)
        # window overrides of band rules act like finite-rank corrections
        for t in op.band_terms:
            if t.rule.window:
                w_end = max(i for i, _ in t.rule.window)
                lam_top = max(lam_top, w_end)
                u_top = max(u_top, w_end + t.shift)
        margin = 2 + extra_margin
        b0 = max(k0 + s_max, lam_top + 1 + s_max, u_top, 0) + margin
        n1 = max(k0, lam_top, u_top - s_max, b0 - s_max, 0) + margin
        s_top_any = max((t.shift for t in op.band_terms), default=0)
        r1 = max(n1 + max(s_top_any, 0), u_top, b0) + 1

        self._b0, self._n1, self._r1 = b0, n1, r1
        cols = [self._coords(op.apply(Vector.basis(k)), r1 + 1) for k in range(n1 + 1)]
        self._solve_cols = cols
        self._solve_rows = r1 + 1

        null = _nullspace(cols, self._tol)
        null_rref, _ = _span_rref(null, self._tol)
        self.kernel_basis = [Vector.make({i: v for i, v in enumerate(vec) if v != 0})
                             for vec in null_rref]

        hi_rows = [[cols[j][i] for j in range(n1 + 1)] for i in range(b0 + 1, r1 + 1)]
        if hi_rows:
            hi_null = _nullspace([list(c) for c in zip(*hi_rows)], self._tol)
        else:
            hi_null = [[Fraction(1) if i == j else Fraction(0)
                        for i in range(n1 + 1)] for j in range(n1 + 1)]
        reachable = []
        for x in hi_null:
            img = [sum((cols[j][i] * x[j] for j in range(n1 + 1)), Fraction(0))
                   for i in range(b0 + 1)]
            reachable.append(img)
        span, pivots = _span_rref(reachable, self._tol)
        self._range_window_basis = span
        free = [i for i in range(b0 + 1) if i not in pivots]
        self.cokernel_basis = [Vector.basis(i) for i in free]
        k_w = len(self.kernel_basis)
        c_w = len(self.cokernel_basis)
        self.materialized = (k_w - c_w == self.index)
        self.certificates = {
            "kind": "sequence",
            "symbol": self.symbol.describe(),
            "kernel_support_bound": n1,
            "window": b0,
            "leading_nonzero_from": k0,
            "windowed_dims": (k_w, c_w),
        }
        if not self.materialized:
            # the windowed kernel misses tail vectors; only the index stands
            self.kernel_basis = []
            self.cokernel_basis = []

    @staticmethod
    def _coords(v: Vector, n: int) -> list[Scalar]:
        out: list[Scalar] = [Fraction(0)] * n
        for k, val in v.entries:
            if k >= n:
                raise ValueError("vector escapes the computation window")
            out[k] = val
        return out

    # -- solving

    def reduce_to_window(self, y: Vector) -> tuple[Vector, Vector]:
        """Clear coordinates above the window by explicit preimages.

        Returns (x_clear, r) with y = T(x_clear) + r and supp r inside the
        window.  Requires the sequence branch.
        """
        if isinstance(self.op.domain, FiniteSpace):
            return Vector.zero(), y
        if not self._solve_safe:
            raise IndexUndecidableError(
                "band terms above the leading symbol shift prevent window "
                "reduction; operator outside the solvable class")
        s_max = self.symbol.s_max
        lead = None
        for t in self.op.band_terms:
            if t.shift == s_max:
                lead = t.rule
        x_acc: dict[int, Scalar] = {}
        current = y
        guard = 0
        while current.top() > self._b0:
            guard += 1
            if guard > 100000:
                raise RuntimeError("window reduction failed to terminate")
            top = current.top()
            k = top - s_max
            d = lead.value(k)
            if d == 0:
                raise IndexUndecidableError(
                    "leading diagonal vanished inside its certified tail")
            c = current[top] / d
            x_acc[k] = x_acc.get(k, Fraction(0)) + c
            current = current - self.op.apply(Vector.basis(k, c))
            if current.top() >= top:
                # exact cancellation can leave float dust; drop it explicitly
                entries = tuple((i, v) for i, v in current.entries
                                if i < top or abs(float(v)) > 1e-12 * (1 + abs(float(c))))
                if entries and entries[-1][0] >= top:
                    raise IndexUndecidableError("window reduction stalled")
                current = Vector(entries, current.level)
        x_clear = Vector(tuple(sorted((k, v) for k, v in x_acc.items() if v != 0)))
        return x_clear, current

    def solve(self, y: Vector) -> tuple[Vector, list[Scalar]]:
        """Exact decomposition y = T x + sum gamma_i c_i over the cokernel basis."""
        x_clear, r = self.reduce_to_window(y)
        target = self._coords(r, self._solve_rows)
        cols = list(self._solve_cols)
        ncoker = len(self.cokernel_basis)
        for c in self.cokernel_basis:
            cols.append(self._coords(c, self._solve_rows))
        sol = _solve_columns(cols, target, self._tol)
        if sol is None:
            raise IndexUndecidableError("window system inconsistent; "
                                        "operator outside the decidable class")
        nx = len(self._solve_cols)
        x_w = Vector.make({i: v for i, v in enumerate(sol[:nx]) if v != 0})
        gamma = list(sol[nx:nx + ncoker])
        return x_clear + x_w, gamma

    def range_contains(self, y: Vector) -> bool:
        _, gamma = self.solve(y)
        return all(g == 0 for g in gamma)


def analyze(op: ScOperator, extra_margin: int = 0) -> OperatorAnalysis:
    return OperatorAnalysis(op, extra_margin)


def split_off_finite_dim(space: ScaleSpace, basis: Sequence[Vector]) -> ScOperator:
    """Projection with image span(basis), built from an exact dual basis.

    The duals are the Gram-inverse combinations of the basis itself, so the
    projection is a finite sum of rank-one terms and P o P = P exactly.
    """
    basis = list(basis)
    if not basis:
        return ScOperator.zero(space)
    n = len(basis)
    gram = [[basis[i].inner(basis[j]) for j in range(n)] for i in range(n)]
    aug = [list(gram[i]) + [Fraction(1) if j == i else Fraction(0) for j in range(n)]
           for i in range(n)]
    rref, pivots = _rref(aug)
    if pivots != list(range(n)):
        raise DependentBasisError("basis vectors are linearly dependent")
    inv = [row[n:] for row in rref]
    terms = []
    for i in range(n):
        dual = Vector.zero()
        for j in range(n):
            if inv[i][j] != 0:
                dual = dual + basis[j].scale(inv[i][j])
        terms.append(RankOneTerm(dual, basis[i]))
    return ScOperator(space, space, [], terms)


def fredholm_index(op: ScOperator) -> tuple[int, FredholmSplitting]:
    """Index plus the splitting data, with levelwise spot checks recorded."""
    analysis = analyze(op)
    projection = None
    if analysis.materialized:
        projection = split_off_finite_dim(op.domain, analysis.kernel_basis)
    cert = dict(analysis.certificates)
    cert["levelwise_checks"] = _levelwise_bijectivity_checks(op, analysis, projection)
    splitting = FredholmSplitting(
        index=analysis.index,
        kernel_basis=list(analysis.kernel_basis),
        cokernel_basis=list(analysis.cokernel_basis),
        projection=projection,
        materialized=analysis.materialized,
        regime=analysis.regime,
        certificates=cert,
    )
    return analysis.index, splitting


def _levelwise_bijectivity_checks(op, analysis, projection) -> list[dict]:
    """Sampled certificates that T: X -> Y is a levelwise bijection.

    X = (Id - P)(domain), Y = T(domain); on each sampled level: solve T x = y
    exactly, check the complement part reproduces y and carries finite norms.
    """
    if not analysis.materialized:
        return [{"note": "splitting not materialized; symbol certificate only"}]
    checks = []
    tol = 0.0 if op.exact else 1e-10
    probes = [Vector.basis(k) for k in range(4)]
    for m in SAMPLE_LEVELS:
        ok = True
        for p in probes:
            if not op.domain.contains(p):
                continue
            x0 = p - projection.apply(p) if projection else p
            y = op.apply(x0)
            x, gamma = analysis.solve(y)
            if any(abs(float(g)) > tol for g in gamma):
                ok = False
                continue
            if not (op.apply(x) - y).is_zero(tol):
                ok = False
        checks.append({"level": m, "surjective_onto_samples": ok})
    return checks


def compose_index(t: ScOperator, s: ScOperator) -> int:
    """Index of t o s; asserts additivity against the factors' indices."""
    composed = t.compose(s)
    idx = analyze(composed).index
    idx_t = analyze(t).index
    idx_s = analyze(s).index
    if idx != idx_t + idx_s:
        raise AssertionError(
            f"index additivity violated: i(TS)={idx}, i(T)+i(S)={idx_t + idx_s}")
    return idx


@dataclass
class RegularityLift:
    """Decomposition certificate for the regularizing property."""

    e: Vector
    level: int
    kernel_part: Vector
    solved_part: Vector
    cokernel_coords: list[Scalar]
    reassembled_exactly: bool
    level_norms: dict[int, float]


def regularity_lift(op: ScOperator, e: Vector, m: int,
                    analysis: OperatorAnalysis | None = None) -> RegularityLift:
    """Certify e on level m from T(e) on level m by the splitting decomposition.

    Computes f = T(e), solves f = T(x) + c over the splitting (the cokernel
    component must vanish exactly since f is in the range), and reassembles
    e = k + x_0 with k in the kernel.  All pieces are finite-support, so the
    certified levels are exact.
    """
    analysis = analysis or analyze(op)
    if not analysis.materialized:
        raise IndexUndecidableError("regularity lift needs a materialized splitting")
    f = op.apply(e)
    x, gamma = analysis.solve(f)
    proj = split_off_finite_dim(op.domain, analysis.kernel_basis)
    k = proj.apply(e)
    x0 = e - k
    # x0 - x lies in the kernel; reassembly must give e back exactly
    drift = x0 - x
    in_kernel = proj.apply(drift) - drift
    reassembled = (k + drift + x) - e
    norms = {}
    if isinstance(op.domain, SequenceSpace):
        for lvl in range(m + 1):
            norms[lvl] = op.domain.level_norm(e, lvl)
    return RegularityLift(
        e=e, level=m, kernel_part=k + drift, solved_part=x,
        cokernel_coords=gamma,
        reassembled_exactly=(reassembled.is_zero() and in_kernel.is_zero()
                             and all(g == 0 for g in gamma)),
        level_norms=norms,
    )


@dataclass
class StabilityReport:
    index_base: int
    index_perturbed: int
    kernel_level_spans_equal: bool
    kernel_checks: list[dict]
    materialized: bool


def perturb_scplus_index(op: ScOperator, r: ScPlusOperator) -> StabilityReport:
    """Index of T + R for a one-level-gain perturbation R; must equal i(T).

    Also re-derives the kernel on sampled levels and checks the spans agree,
    the executable restatement of the level-independence of kernels.
    """
    base = analyze(op)
    perturbed = analyze(op + r.op)
    checks = []
    spans_equal = True
    if perturbed.materialized:
        reference = _span_matrix(perturbed.kernel_basis)
        for m in SAMPLE_LEVELS:
            again = analyze(op + r.op, extra_margin=2 * m + 1)
            same = _span_matrix(again.kernel_basis) == reference
            exact_zero = all((op + r.op).apply(k).is_zero()
                             for k in again.kernel_basis)
            finite = True
            if isinstance(op.domain, SequenceSpace):
                finite = all(math.isfinite(op.domain.level_norm(k, m))
                             for k in again.kernel_basis)
            checks.append({"level": m, "span_equal": same,
                           "kernel_annihilated": exact_zero, "norms_finite": finite})
            spans_equal = spans_equal and same and exact_zero and finite
    return StabilityReport(
        index_base=base.index,
        index_perturbed=perturbed.index,
        kernel_level_spans_equal=spans_equal,
        kernel_checks=checks,
        materialized=perturbed.materialized,
    )


def _span_matrix(basis: list[Vector]) -> tuple:
    if not basis:
        return ()
    width = max(v.top() for v in basis) + 1
    rows = [[v[k] for k in range(width)] for v in basis]
    rref, _ = _rref(rows)
    return tuple(tuple(r) for r in rref)


def dense_complement(space: ScaleSpace, description, d_dim: int) -> list[Vector]:
    """Finite-support basis of a complement of Y, Y given by range or coordinates.

    description is ("range", op) or ("coords", [j, ...]) for the subspace of
    vectors vanishing at the listed coordinates.
    """
    kind, payload = description
    if kind == "range":
        analysis = analyze(payload)
        if not analysis.materialized:
            raise IndexUndecidableError("range complement needs materialized data")
        basis = list(analysis.cokernel_basis)
    elif kind == "coords":
        basis = [Vector.basis(j) for j in payload]
    else:
        raise ValueError(f"unknown complement description {kind!r}")
    if len(basis) != d_dim:
        raise CodimensionError(
            f"complement has dimension {len(basis)}, expected {d_dim}")
    return basis
