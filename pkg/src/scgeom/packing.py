"""Packing of (finite base) (+) (fiber scale) into a single sequence space.

A partial-quadrant parameter with finite ambient dimension n occupies the
indices 0..n-1 of one sequence space; the fiber occupies the rest with its
indices offset by n.  Polynomial maps and structured operators then work on
plain vectors, which is what makes linearizations exactly analyzable.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction

from .operators import BandTerm, RankOneTerm, ScOperator
from .spaces import (FiniteSpace, QuadrantSpace, ScaleSpace, SequenceSpace,
                     Vector)


@dataclass(frozen=True)
class PackedSpace(SequenceSpace):
    """Sequence space whose first n_base indices carry the flat base norm."""

    n_base: int = 0

    def level_norm(self, x: Vector, m: int) -> float:
        base = sum(float(v) ** 2 for k, v in x.entries if k < self.n_base)
        fiber = sum(float(v) ** 2 * math.exp(2 * float(self.delta) * m * (k - self.n_base))
                    for k, v in x.entries if k >= self.n_base)
        return math.sqrt(base + fiber)

    def describe(self) -> str:
        return f"packed(n_base={self.n_base}, delta={self.delta})"


@dataclass(frozen=True)
class Packing:
    """Index bookkeeping between W (+) E and the packed space."""

    base: QuadrantSpace
    fiber: ScaleSpace

    @property
    def n_base(self) -> int:
        n = self.base.total_dim
        if n is None:
            raise ValueError("packing requires a finite-dimensional base ambient")
        return n

    @property
    def packed_space(self) -> ScaleSpace:
        if isinstance(self.fiber, FiniteSpace):
            return FiniteSpace(self.n_base + self.fiber.dim)
        delta = getattr(self.fiber, "delta", 1.0)
        return PackedSpace(delta=delta, n_base=self.n_base)

    def pack(self, v: Vector, e: Vector) -> Vector:
        n = self.n_base
        if v.top() >= n:
            raise ValueError("base point exceeds the packed base block")
        entries = tuple(v.entries) + tuple((k + n, val) for k, val in e.entries)
        return Vector(tuple(sorted(entries)), min(v.level, e.level))

    def unpack(self, x: Vector) -> tuple[Vector, Vector]:
        n = self.n_base
        v = Vector(tuple((k, val) for k, val in x.entries if k < n), x.level)
        e = Vector(tuple((k - n, val) for k, val in x.entries if k >= n), x.level)
        return v, e

    def embed_fiber(self, e: Vector) -> Vector:
        return self.pack(Vector.zero(), e)

    def embed_base(self, v: Vector) -> Vector:
        return self.pack(v, Vector.zero())

    def fiber_part(self, x: Vector) -> Vector:
        return self.unpack(x)[1]

    def base_part(self, x: Vector) -> Vector:
        return self.unpack(x)[0]

    def lift_fiber_operator(self, op: ScOperator) -> ScOperator:
        """Conjugate a fiber operator by the index offset n_base."""
        n = self.n_base
        bands = [BandTerm(t.shift, t.rule.shifted(-n).masked(max(n, n - t.shift)))
                 for t in op.band_terms]
        ranks = [RankOneTerm(self.embed_fiber(t.lam), self.embed_fiber(t.u))
                 for t in op.rank_terms]
        return ScOperator(self.packed_space, self.packed_space, bands, ranks)
