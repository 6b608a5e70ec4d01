"""Concrete scale-space models with exactly computable level norms.

The sequence model puts the weight e^(delta*m*k) on the k-th basis vector at
level m, so the inclusion of level m+1 into level m is the diagonal compact
operator with entries e^(-delta*k).  Every vector handled by the toolkit has
finite support and therefore lies on every level; the smooth core is
represented faithfully rather than approximated.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Mapping, Union

from .defaults import TAU_ZERO

Scalar = Union[int, Fraction, float]


def as_scalar(value) -> Scalar:
    """Normalize a number or a "p/q" string to Fraction (exact) or float."""
    if isinstance(value, bool):
        raise TypeError("booleans are not scalars")
    if isinstance(value, int):
        return Fraction(value)
    if isinstance(value, (Fraction, float)):
        return value
    if isinstance(value, str):
        return Fraction(value)
    raise TypeError(f"cannot interpret {value!r} as a scalar")


def is_exact(value: Scalar) -> bool:
    return isinstance(value, (int, Fraction))


def scalar_abs(value: Scalar) -> Scalar:
    return -value if value < 0 else value


class SpaceMismatchError(ValueError):
    """A vector was fed to a space or operator it does not belong to."""


class NotApplicableError(ValueError):
    """The requested quantity is undefined for this kind of space."""


@dataclass(frozen=True)
class Vector:
    """Finite-support vector: sorted (index, value) pairs plus a declared level.

    The declared level is bookkeeping only; finite support makes every level
    norm finite automatically.
    """

    entries: tuple[tuple[int, Scalar], ...] = ()
    level: int = 0

    @staticmethod
    def make(data: Mapping[int, Scalar] | Iterable[tuple[int, Scalar]] | Iterable[Scalar],
             level: int = 0) -> "Vector":
        if isinstance(data, Mapping):
            items = data.items()
        else:
            data = list(data)
            if data and not isinstance(data[0], tuple):
                items = enumerate(data)
            else:
                items = data
        acc: dict[int, Scalar] = {}
        for k, v in items:
            if k < 0:
                raise ValueError("indices must be nonnegative")
            v = as_scalar(v)
            acc[k] = acc.get(k, Fraction(0)) + v
        entries = tuple(sorted((k, v) for k, v in acc.items() if v != 0))
        return Vector(entries, level)

    @staticmethod
    def basis(k: int, coeff: Scalar = 1, level: int = 0) -> "Vector":
        return Vector.make({k: coeff}, level)

    @staticmethod
    def zero(level: int = 0) -> "Vector":
        return Vector((), level)

    def __getitem__(self, k: int) -> Scalar:
        for i, v in self.entries:
            if i == k:
                return v
            if i > k:
                break
        return Fraction(0)

    @property
    def support(self) -> tuple[int, ...]:
        return tuple(k for k, _ in self.entries)

    def top(self) -> int:
        """Largest index with a nonzero entry, or -1 for the zero vector."""
        return self.entries[-1][0] if self.entries else -1

    def is_zero(self, tol: float = 0.0) -> bool:
        if tol == 0.0:
            return not self.entries
        return all(abs(float(v)) <= tol for _, v in self.entries)

    @property
    def exact(self) -> bool:
        return all(is_exact(v) for _, v in self.entries)

    def __add__(self, other: "Vector") -> "Vector":
        acc = dict(self.entries)
        for k, v in other.entries:
            acc[k] = acc.get(k, Fraction(0)) + v
        entries = tuple(sorted((k, v) for k, v in acc.items() if v != 0))
        return Vector(entries, min(self.level, other.level))

    def __sub__(self, other: "Vector") -> "Vector":
        return self + other.scale(-1)

    def __neg__(self) -> "Vector":
        return self.scale(-1)

    def scale(self, c: Scalar) -> "Vector":
        c = as_scalar(c)
        if c == 0:
            return Vector((), self.level)
        return Vector(tuple((k, c * v) for k, v in self.entries), self.level)

    def inner(self, other: "Vector") -> Scalar:
        """Plain level-0 pairing sum_k x_k * y_k."""
        small, big = (self, other) if len(self.entries) <= len(other.entries) else (other, self)
        total: Scalar = Fraction(0)
        for k, v in small.entries:
            w = big[k]
            if w != 0:
                total = total + v * w
        return total

    def at_level(self, level: int) -> "Vector":
        return Vector(self.entries, level)

    def truncate(self, n: int) -> "Vector":
        """Keep only the entries with index < n."""
        return Vector(tuple((k, v) for k, v in self.entries if k < n), self.level)

    def to_dict(self) -> dict[int, Scalar]:
        return dict(self.entries)

    def __repr__(self) -> str:
        body = ", ".join(f"{k}: {v}" for k, v in self.entries) or "0"
        return f"Vector({{{body}}}, level={self.level})"


@dataclass(frozen=True)
class PairVector:
    """Point of a direct sum: one component per factor."""

    left: "Vector | PairVector"
    right: "Vector | PairVector"

    def __add__(self, other: "PairVector") -> "PairVector":
        return PairVector(self.left + other.left, self.right + other.right)

    def __sub__(self, other: "PairVector") -> "PairVector":
        return PairVector(self.left - other.left, self.right - other.right)

    def __neg__(self) -> "PairVector":
        return self.scale(-1)

    def scale(self, c: Scalar) -> "PairVector":
        return PairVector(self.left.scale(c), self.right.scale(c))

    def inner(self, other: "PairVector") -> Scalar:
        return self.left.inner(other.left) + self.right.inner(other.right)

    def is_zero(self, tol: float = 0.0) -> bool:
        return self.left.is_zero(tol) and self.right.is_zero(tol)

    @property
    def exact(self) -> bool:
        return self.left.exact and self.right.exact


Point = Union[Vector, PairVector]


class ScaleSpace:
    """Base interface: a graded family of norms on one vector space."""

    def level_norm(self, x: Point, m: int) -> float:
        raise NotImplementedError

    def contains(self, x: Point) -> bool:
        raise NotImplementedError

    def zero(self) -> Point:
        return Vector.zero()

    def describe(self) -> str:
        raise NotImplementedError


@dataclass(frozen=True)
class SequenceSpace(ScaleSpace):
    """Weighted sequence model: level-m norm of e_k is e^(delta*m*k)."""

    delta: float = 1.0

    def weight(self, m: int, k: int) -> float:
        return math.exp(float(self.delta) * m * k)

    def level_norm(self, x: Vector, m: int) -> float:
        if not isinstance(x, Vector):
            raise SpaceMismatchError("sequence space expects a plain Vector")
        if m < 0:
            raise ValueError("levels are nonnegative")
        return math.sqrt(sum(float(v) ** 2 * math.exp(2.0 * float(self.delta) * m * k)
                             for k, v in x.entries))

    def contains(self, x: Point) -> bool:
        return isinstance(x, Vector)

    def embedding_singular_values(self, count: int) -> list[float]:
        """First `count` singular values of the inclusion level m+1 -> level m.

        In the orthonormal bases of the two levels the inclusion is diagonal
        with entries e^(-delta*k), independently of m.
        """
        return [math.exp(-float(self.delta) * k) for k in range(count)]

    def singular_count_above(self, eps: float) -> int:
        """Exact count of embedding singular values strictly above eps."""
        if not 0 < eps < 1:
            raise ValueError("eps must lie in (0, 1)")
        # e^(-delta*k) > eps iff k < ln(1/eps)/delta
        bound = math.log(1.0 / eps) / float(self.delta)
        count = int(math.floor(bound))
        if math.exp(-float(self.delta) * count) > eps:
            count += 1
        return count

    def describe(self) -> str:
        return f"sequence(delta={self.delta})"


@dataclass(frozen=True)
class FiniteSpace(ScaleSpace):
    """Finite-dimensional space; the only scale structure is the constant one."""

    dim: int

    def level_norm(self, x: Vector, m: int) -> float:
        if not self.contains(x):
            raise SpaceMismatchError(f"vector support exceeds dimension {self.dim}")
        if m < 0:
            raise ValueError("levels are nonnegative")
        return math.sqrt(sum(float(v) ** 2 for _, v in x.entries))

    def contains(self, x: Point) -> bool:
        return isinstance(x, Vector) and (x.top() < self.dim)

    def describe(self) -> str:
        return f"finite({self.dim})"


@dataclass(frozen=True)
class DirectSum(ScaleSpace):
    """Levelwise product: level m of the sum is the pair of level-m parts."""

    left: ScaleSpace
    right: ScaleSpace

    def level_norm(self, x: PairVector, m: int) -> float:
        if not isinstance(x, PairVector):
            raise SpaceMismatchError("direct sum expects a PairVector")
        a = self.left.level_norm(x.left, m)
        b = self.right.level_norm(x.right, m)
        return math.hypot(a, b)

    def contains(self, x: Point) -> bool:
        return (isinstance(x, PairVector) and self.left.contains(x.left)
                and self.right.contains(x.right))

    def zero(self) -> PairVector:
        return PairVector(self.left.zero(), self.right.zero())

    def describe(self) -> str:
        return f"({self.left.describe()} (+) {self.right.describe()})"


def direct_sum(a: ScaleSpace, b: ScaleSpace) -> DirectSum:
    return DirectSum(a, b)


@dataclass(frozen=True)
class QuadrantSpace(ScaleSpace):
    """Ambient space R^n (+) Q holding a partial quadrant.

    Coordinates 0..n-1 are the corner directions carrying the flat norm; the
    complement occupies the remaining indices, reindexed from zero.
    """

    corner_dim: int
    complement: ScaleSpace

    def split(self, w: Vector) -> tuple[Vector, Vector]:
        n = self.corner_dim
        corner = Vector(tuple((k, v) for k, v in w.entries if k < n))
        rest = Vector(tuple((k - n, v) for k, v in w.entries if k >= n), w.level)
        return corner, rest

    def join(self, corner: Vector, rest: Vector, level: int = 0) -> Vector:
        n = self.corner_dim
        if corner.top() >= n:
            raise SpaceMismatchError("corner part exceeds corner dimension")
        entries = tuple(corner.entries) + tuple((k + n, v) for k, v in rest.entries)
        return Vector(tuple(sorted(entries)), level)

    def level_norm(self, w: Vector, m: int) -> float:
        corner, rest = self.split(w)
        flat = math.sqrt(sum(float(v) ** 2 for _, v in corner.entries))
        return math.hypot(flat, self.complement.level_norm(rest, m))

    def contains(self, x: Point) -> bool:
        if not isinstance(x, Vector):
            return False
        _, rest = self.split(x)
        return self.complement.contains(rest)

    @property
    def total_dim(self) -> int | None:
        """Total ambient dimension when the complement is finite, else None."""
        if isinstance(self.complement, FiniteSpace):
            return self.corner_dim + self.complement.dim
        return None

    def describe(self) -> str:
        return f"R^{self.corner_dim} (+) {self.complement.describe()}"


@dataclass(frozen=True)
class PartialQuadrant:
    """Region of a QuadrantSpace where the first n coordinates are >= 0."""

    space: QuadrantSpace
    tau_zero: float = TAU_ZERO

    @property
    def corner_dim(self) -> int:
        return self.space.corner_dim

    def contains(self, w: Vector) -> tuple[bool, list[int]]:
        """Membership up to -tau_zero, plus the indices of active faces."""
        if not self.space.contains(w):
            raise SpaceMismatchError("point does not live in R^n (+) Q")
        inside = True
        active = []
        for j in range(self.corner_dim):
            value = float(w[j])
            if value < -self.tau_zero:
                inside = False
            if abs(value) <= self.tau_zero:
                active.append(j)
        return inside, active


def quadrant(corner_dim: int, complement: ScaleSpace | None = None,
             tau_zero: float = TAU_ZERO) -> PartialQuadrant:
    complement = complement if complement is not None else FiniteSpace(0)
    return PartialQuadrant(QuadrantSpace(corner_dim, complement), tau_zero)


def level_norm(space: ScaleSpace, x: Point, m: int) -> float:
    """Norm of x at level m; exact weight formula for the sequence model."""
    return space.level_norm(x, m)


def embedding_spectrum(space: ScaleSpace, m: int, count: int) -> list[float]:
    """Leading singular values of the inclusion of level m+1 into level m."""
    if isinstance(space, SequenceSpace):
        return space.embedding_singular_values(count)
    if isinstance(space, FiniteSpace):
        raise NotApplicableError(
            "finite-dimensional levels coincide; the embedding is the identity")
    raise NotApplicableError(f"no embedding spectrum for {space.describe()}")


def quadrant_contains(q: PartialQuadrant, w: Vector) -> tuple[bool, list[int]]:
    return q.contains(w)


def tail_norm(space: SequenceSpace, x: Vector, n: int, m: int) -> float:
    """Level-m norm of the tail of x beyond index n (truncation error)."""
    tail = Vector(tuple((k, v) for k, v in x.entries if k >= n))
    return space.level_norm(tail, m)
