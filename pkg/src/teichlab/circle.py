"""Exact arithmetic on the boundary circle of the upper half-plane.

The boundary is the projective line R u {oo} with the cyclic orientation of
increasing coordinate (wrapping through oo).  Points are stored as Fractions,
ints or floats; ``math.inf`` is the point at infinity.  Orientation predicates
are determinant based, so they are exact whenever the inputs are exact, which
is what the ping-pong certificate checks rely on.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Sequence

INF = math.inf


def is_inf(p) -> bool:
    return p == INF or p == -INF


def proj(p):
    """Projective representative (num, den) with den >= 0 and (1, 0) for oo."""
    if is_inf(p):
        return (1, 0)
    return (p, 1)


def _det(u, v):
    return u[0] * v[1] - u[1] * v[0]


def cyclic_sign(a, b, c) -> int:
    """+1 if (a, b, c) is positively oriented (increasing coordinate), -1 if
    negatively, 0 if two of the points coincide."""
    u, v, w = proj(a), proj(b), proj(c)
    d = _det(u, v) * _det(v, w) * _det(w, u)
    if d > 0:
        return 1
    if d < 0:
        return -1
    return 0


def angle_of(p) -> float:
    """Angle coordinate in (-pi, pi], monotone in p, with oo at pi."""
    if is_inf(p):
        return math.pi
    return 2.0 * math.atan(float(p))


def point_of_angle(theta: float):
    """Inverse of :func:`angle_of` (mod 2*pi)."""
    theta = math.remainder(theta, 2.0 * math.pi)
    if abs(theta - math.pi) < 1e-15 or abs(theta + math.pi) < 1e-15:
        return INF
    return math.tan(theta / 2.0)


def mobius_boundary(mat, p):
    """Fractional-linear action of an integer/rational matrix on the circle.

    ``mat`` is (a, b, c, d) acting by p -> (a p + b) / (c p + d).  Exact when
    p is exact.
    """
    a, b, c, d = mat
    if is_inf(p):
        if c == 0:
            return INF
        return Fraction(a, c) if _all_int(a, c) else a / c
    num = a * p + b
    den = c * p + d
    if den == 0:
        return INF
    if isinstance(p, float):
        return num / den
    return Fraction(num, den) if _all_int(num, den) else num / den


def _all_int(*xs) -> bool:
    return all(isinstance(x, int) for x in xs)


@dataclass(frozen=True)
class BoundaryArc:
    """Half-open circular arc [lo, hi) running counterclockwise (increasing
    boundary coordinate, wrapping through oo)."""

    lo: object
    hi: object

    def __post_init__(self):
        if self.lo == self.hi:
            raise ValueError("arc endpoints must be distinct")

    def contains(self, p) -> bool:
        if p == self.lo:
            return True
        if p == self.hi:
            return False
        return cyclic_sign(self.lo, p, self.hi) > 0

    __contains__ = contains

    def contains_arc(self, other: "BoundaryArc", strict: bool = False) -> bool:
        """Whether other (with its closure if strict) sits inside self."""
        if strict:
            return (
                cyclic_sign(self.lo, other.lo, self.hi) > 0
                and cyclic_sign(self.lo, other.hi, self.hi) > 0
                and not other.contains(self.lo)
                and not other.contains(self.hi)
            )
        return self.contains(other.lo) and (
            other.hi == self.hi or cyclic_sign(self.lo, other.hi, self.hi) > 0
        )

    def intersects(self, other: "BoundaryArc") -> bool:
        return (
            self.contains(other.lo)
            or other.contains(self.lo)
            or self.contains(other.hi) and other.hi != self.hi
        )

    def closure_intersects(self, other: "BoundaryArc") -> bool:
        if self.intersects(other):
            return True
        return self.hi == other.lo or other.hi == self.lo

    def complement(self) -> "BoundaryArc":
        return BoundaryArc(self.hi, self.lo)

    def width(self) -> float:
        w = math.remainder(angle_of(self.hi) - angle_of(self.lo), 2.0 * math.pi)
        if w <= 0:
            w += 2.0 * math.pi
        return w

    def midpoint(self):
        return point_of_angle(angle_of(self.lo) + self.width() / 2.0)

    def split(self, n: int) -> list["BoundaryArc"]:
        """n angle-equal sub-arcs (floats) covering self."""
        a0 = angle_of(self.lo)
        step = self.width() / n
        cuts = [self.lo] + [point_of_angle(a0 + k * step) for k in range(1, n)] + [self.hi]
        return [BoundaryArc(cuts[k], cuts[k + 1]) for k in range(n)]

    def image(self, mat) -> "BoundaryArc":
        """Image under an orientation-preserving fractional-linear map."""
        return BoundaryArc(mobius_boundary(mat, self.lo), mobius_boundary(mat, self.hi))


def uniform_partition(n: int, offset: float = 0.0) -> list[BoundaryArc]:
    """Partition of the full circle into n angle-equal half-open arcs."""
    step = 2.0 * math.pi / n
    cuts = [point_of_angle(-math.pi + offset + k * step) for k in range(n)]
    return [BoundaryArc(cuts[k], cuts[(k + 1) % n]) for k in range(n)]


def refine_partition(arcs: Sequence[BoundaryArc], factor: int = 2) -> list[BoundaryArc]:
    out: list[BoundaryArc] = []
    for arc in arcs:
        out.extend(arc.split(factor))
    return out


def partition_index(arcs: Sequence[BoundaryArc], p) -> int:
    """Index of the arc containing p, or -1."""
    for k, arc in enumerate(arcs):
        if arc.contains(p):
            return k
    return -1


def is_partition(arcs: Iterable[BoundaryArc]) -> bool:
    """Check the arcs tile the circle exactly once (by total width and
    pairwise disjointness of a sample of endpoints)."""
    arcs = list(arcs)
    total = sum(a.width() for a in arcs)
    if abs(total - 2.0 * math.pi) > 1e-9 * max(1, len(arcs)):
        return False
    for i, a in enumerate(arcs):
        for j, b in enumerate(arcs):
            if i != j and a.contains(b.lo) and b.lo != a.lo and a.intersects(b) and b.intersects(a):
                if a.contains(b.midpoint()) and b.contains(a.midpoint()):
                    return False
    return True
