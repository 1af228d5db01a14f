"""Exact geometry of the punctured-torus model of Teichmueller space.

Points live in the upper half-plane; the Teichmueller metric is *half* the
hyperbolic half-plane metric, so translation lengths equal logarithms of
top eigenvalues and the full lattice has critical exponent 2.

A measured foliation is a nonzero pair (v1, v2) up to positive scaling with
extremal length ``|v1 + v2*tau|^2 / Im tau``.  Its projective class is the
boundary point where that quantity degenerates to zero, namely ``-v1/v2``
(``oo`` for v2 = 0).  That coordinate transforms by the same fractional
linear map as points do, which is what makes every boundary computation in
this module consistent; see the README for the derivation.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction

from .circle import INF, BoundaryArc, is_inf, mobius_boundary


class GeometryError(ValueError):
    """Raised when an operation's geometric preconditions fail."""


class NonFillingPair(GeometryError):
    """A pair of foliations with zero intersection number was rejected."""


class NotPseudoAnosov(GeometryError):
    """|trace| <= 2: elliptic or parabolic, no axis and no dilatation."""


# ---------------------------------------------------------------------------
# domain types


@dataclass(frozen=True)
class TeichPoint:
    """Upper half-plane coordinate tau = re + i*im, im > 0.

    Coordinates may be ints/Fractions (kept exact through group actions) or
    floats.
    """

    re: object
    im: object

    def __post_init__(self):
        if not self.im > 0:
            raise GeometryError(f"imaginary part must be positive, got {self.im}")

    @property
    def z(self) -> complex:
        return complex(float(self.re), float(self.im))

    def exact(self) -> "TeichPoint":
        return TeichPoint(Fraction(self.re), Fraction(self.im))


@dataclass(frozen=True)
class Foliation:
    """Nonzero pair (v1, v2) up to positive scaling."""

    v1: object
    v2: object

    def __post_init__(self):
        if self.v1 == 0 and self.v2 == 0:
            raise GeometryError("foliation must be a nonzero pair")

    @property
    def slope(self):
        """Boundary coordinate of the projective class: -v1/v2, oo if v2=0.

        This is the endpoint of the geodesic ray along which the extremal
        length of the class tends to zero.
        """
        if self.v2 == 0:
            return INF
        if isinstance(self.v1, float) or isinstance(self.v2, float):
            return -self.v1 / self.v2
        return Fraction(-self.v1, self.v2)

    @classmethod
    def from_slope(cls, p) -> "Foliation":
        if is_inf(p):
            return cls(1, 0)
        return cls(-p, 1)

    def scaled(self, t) -> "Foliation":
        if not t > 0:
            raise GeometryError("foliation scaling must be positive")
        return Foliation(self.v1 * t, self.v2 * t)


@dataclass(frozen=True)
class MappingClass:
    """Integer 2x2 matrix of determinant one acting on the model."""

    a: int
    b: int
    c: int
    d: int

    def __post_init__(self):
        if self.a * self.d - self.b * self.c != 1:
            raise GeometryError("mapping class must have determinant 1")

    @property
    def tuple(self):
        return (self.a, self.b, self.c, self.d)

    @property
    def trace(self) -> int:
        return self.a + self.d

    def __matmul__(self, other: "MappingClass") -> "MappingClass":
        a, b, c, d = self.tuple
        e, f, g, h = other.tuple
        return MappingClass(a * e + b * g, a * f + b * h, c * e + d * g, c * f + d * h)

    def inverse(self) -> "MappingClass":
        return MappingClass(self.d, -self.b, -self.c, self.a)

    def power(self, n: int) -> "MappingClass":
        if n < 0:
            return self.inverse().power(-n)
        result = MappingClass(1, 0, 0, 1)
        base = self
        while n:
            if n & 1:
                result = result @ base
            base = base @ base
            n >>= 1
        return result

    # -- actions ----------------------------------------------------------

    def act_point(self, x: TeichPoint) -> TeichPoint:
        """(a tau + b) / (c tau + d); exact for exact coordinates."""
        re, im = x.re, x.im
        den = (self.c * re + self.d) ** 2 + (self.c * im) ** 2
        num_re = (self.a * re + self.b) * (self.c * re + self.d) + self.a * self.c * im * im
        if isinstance(re, float) or isinstance(im, float):
            return TeichPoint(num_re / den, im / den)
        return TeichPoint(Fraction(num_re, den), Fraction(im, den))

    def act_foliation(self, f: Foliation) -> Foliation:
        """The linear action making extremal length equivariant.

        Derived from |v1'(c tau + d) + v2'(a tau + b)| = |v1 + v2 tau|.
        """
        return Foliation(self.a * f.v1 - self.b * f.v2, -self.c * f.v1 + self.d * f.v2)

    def act_boundary(self, p):
        return mobius_boundary(self.tuple, p)

    def act_arc(self, arc: BoundaryArc) -> BoundaryArc:
        return arc.image(self.tuple)


IDENTITY = MappingClass(1, 0, 0, 1)
BASEPOINT = TeichPoint(0, 1)


def apply(g: MappingClass, obj):
    """Group action dispatch for points, foliations, arcs and boundary slopes."""
    if isinstance(obj, TeichPoint):
        return g.act_point(obj)
    if isinstance(obj, Foliation):
        return g.act_foliation(obj)
    if isinstance(obj, BoundaryArc):
        return g.act_arc(obj)
    return g.act_boundary(obj)


# ---------------------------------------------------------------------------
# lengths and distances


def ext_length(x: TeichPoint, f: Foliation) -> float:
    """Extremal length |v1 + v2 tau|^2 / Im tau.  Quadratic in the pair."""
    re, im = float(x.re), float(x.im)
    v1, v2 = float(f.v1), float(f.v2)
    return ((v1 + v2 * re) ** 2 + (v2 * im) ** 2) / im


def intersection_number(f: Foliation, g: Foliation):
    """|v1 w2 - v2 w1|; exact for exact pairs."""
    return abs(f.v1 * g.v2 - f.v2 * g.v1)


def cosh2d(x: TeichPoint, y: TeichPoint):
    """cosh of the *hyperbolic* distance (twice the Teichmueller distance).

    Rational, hence exact, whenever both points have rational coordinates;
    this is the quantity the measure equivariance checks compare.
    """
    dre = x.re - y.re
    dim = x.im - y.im
    return 1 + (dre * dre + dim * dim) / (2 * x.im * y.im)


def _acosh(c: float) -> float:
    if c < 1.0:
        c = 1.0
    if c > 1e150:
        return math.log(2.0 * c)
    return math.acosh(c)


def distance(x: TeichPoint, y: TeichPoint) -> float:
    """Teichmueller distance: half the hyperbolic distance."""
    return 0.5 * _acosh(float(cosh2d(x, y)))


def busemann(f: Foliation, x: TeichPoint, y: TeichPoint) -> float:
    """Busemann cocycle at the class of f: (1/2) log Ext_f(x)/Ext_f(y).

    Equals the limit of distance(x, z) - distance(y, z) as z runs out the
    geodesic ray toward ``f.slope``.
    """
    return 0.5 * math.log(ext_length(x, f) / ext_length(y, f))


def busemann_at(p, x: TeichPoint, y: TeichPoint) -> float:
    """Busemann cocycle at a boundary point."""
    return busemann(Foliation.from_slope(p), x, y)


def gromov_product(x: TeichPoint, f: Foliation, g: Foliation) -> float:
    """(1/2) log( Ext_x(f) Ext_x(g) / i(f,g)^2 ).

    Rejects non-filling pairs.  Equals busemann(f,x,u) + busemann(g,x,u)
    for every u on the geodesic joining the two boundary classes.
    """
    inter = float(intersection_number(f, g))
    if inter == 0:
        raise NonFillingPair(f"i({f}, {g}) = 0; Gromov product undefined")
    return 0.5 * math.log(ext_length(x, f) * ext_length(x, g) / (inter * inter))


def gromov_product_points(x: TeichPoint, p, q) -> float:
    return gromov_product(x, Foliation.from_slope(p), Foliation.from_slope(q))


def rho_point_boundary(x: TeichPoint, z: TeichPoint, f: Foliation) -> float:
    """rho_x(z, [f]) = d(x, z) + busemann(f, x, z)."""
    return distance(x, z) + busemann(f, x, z)


# ---------------------------------------------------------------------------
# cross-ratio and translation length


def cross_ratio_multiplier(a1: Foliation, a2: Foliation, b1: Foliation, b2: Foliation):
    """The ratio i(a1,b1) i(a2,b2) / (i(a1,b2) i(a2,b1)); exact for exact
    inputs.  Vanishing denominators are rejected."""
    num = intersection_number(a1, b1) * intersection_number(a2, b2)
    den = intersection_number(a1, b2) * intersection_number(a2, b1)
    if den == 0 or num == 0:
        raise GeometryError("cross-ratio needs all four intersection numbers nonzero")
    if isinstance(num, float) or isinstance(den, float):
        return num / den
    return Fraction(num, den)


def cross_ratio(a1: Foliation, a2: Foliation, b1: Foliation, b2: Foliation) -> float:
    """(1/2) log of the intersection-number ratio.

    Antisymmetric under b1 <-> b2 and invariant under the diagonal group
    action (exactly so in rational arithmetic, see cross_ratio_multiplier).
    """
    return 0.5 * math.log(float(cross_ratio_multiplier(a1, a2, b1, b2)))


def four_distance_sum(
    a1: Foliation,
    a2: Foliation,
    b1: Foliation,
    b2: Foliation,
    depth: float,
    base: TeichPoint = BASEPOINT,
) -> float:
    """d(x1,y1) + d(x2,y2) - d(x1,y2) - d(y1,x2) with x_i, y_i at arclength
    ``depth`` along the rays from ``base`` toward the four classes.

    Converges to twice the cross-ratio; the doubling is the half-metric
    normalization (the unhalved hyperbolic sum converges to 2 tau as well,
    with tau measured in the same units it sums distances in).
    """
    x1 = ray_point(base, a1.slope, depth)
    x2 = ray_point(base, a2.slope, depth)
    y1 = ray_point(base, b1.slope, depth)
    y2 = ray_point(base, b2.slope, depth)
    return distance(x1, y1) + distance(x2, y2) - distance(x1, y2) - distance(y1, x2)


@dataclass(frozen=True)
class AxisData:
    length: float
    attracting: Foliation
    repelling: Foliation


def translation_length(g: MappingClass) -> AxisData:
    """log of the top eigenvalue, with the axis endpoints as foliations.

    The identity length = cross_ratio(plus, minus, beta, g beta) holds for
    any beta off the axis; doubling both sides gives the same statement for
    the unhalved hyperbolic translation distance.
    """
    tr = abs(g.trace)
    if tr <= 2:
        raise NotPseudoAnosov(f"|trace| = {tr} <= 2")
    disc = math.sqrt(float(tr * tr - 4))
    lam = (tr + disc) / 2.0
    plus, minus = _fixed_points(g)
    return AxisData(math.log(lam), Foliation.from_slope(plus), Foliation.from_slope(minus))


def _fixed_points(g: MappingClass):
    """(attracting, repelling) boundary fixed points of a hyperbolic element."""
    a, b, c, d = (float(v) for v in g.tuple)
    tr = a + d
    disc = math.sqrt(tr * tr - 4.0)
    if c == 0.0:
        finite = b / (d - a) if d != a else INF
        if abs(a) > abs(d):
            return INF, finite
        return finite, INF
    # roots of c p^2 + (d - a) p - b = 0; compute the larger-|.| root first
    # to avoid cancellation, then use p1 p2 = -b/c.
    s = (a - d) / (2.0 * c)
    t = disc / (2.0 * abs(c))
    p1 = s + t
    p2 = s - t
    # attracting fixed point has |c p + d| > 1
    if abs(c * p1 + d) > abs(c * p2 + d):
        return p1, p2
    return p2, p1


# ---------------------------------------------------------------------------
# geodesics


class Geodesic:
    """Oriented bi-infinite geodesic with backward endpoint ``eta`` and
    forward endpoint ``zeta``, unit Teichmueller speed.

    Internally a Moebius map sends (eta, zeta) to (0, oo); time zero on the
    normalized axis sits at height 1.
    """

    __slots__ = ("eta", "zeta", "_m", "_minv")

    def __init__(self, eta, zeta):
        if eta == zeta:
            raise GeometryError("geodesic needs distinct endpoints")
        self.eta = eta
        self.zeta = zeta
        e, z = float(eta) if not is_inf(eta) else INF, float(zeta) if not is_inf(zeta) else INF
        if is_inf(z):
            m = (1.0, -e, 0.0, 1.0)
        elif is_inf(e):
            m = (0.0, 1.0, -1.0, z)
        else:
            m = (1.0, -e, 1.0, -z)
            if e < z:
                m = (-m[0], -m[1], m[2], m[3])
        a, b, c, d = m
        det = a * d - b * c
        if det <= 0:
            raise GeometryError("orientation bug in geodesic normalization")
        s = math.sqrt(det)
        self._m = (a / s, b / s, c / s, d / s)
        a, b, c, d = self._m
        self._minv = (d, -b, -c, a)

    def _to_axis(self, x: TeichPoint) -> complex:
        a, b, c, d = self._m
        z = x.z
        return (a * z + b) / (c * z + d)

    def point(self, t: float) -> TeichPoint:
        """Point at time t (t -> +oo approaches the forward endpoint)."""
        a, b, c, d = self._minv
        w = complex(0.0, math.exp(2.0 * t))
        z = (a * w + b) / (c * w + d)
        return TeichPoint(z.real, z.imag)

    def time_of(self, x: TeichPoint) -> float:
        """Time of the point on the axis nearest to x."""
        w = self._to_axis(x)
        return 0.5 * math.log(abs(w))

    def closest_point(self, x: TeichPoint) -> TeichPoint:
        return self.point(self.time_of(x))

    def distance_from(self, x: TeichPoint) -> float:
        return distance(x, self.closest_point(x))

    def reversed(self) -> "Geodesic":
        return Geodesic(self.zeta, self.eta)

    def translate(self, g: MappingClass) -> "Geodesic":
        return Geodesic(g.act_boundary(self.eta), g.act_boundary(self.zeta))


def ray_point(x: TeichPoint, p, s: float) -> TeichPoint:
    """Point at arclength s along the geodesic ray from x toward boundary p."""
    if is_inf(p):
        return TeichPoint(float(x.re), float(x.im) * math.exp(2.0 * s))
    geo = _geodesic_through(x, p)
    t0 = geo.time_of(x)
    return geo.point(t0 + s)


def _geodesic_through(x: TeichPoint, p) -> Geodesic:
    """Oriented geodesic through interior point x with forward endpoint p."""
    re, im = float(x.re), float(x.im)
    if is_inf(p):
        return Geodesic(re, INF)
    p = float(p)
    if abs(p - re) < 1e-300:
        return Geodesic(INF, p)
    # circle centered on the real axis through both x and p
    c = (re * re + im * im - p * p) / (2.0 * (re - p))
    r = math.hypot(re - c, im)
    e1, e2 = c - r, c + r
    back = e1 if abs(e2 - p) < abs(e1 - p) else e2
    return Geodesic(back, p)


def pr(x: TeichPoint, y: TeichPoint):
    """Forward endpoint of the geodesic from x through y (a boundary slope)."""
    xr, xi = float(x.re), float(x.im)
    yr, yi = float(y.re), float(y.im)
    if xr == yr and xi == yi:
        raise GeometryError("projection needs two distinct points")
    if abs(xr - yr) < 1e-14 * max(1.0, abs(xr)):
        return INF if yi > xi else xr
    c = (yr * yr + yi * yi - xr * xr - xi * xi) / (2.0 * (yr - xr))
    r = math.hypot(xr - c, xi)
    # moving from x to y, the angle atan2(im, re - c) decreases iff re grows
    return c + r if yr > xr else c - r


# ---------------------------------------------------------------------------
# shadows and sectors


def _ball_disk(x: TeichPoint, r: float):
    """Euclidean (center, radius) of the Teichmueller ball B(x, r)."""
    rh = 2.0 * r  # hyperbolic radius
    cx, cy = float(x.re), float(x.im)
    return (cx, cy * math.cosh(rh)), cy * math.sinh(rh)


def shadow_arcs(a: TeichPoint, b: TeichPoint, r: float) -> tuple[BoundaryArc, BoundaryArc]:
    """(outer, inner) shadow arcs of B(b, r) seen from B(a, r).

    outer = union over w in B(a,r) of pr_w(B(b,r)); inner = intersection.
    Requires distance(a, b) > 2r.  The computation happens in a normalized
    frame where both balls are centered on the imaginary axis: there the
    common tangent geodesics of the two disks solve in closed form, and the
    separating ones bound the union while the non-separating ones bound the
    intersection.
    """
    if distance(a, b) <= 2.0 * r:
        raise GeometryError("shadow needs distance(a, b) > 2r")
    geo = _geodesic_through(a, pr(a, b))
    h1 = math.exp(2.0 * geo.time_of(a))
    h2 = math.exp(2.0 * geo.time_of(b))
    rh = 2.0 * r  # hyperbolic ball radius
    y1, s1 = h1 * math.cosh(rh), h1 * math.sinh(rh)
    y2, s2 = h2 * math.cosh(rh), h2 * math.sinh(rh)

    def tangent_endpoints(sg1: float, sg2: float):
        # tangency: sqrt(c^2 + y_i^2) = R - sg_i s_i
        den = 2.0 * (sg2 * s2 - sg1 * s1)
        radius = (h1 * h1 - h2 * h2) / den
        if radius <= 0:
            return None
        lo = radius - sg1 * s1 - y1
        hi = radius - sg1 * s1 + y1
        if lo < 0:
            return None
        c = math.sqrt(lo * hi)
        # forward endpoint (toward the b-ball) is the one away from zero
        return (c + radius, -(c + radius))

    inner = tangent_endpoints(1.0, -1.0)  # separating tangents
    outer = tangent_endpoints(-1.0, -1.0)  # both balls outside
    if inner is None or outer is None:
        raise GeometryError("tangent construction degenerate; balls too close?")
    minv = geo._minv
    center = pr(a, b)
    big = _arc_between(
        mobius_boundary(minv, inner[0]), mobius_boundary(minv, inner[1]), center
    )
    small = _arc_between(
        mobius_boundary(minv, outer[0]), mobius_boundary(minv, outer[1]), center
    )
    return big, small


def _arc_between(e1, e2, interior):
    arc = BoundaryArc(e1, e2)
    if arc.contains(interior):
        return arc
    return BoundaryArc(e2, e1)


@dataclass(frozen=True)
class SectorFlags:
    sect: bool
    c_plus: bool
    c_minus: bool


def sector_membership(x: TeichPoint, U: BoundaryArc, y: TeichPoint, r: float) -> SectorFlags:
    """Membership of y in Sect_x(U) and in the inner/outer sector cones.

    C+ collects points whose r-shadow from B(x,r) meets U, C- those whose
    r-shadow is contained in U; both reduce to shadow-arc tests.
    """
    full = U.width() > 2.0 * math.pi - 1e-9
    in_sect = U.contains(pr(x, y))
    if full:
        return SectorFlags(in_sect, True, True)
    if distance(x, y) <= 2.0 * r:
        return SectorFlags(in_sect, True, False)
    outer, _ = shadow_arcs(x, y, r)
    c_plus = outer.intersects(U) or U.contains_arc(outer)
    c_minus = U.contains_arc(outer)
    return SectorFlags(in_sect, c_plus, c_minus)


def time_in_sector(
    x: TeichPoint,
    U: BoundaryArc,
    geo: Geodesic,
    t_lo: float,
    t_hi: float,
    step: float = 0.01,
) -> float:
    """Lebesgue measure of {t in [t_lo, t_hi]: pr_x(geo(t)) in U}, by
    midpoint sampling at the given step."""
    n = max(1, int(math.ceil((t_hi - t_lo) / step)))
    dt = (t_hi - t_lo) / n
    total = 0.0
    for k in range(n):
        z = geo.point(t_lo + (k + 0.5) * dt)
        if U.contains(pr(x, z)):
            total += dt
    return total
