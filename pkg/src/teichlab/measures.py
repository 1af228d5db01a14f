"""Orbit-weighted boundary measures and the conformal-density diagnostics.

The finite-radius approximant at basepoint x is the probability measure

    f_s(x,x)^{-1} * sum over the ball of exp(-s d(x, gamma x)) * dirac(gamma x)

with each atom also carrying the boundary slope of pr_x(gamma x).  Measures
at a second basepoint y reuse the same orbit ball and the same normalizer,
so the arc-mass ratios converge to the conformal factor exp(s * beta(x, y))
as the truncation deepens.  Atom weights are keyed by the exact rational
cosh(2 d), which is what makes the equivariance checks machine-exact.
"""

from __future__ import annotations

import csv
import math
import warnings
from dataclasses import dataclass
from fractions import Fraction
from typing import Optional, Sequence

from .circle import BoundaryArc, partition_index
from .geometry import (
    GeometryError,
    MappingClass,
    TeichPoint,
    busemann_at,
    cosh2d,
    distance,
    pr,
)
from .schottky import OrbitPoint, SchottkyGroup, Word, enumerate_ball


@dataclass(frozen=True)
class Atom:
    word: Word
    slope: float
    dist: float
    weight: float
    cosh2d: Fraction  # exact expression behind `dist` and `weight`
    point: TeichPoint  # orbit point, exact when the basepoint is exact


@dataclass
class AtomicMeasure:
    """Finite approximant measure; atoms listed in canonical word order."""

    atoms: list
    basepoint: TeichPoint
    exponent: float
    cutoff: float
    normalizer: float

    @property
    def total_mass(self) -> float:
        return sum(a.weight for a in self.atoms)

    def mass_within(self, dist: float) -> float:
        return sum(a.weight for a in self.atoms if a.dist <= dist)

    def pushforward(self, g: MappingClass) -> "AtomicMeasure":
        """The image measure g * nu: atoms moved by g, weights untouched.

        The atom identity is its orbit point (exact coordinates), so images
        can be matched against an independently rebuilt measure.
        """
        gx = g.act_point(self.basepoint)
        out = [
            Atom(
                a.word,
                g.act_boundary(a.slope) if not math.isnan(a.slope) else math.nan,
                a.dist,
                a.weight,
                a.cosh2d,
                g.act_point(a.point),
            )
            for a in self.atoms
        ]
        return AtomicMeasure(out, gx, self.exponent, self.cutoff, self.normalizer)


def ps_approximant(
    group: SchottkyGroup,
    x: TeichPoint,
    s: float,
    cutoff: float,
    estimated_h: Optional[float] = None,
    ball: Optional[Sequence[OrbitPoint]] = None,
    weight_base: Optional[TeichPoint] = None,
) -> AtomicMeasure:
    """Truncated orbit measure at basepoint x with decay exponent s.

    ``ball`` may be shared between calls; it must be the radius-``cutoff``
    ball around the *orbit* of x.  ``weight_base`` re-weights the same atom
    set from a different basepoint (the conformal-family construction used
    by the conformality check); the normalizer always comes from x so the
    family transforms by exp(s beta) rather than being re-normalized.
    """
    if estimated_h is not None and s <= estimated_h:
        warnings.warn(
            f"s={s} at or below estimated exponent {estimated_h}: series "
            "diverges and the truncation dominates",
            stacklevel=2,
        )
    if ball is None:
        ball = enumerate_ball(group, x, x, cutoff)
    base = weight_base if weight_base is not None else x
    x_exact = TeichPoint(Fraction(x.re), Fraction(x.im))
    base_exact = TeichPoint(Fraction(base.re), Fraction(base.im))
    atoms = []
    norm = 0.0
    for op in ball:
        norm += math.exp(-s * op.dist)
    for op in ball:
        pt_exact = op.matrix.act_point(x_exact)
        c2 = Fraction(cosh2d(base_exact, pt_exact))
        if op.word.is_identity:
            slope = math.nan
        else:
            slope = pr(x, op.point)
        dist_b = op.dist if weight_base is None else _dist(base, op.point)
        weight = math.exp(-s * dist_b) / norm
        atoms.append(Atom(op.word, slope, dist_b, weight, c2, pt_exact))
    return AtomicMeasure(atoms, base, s, cutoff, norm)


def _dist(a: TeichPoint, b: TeichPoint) -> float:
    return distance(a, b)


@dataclass
class ArcMeasure:
    """Masses of a circular partition; the binning of an atomic measure."""

    partition: list
    masses: list
    dropped_mass: float = 0.0

    @property
    def total_mass(self) -> float:
        return sum(self.masses)

    def mass_of(self, arc_index: int) -> float:
        return self.masses[arc_index]

    def to_csv(self, path: str, atom_counts: Optional[list] = None) -> None:
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["arc_lo", "arc_hi", "mass", "atom_count"])
            counts = atom_counts or [0] * len(self.partition)
            for arc, mass, cnt in zip(self.partition, self.masses, counts):
                writer.writerow([repr(float(arc.lo)), repr(float(arc.hi)), repr(mass), cnt])


def bin_to_arcs(
    measure: AtomicMeasure,
    partition: Sequence[BoundaryArc],
    min_distance: float = 1e-9,
) -> ArcMeasure:
    """Project atoms to their arcs; nearby atoms (below min_distance) are
    dropped and their mass reported on the result."""
    masses = [0.0] * len(partition)
    counts = [0] * len(partition)
    dropped = 0.0
    for atom in measure.atoms:
        if atom.word.is_identity or atom.dist < min_distance:
            dropped += atom.weight
            continue
        k = partition_index(partition, atom.slope)
        if k < 0:
            dropped += atom.weight
            continue
        masses[k] += atom.weight
        counts[k] += 1
    out = ArcMeasure(list(partition), masses, dropped)
    out.atom_counts = counts
    return out


def median_refine(
    measure: AtomicMeasure,
    partition: Sequence[BoundaryArc],
    min_distance: float = 0.0,
) -> list[BoundaryArc]:
    """Split every arc at its atom-mass median (angle midpoint when the arc
    holds at most one atom).

    This is the dyadic refinement the no-atom diagnostic monitors: for a
    diffuse measure the maximum arc mass keeps halving, while a point mass
    would pin it at the atom's weight.  Angle-equal splitting stalls on the
    cylinder structure of the limit set instead (plateaus measured from 8
    to 128 arcs), so it cannot see the difference.
    """
    from .circle import angle_of, point_of_angle

    out = []
    for arc in partition:
        entries = []
        for a in measure.atoms:
            if a.word.is_identity or a.dist < min_distance:
                continue
            if not arc.contains(a.slope):
                continue
            rel = (angle_of(a.slope) - angle_of(arc.lo)) % (2.0 * math.pi)
            entries.append((rel, a.weight))
        entries.sort()
        width = arc.width()
        if len(entries) < 2:
            split_rel = width / 2.0
        else:
            total = sum(w for _, w in entries)
            acc = 0.0
            split_rel = None
            for k, (rel, w) in enumerate(entries):
                acc += w
                if acc >= total / 2.0:
                    nxt = entries[k + 1][0] if k + 1 < len(entries) else width
                    split_rel = min((rel + nxt) / 2.0, width * (1 - 1e-9))
                    break
            if split_rel is None or split_rel <= 0.0:
                split_rel = width / 2.0
        split = point_of_angle(angle_of(arc.lo) + split_rel)
        out.append(BoundaryArc(arc.lo, split))
        out.append(BoundaryArc(split, arc.hi))
    return out


def conformality_check(
    group: SchottkyGroup,
    x: TeichPoint,
    y: TeichPoint,
    s: float,
    partition: Sequence[BoundaryArc],
    cutoff: float,
    mass_floor_ratio: float = 1e-4,
    ball: Optional[Sequence[OrbitPoint]] = None,
) -> float:
    """Worst relative deviation of arc-mass ratios from the conformal factor.

    Compares mass_y(A) / mass_x(A) with exp(s * beta_mid(A)(x, y)) over arcs
    holding at least ``mass_floor_ratio`` of the total mass.
    """
    if ball is None:
        ball = enumerate_ball(group, x, x, cutoff)
    nu_x = ps_approximant(group, x, s, cutoff, ball=ball)
    nu_y = ps_approximant(group, x, s, cutoff, ball=ball, weight_base=y)
    mx = bin_to_arcs(nu_x, partition)
    my = bin_to_arcs(nu_y, partition)
    floor = mass_floor_ratio * mx.total_mass
    worst = None
    for k, arc in enumerate(partition):
        if mx.masses[k] <= floor or my.masses[k] <= 0:
            continue
        model = math.exp(s * busemann_at(arc.midpoint(), x, y))
        dev = abs(my.masses[k] / mx.masses[k] / model - 1.0)
        worst = dev if worst is None else max(worst, dev)
    if worst is None:
        raise GeometryError("all arcs below the mass floor")
    return worst


def equivariance_exact(
    group: SchottkyGroup, x: TeichPoint, s: float, cutoff: float, g: MappingClass
) -> bool:
    """g * nu_{x,s} == nu_{gx,s} atom for atom.

    Atoms are matched by exact orbit-point coordinates; the weight behind
    each is compared as the exact rational cosh(2 d) expression, so an
    agreement here is machine-exact, not a tolerance."""
    nu_x = ps_approximant(group, x, s, cutoff)
    pushed = nu_x.pushforward(g)
    nu_gx = ps_approximant(group, g.act_point(x), s, cutoff)
    if len(pushed.atoms) != len(nu_gx.atoms):
        return False

    def key(atom):
        return (atom.point.re, atom.point.im)

    lhs = {key(a): a.cosh2d for a in pushed.atoms}
    rhs = {key(a): a.cosh2d for a in nu_gx.atoms}
    return lhs == rhs


# ---------------------------------------------------------------------------
# slowly growing Patterson weight


@dataclass
class SullivanWeight:
    """Piecewise log-linear nondecreasing weight with decaying slopes.

    The slow-growth property this realizes: for each eps > 0 there is a
    threshold t0(eps) past which every growth window satisfies
    h(u + t) <= exp(eps * t) * h(u); with slopes eventually zero the
    threshold always lies inside the table's range.
    """

    knots: list  # (t_k, log h(t_k), slope eps_k on [t_k, t_{k+1}))

    def log_value(self, t: float) -> float:
        if t <= self.knots[0][0]:
            return self.knots[0][1]
        for t0, logh, eps in reversed(self.knots):
            if t >= t0:
                return logh + eps * (t - t0)
        return self.knots[0][1]

    def value(self, t: float) -> float:
        return math.exp(self.log_value(t))

    def slow_growth_threshold(self, eps: float) -> float:
        """Smallest knot time from which all later slopes are <= eps."""
        t0 = self.knots[-1][0] if self.knots[-1][2] > eps else None
        for t_k, _, slope in reversed(self.knots):
            if slope <= eps:
                t0 = t_k
            else:
                break
        if t0 is None:
            return math.inf
        return t0

    def slow_growth_audit(self, eps: float, t_max: float, step: float = 0.5):
        """(threshold, worst ratio): max of h(u+t)/(exp(eps t) h(u)) over
        sampled windows starting at u >= threshold; <= 1 by construction."""
        t0 = self.slow_growth_threshold(eps)
        worst = 0.0
        u = t0
        while u <= t_max:
            t = step
            while u + t <= t_max:
                ratio = math.exp(self.log_value(u + t) - eps * t - self.log_value(u))
                worst = max(worst, ratio)
                t += step
            u += step
        return t0, worst


def sullivan_weight(distance_spectrum: Sequence[float], delta: float) -> SullivanWeight:
    """Slowly growing weight making the delta-weighted sums of the sample
    spectrum diverge on its own scale.

    "Diverge on the sample scale" is operationalized by the divergence
    score (late-range weighted mass over early-range weighted mass): the
    constructed weight lifts each unit annulus toward the mass of the
    first one, with nonincreasing slopes so the slow-growth property holds
    from the point where the slopes drop under each epsilon.  If the plain
    sums already score well the constant weight is returned.
    """
    if not distance_spectrum:
        raise GeometryError("empty distance spectrum")
    spectrum = sorted(float(d) for d in distance_spectrum)
    flat = SullivanWeight([(0.0, 0.0, 0.0)])
    if divergence_score(flat, spectrum, delta) >= 0.25:
        return flat
    lo, hi = spectrum[0], spectrum[-1]
    if hi - lo < 2.0:
        return flat
    # plain weighted mass per unit annulus
    nbins = int(math.ceil(hi - lo)) + 1
    masses = [0.0] * nbins
    for d in spectrum:
        masses[min(nbins - 1, int(d - lo))] += math.exp(-delta * d)
    ref = next((m for m in masses if m > 0), None)
    if ref is None:
        return flat
    knots = []
    logh = 0.0
    slope_cap = delta  # positive slopes never increase; plateaus allowed
    tail_start = lo + 0.85 * (hi - lo)
    for k in range(nbins):
        t_k = lo + float(k)
        target = 0.0
        if k + 1 < nbins and masses[k + 1] > 0:
            target = max(0.0, math.log(ref / masses[k + 1]))
        slope = min(slope_cap, max(0.0, target - logh))
        if t_k >= tail_start:
            slope = 0.0
        knots.append((t_k, logh, slope))
        logh += slope
        if slope > 0:
            slope_cap = slope
    knots.append((lo + float(nbins), logh, 0.0))
    return SullivanWeight(knots)


def weighted_sum(weight: SullivanWeight, spectrum: Sequence[float], delta: float) -> float:
    return sum(math.exp(weight.log_value(d) - delta * d) for d in spectrum)


def divergence_score(weight: SullivanWeight, spectrum: Sequence[float], delta: float) -> float:
    """Late-range weighted mass relative to early-range weighted mass; away
    from zero means the partial sums are still growing at the range's end."""
    spectrum = sorted(float(d) for d in spectrum)
    cut = spectrum[0] + 0.5 * (spectrum[-1] - spectrum[0])
    early = sum(math.exp(weight.log_value(d) - delta * d) for d in spectrum if d <= cut)
    late = sum(math.exp(weight.log_value(d) - delta * d) for d in spectrum if d > cut)
    if early == 0:
        return math.inf
    return late / early
