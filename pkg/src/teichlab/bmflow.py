"""Flow-invariant product measure on the space of geodesics, and the
suspension dynamics over the ping-pong coding.

A geodesic with both endpoints in the limit set is keyed by its (backward,
forward) slope pair; time along it runs from the closest point to the
global basepoint.  The measure over cells (A, B) of an arc partition is

    w(A, B) = nu(A) * nu(B) * exp(delta * rho_x(mid A, mid B))

with cells whose arc closures meet masked off (the product density blows
up on the diagonal).  The quotient dynamics behind the mixing experiment
realizes the group action symbolically: an endpoint pair is reduced when
its endpoints lie in attracting arcs of non-inverse letters, and flowing
past the roof applies the inverse of the forward letter to re-center.
"""

from __future__ import annotations

import csv
import math
import random
from dataclasses import dataclass
from typing import Optional, Sequence

from .circle import BoundaryArc, angle_of, point_of_angle
from .geometry import (
    Geodesic,
    GeometryError,
    MappingClass,
    TeichPoint,
    busemann_at,
    gromov_product_points,
)
from .measures import ArcMeasure
from .schottky import SchottkyGroup


@dataclass
class BMGrid:
    """Cell weights of the product measure over a row/column arc partition."""

    rows: list
    cols: list
    weights: list  # rows x cols
    masked: list  # rows x cols, bool
    basepoint: TeichPoint
    delta: float
    row_masses: list
    col_masses: list

    def weight(self, i: int, j: int) -> float:
        return self.weights[i][j]

    def total_weight(self) -> float:
        return sum(
            self.weights[i][j]
            for i in range(len(self.rows))
            for j in range(len(self.cols))
            if not self.masked[i][j]
        )

    def masked_mass(self) -> float:
        """nu x nu mass sitting on masked (near-diagonal) cells."""
        return sum(
            self.row_masses[i] * self.col_masses[j]
            for i in range(len(self.rows))
            for j in range(len(self.cols))
            if self.masked[i][j]
        )

    def to_csv(self, path: str) -> None:
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["row_lo", "row_hi", "col_lo", "col_hi", "weight", "masked"])
            for i, ra in enumerate(self.rows):
                for j, ca in enumerate(self.cols):
                    writer.writerow(
                        [
                            repr(float(ra.lo)),
                            repr(float(ra.hi)),
                            repr(float(ca.lo)),
                            repr(float(ca.hi)),
                            repr(self.weights[i][j]),
                            int(self.masked[i][j]),
                        ]
                    )


def bm_grid(
    nu: ArcMeasure,
    x: TeichPoint,
    delta: float,
    col_nu: Optional[ArcMeasure] = None,
) -> BMGrid:
    """Assemble the product grid (symmetric when rows and columns share the
    same measure)."""
    rows = list(nu.partition)
    col_measure = col_nu if col_nu is not None else nu
    cols = list(col_measure.partition)
    weights = [[0.0] * len(cols) for _ in rows]
    masked = [[False] * len(cols) for _ in rows]
    for i, ra in enumerate(rows):
        for j, ca in enumerate(cols):
            if ra.closure_intersects(ca):
                masked[i][j] = True
                continue
            rho = gromov_product_points(x, ra.midpoint(), ca.midpoint())
            weights[i][j] = nu.masses[i] * col_measure.masses[j] * math.exp(delta * rho)
    return BMGrid(
        rows, cols, weights, masked, x, delta, list(nu.masses), list(col_measure.masses)
    )


@dataclass(frozen=True)
class FlowBox:
    """Product cell (arc pair) times a time window [t0, t1); time runs from
    the closest point of each cell geodesic to the grid basepoint."""

    backward: BoundaryArc
    forward: BoundaryArc
    t0: float
    t1: float

    def __post_init__(self):
        if not self.t1 > self.t0:
            raise GeometryError("flow box needs t1 > t0")
        if self.backward.closure_intersects(self.forward):
            raise GeometryError("flow box arcs must have disjoint closures")

    @property
    def thickness(self) -> float:
        return self.t1 - self.t0

    def representative(self) -> Geodesic:
        return Geodesic(self.backward.midpoint(), self.forward.midpoint())


def box_mass(grid: BMGrid, box: FlowBox) -> float:
    """Grid mass of a flow box: contained cell weights times thickness."""
    total = 0.0
    for i, ra in enumerate(grid.rows):
        if not box.backward.contains_arc(ra):
            continue
        for j, ca in enumerate(grid.cols):
            if grid.masked[i][j]:
                continue
            if box.forward.contains_arc(ca):
                total += grid.weights[i][j]
    return total * box.thickness


def atomic_pair_mass(atoms, back_arc: BoundaryArc, fwd_arc: BoundaryArc, x, delta) -> float:
    """Product mass of an arc pair straight from boundary atoms (no cell
    discretization); the exact-transport reference for invariance checks."""
    back = [a for a in atoms if not math.isnan(a.slope) and back_arc.contains(a.slope)]
    fwd = [a for a in atoms if not math.isnan(a.slope) and fwd_arc.contains(a.slope)]
    total = 0.0
    for a in back:
        for b in fwd:
            if a.slope == b.slope:
                continue
            total += a.weight * b.weight * math.exp(
                delta * gromov_product_points(x, a.slope, b.slope)
            )
    return total


def bm_mass(grid: BMGrid, group: SchottkyGroup, rng: Optional[random.Random] = None):
    """Reference total mass: certificate-pair cells at unit time thickness.

    Returns (mass, error bar); the error bar is a Monte-Carlo estimate of
    the midpoint-quadrature error from jittered cell evaluation points.
    """
    rng = rng or random.Random(0)
    arcs = group.certificate_arcs()
    total = 0.0
    jitter_totals = [0.0, 0.0, 0.0]
    for a_idx in range(len(arcs)):
        for b_idx in range(a_idx + 1, len(arcs)):
            A, B = arcs[a_idx], arcs[b_idx]
            mass_a = _restricted_mass(grid.rows, grid.row_masses, A)
            mass_b = _restricted_mass(grid.cols, grid.col_masses, B)
            if mass_a == 0 or mass_b == 0:
                continue
            rho = gromov_product_points(grid.basepoint, A.midpoint(), B.midpoint())
            total += mass_a * mass_b * math.exp(grid.delta * rho)
            for k in range(3):
                pa = _jitter_point(A, rng)
                pb = _jitter_point(B, rng)
                rho_j = gromov_product_points(grid.basepoint, pa, pb)
                jitter_totals[k] += mass_a * mass_b * math.exp(grid.delta * rho_j)
    spread = max(abs(j - total) for j in jitter_totals) if total else 0.0
    return total, spread


def _restricted_mass(arcs, masses, container: BoundaryArc) -> float:
    return sum(m for arc, m in zip(arcs, masses) if container.contains_arc(arc))


def _jitter_point(arc: BoundaryArc, rng: random.Random):
    a0 = angle_of(arc.lo)
    return point_of_angle(a0 + arc.width() * rng.uniform(0.25, 0.75))


# ---------------------------------------------------------------------------
# horospherical structure


def horosphere_time(geo: Geodesic, x: TeichPoint, endpoint, level: float) -> float:
    """Time t on geo at which the Busemann cocycle at ``endpoint`` between
    x and geo(t) equals ``level``.

    The cocycle is affine in t with slope -1 at the backward endpoint and
    +1 at the forward one, so one evaluation pins the whole line.
    """
    b0 = busemann_at(endpoint, x, geo.point(0.0))
    b1 = busemann_at(endpoint, x, geo.point(1.0))
    slope = b1 - b0
    if abs(abs(slope) - 1.0) > 1e-6:
        raise GeometryError("not an endpoint of the geodesic")
    return (level - b0) / slope


def horospherical_box_mass(grid: BMGrid, box: FlowBox, nu_fine: ArcMeasure) -> float:
    """Box mass via the iterated horospherical construction.

    Inner to outer: arclength, then the strong-stable conditional over the
    backward endpoint (density exp(delta * beta_back(x, q)) at the point q
    on the forward horosphere of the section), then the strong-unstable
    conditional over the forward endpoint (density exp(delta * beta_fwd)
    at the point on the reference backward horosphere).  The fine measure
    supplies the sub-arc masses.
    """
    x = grid.basepoint
    delta = grid.delta
    ref = box.representative()
    c_star = busemann_at(ref.eta, x, ref.point(0.0))
    back_cells = _cells_inside(nu_fine, box.backward)
    fwd_cells = _cells_inside(nu_fine, box.forward)
    total = 0.0
    for zeta_arc, zeta_mass in fwd_cells:
        if zeta_mass == 0.0:
            continue
        zeta = zeta_arc.midpoint()
        geo_v = Geodesic(ref.eta, zeta)
        p_v = geo_v.point(horosphere_time(geo_v, x, ref.eta, c_star))
        su_density = math.exp(delta * busemann_at(zeta, x, p_v))
        s_level = busemann_at(zeta, x, p_v)
        inner = 0.0
        for eta_arc, eta_mass in back_cells:
            if eta_mass == 0.0:
                continue
            eta = eta_arc.midpoint()
            geo_w = Geodesic(eta, zeta)
            p_w = geo_w.point(horosphere_time(geo_w, x, zeta, s_level))
            inner += math.exp(delta * busemann_at(eta, x, p_w)) * eta_mass
        total += inner * su_density * zeta_mass
    return total * box.thickness


def _cells_inside(nu: ArcMeasure, container: BoundaryArc):
    cells = [
        (arc, mass)
        for arc, mass in zip(nu.partition, nu.masses)
        if container.contains_arc(arc)
    ]
    if not cells:
        raise GeometryError("box too small for the fine partition")
    return cells


def horospherical_consistency(grid: BMGrid, box: FlowBox, nu_fine: ArcMeasure) -> float:
    """Relative deviation between the direct grid mass of a box and the
    iterated horospherical quadrature at a finer partition."""
    direct = box_mass(grid, box)
    if direct == 0.0:
        raise GeometryError("box carries no grid mass")
    iterated = horospherical_box_mass(grid, box, nu_fine)
    return abs(iterated / direct - 1.0)


def holonomy_invariance(
    zeta1,
    zeta2,
    arcs: Sequence[BoundaryArc],
    nu: ArcMeasure,
    x: TeichPoint,
    delta: float,
) -> float:
    """Worst arc-mass deviation between a weak-stable conditional and the
    unstable-holonomy pushforward from another leaf.

    Leaf i carries geodesics with forward endpoint zeta_i; its conditional
    weighs the backward arc F by exp(delta * c_i(eta)) nu(F) with c_i(eta)
    the unstable-horosphere level of the leaf's closest-point section at
    eta.  The holonomy from leaf 2 to leaf 1 preserves eta and the level,
    so the pushed density at eta is exp(delta * c_2(eta)) evaluated through
    leaf-1 geometry.  Quadrature uses the fine partition midpoints on one
    side and solved section points on the other, so the reported deviation
    is genuine discretization, vanishing as the arcs refine.
    """
    if zeta1 == zeta2:
        return 0.0
    worst = 0.0
    used = 0
    for container in arcs:
        direct = 0.0
        pushed = 0.0
        for arc, mass in zip(nu.partition, nu.masses):
            if mass == 0.0 or not container.contains_arc(arc):
                continue
            if arc.contains(zeta1) or arc.contains(zeta2):
                continue
            eta_mid = arc.midpoint()
            # direct leaf-2 conditional at the arc midpoint
            c2_mid = _section_level(eta_mid, zeta2, x)
            direct += math.exp(delta * c2_mid) * mass
            # holonomy image evaluated through leaf-1 geometry at a shifted
            # representative (quarter point), exposing across-arc variation
            eta_rep = point_of_angle(angle_of(arc.lo) + 0.25 * arc.width())
            if eta_rep == zeta1 or eta_rep == zeta2:
                continue
            c2_rep = _section_level(eta_rep, zeta2, x)
            geo1 = Geodesic(eta_rep, zeta1)
            q = geo1.point(horosphere_time(geo1, x, eta_rep, c2_rep))
            pushed += math.exp(delta * busemann_at(eta_rep, x, q)) * mass
        if direct > 0.0 and pushed > 0.0:
            worst = max(worst, abs(pushed / direct - 1.0))
            used += 1
    if used == 0:
        raise GeometryError("insufficient overlap of backward-endpoint arcs")
    return worst


def _section_level(eta, zeta, x: TeichPoint) -> float:
    geo = Geodesic(eta, zeta)
    return busemann_at(eta, x, geo.point(geo.time_of(x)))


# ---------------------------------------------------------------------------
# quotient dynamics (suspension over the ping-pong coding)


@dataclass(frozen=True)
class FlowState:
    eta: float
    zeta: float
    t: float  # time from the closest point to the basepoint


class SuspensionFlow:
    """Geodesic flow on the quotient, coded by first-letter recentering."""

    def __init__(self, group: SchottkyGroup, basepoint: TeichPoint):
        self.group = group
        self.x = basepoint

    def letter_of(self, p):
        letter = self.group.letter_of_point(p)
        if letter is None:
            raise GeometryError(f"boundary point {p} is outside the certificate arcs")
        return letter

    def is_reduced(self, eta, zeta) -> bool:
        """Reduced pairs have endpoint itineraries starting with distinct
        letters; inverse pairs are fine (axes through the center), equal
        first letters mean the geodesic sits deep inside one region."""
        return self.letter_of(eta) != self.letter_of(zeta)

    def roof(self, eta, zeta) -> float:
        """Flow time after which the forward-recentred chart takes over."""
        letter = self.letter_of(zeta)
        g_inv = self.group.letter_matrix((letter[0], -letter[1]))
        eta2, zeta2 = g_inv.act_boundary(eta), g_inv.act_boundary(zeta)
        geo2 = Geodesic(float(eta2), float(zeta2))
        origin2 = geo2.point(0.0)
        g = self.group.letter_matrix(letter)
        pulled = g.act_point(origin2)
        return Geodesic(eta, zeta).time_of(pulled)

    def _recenter(self, state: FlowState, letter) -> tuple:
        g_inv = self.group.letter_matrix((letter[0], -letter[1]))
        eta2 = float(g_inv.act_boundary(state.eta))
        zeta2 = float(g_inv.act_boundary(state.zeta))
        p = Geodesic(state.eta, state.zeta).point(state.t)
        moved = g_inv.act_point(p)
        t2 = Geodesic(eta2, zeta2).time_of(moved)
        return FlowState(eta2, zeta2, t2), g_inv

    def flow(self, state: FlowState, t: float, max_steps: int = 4096):
        """Flow by time t, recentering as needed.

        Returns (reduced state, applied group element): the element gamma
        with gamma(original geodesic) = final chart's geodesic.
        """
        cur = FlowState(state.eta, state.zeta, state.t + t)
        applied = MappingClass(1, 0, 0, 1)
        for _ in range(max_steps):
            if not self.is_reduced(cur.eta, cur.zeta):
                raise GeometryError("flow state left the reduced coding")
            if cur.t < 0.0:
                nxt, g = self._recenter(cur, self.letter_of(cur.eta))
                cur, applied = nxt, g @ applied
                continue
            roof = self.roof(cur.eta, cur.zeta)
            if cur.t >= roof:
                nxt, g = self._recenter(cur, self.letter_of(cur.zeta))
                cur, applied = nxt, g @ applied
                continue
            return cur, applied
        raise GeometryError("flow did not settle inside the fundamental window")


def cell_representatives(grid: BMGrid, atoms, min_len: int = 5):
    """Deep-atom representative slope per grid arc (None when empty)."""
    reps_rows = []
    for arc in grid.rows:
        try:
            reps_rows.append(deep_atom_rep(atoms, arc, min_len))
        except GeometryError:
            reps_rows.append(None)
    if grid.rows is grid.cols or grid.rows == grid.cols:
        return reps_rows, reps_rows
    reps_cols = []
    for arc in grid.cols:
        try:
            reps_cols.append(deep_atom_rep(atoms, arc, min_len))
        except GeometryError:
            reps_cols.append(None)
    return reps_rows, reps_cols


def suspension_total_mass(grid: BMGrid, flow: SuspensionFlow, atoms) -> float:
    """Quotient mass in the suspension normalization: reduced cells weighted
    by the roof at a deep-atom representative pair."""
    reps_rows, reps_cols = cell_representatives(grid, atoms)
    total = 0.0
    for i, ra in enumerate(grid.rows):
        if reps_rows[i] is None:
            continue
        for j, ca in enumerate(grid.cols):
            if grid.masked[i][j] or grid.weights[i][j] == 0.0 or reps_cols[j] is None:
                continue
            eta, zeta = reps_rows[i], reps_cols[j]
            try:
                if not flow.is_reduced(eta, zeta):
                    continue
                roof = flow.roof(eta, zeta)
            except GeometryError:
                continue
            if roof > 0:
                total += grid.weights[i][j] * roof
    return total


def cylinder_mass(grid: BMGrid, flow: SuspensionFlow, atoms, back_arcs, fwd_arcs) -> float:
    """Suspension mass of a phase-free cylinder (all times up to the roof)
    over the cells contained in the given arc unions."""
    reps_rows, reps_cols = cell_representatives(grid, atoms)
    total = 0.0
    for i, ra in enumerate(grid.rows):
        if reps_rows[i] is None or not any(c.contains_arc(ra) for c in back_arcs):
            continue
        for j, ca in enumerate(grid.cols):
            if grid.masked[i][j] or grid.weights[i][j] == 0.0 or reps_cols[j] is None:
                continue
            if not any(c.contains_arc(ca) for c in fwd_arcs):
                continue
            eta, zeta = reps_rows[i], reps_cols[j]
            try:
                if not flow.is_reduced(eta, zeta):
                    continue
                roof = flow.roof(eta, zeta)
            except GeometryError:
                continue
            if roof > 0:
                total += grid.weights[i][j] * roof
    return total


# ---------------------------------------------------------------------------
# invariance checks


def generator_invariance_exact(
    group: SchottkyGroup,
    gen_index: int,
    box: FlowBox,
    x: TeichPoint,
    s: float,
    cutoff: float,
) -> float:
    """Invariance of the product measure under a generator, in the exact
    transported form: the g-image box measured in the g-translated chart
    (measure rebuilt at basepoint g x, density exp(s rho_{gx})) against the
    original box at basepoint x.

    Equality is an identity of finite sums (orbit relabeling plus the rho
    cocycle), so the return value is float noise.
    """
    from .measures import ps_approximant

    g = group.generators[gen_index]
    nu_x = ps_approximant(group, x, s, cutoff)
    src = atomic_pair_mass(nu_x.atoms, box.backward, box.forward, x, s)
    if src == 0:
        raise GeometryError("box carries no atomic mass")
    gx = g.act_point(x)
    nu_gx = ps_approximant(group, gx, s, cutoff)
    dst = atomic_pair_mass(
        nu_gx.atoms, box.backward.image(g.tuple), box.forward.image(g.tuple), gx, s
    )
    return abs(dst / src - 1.0)


def generator_invariance_defect(
    atoms, group: SchottkyGroup, gen_index: int, box: FlowBox, x: TeichPoint, delta: float
) -> float:
    """Same-density form of the invariance: the g-image box re-read from
    the *same* truncated measure and basepoint.

    Analytically zero for the limit density; at finite truncation the
    boundary shell of the orbit ball enters with weight exp((h-s) R), so
    the defect shrinks along the s-ladder rather than with quadrature.
    """
    g = group.generators[gen_index]
    src = atomic_pair_mass(atoms, box.backward, box.forward, x, delta)
    if src == 0:
        raise GeometryError("box carries no atomic mass")
    dst = atomic_pair_mass(
        atoms, box.backward.image(g.tuple), box.forward.image(g.tuple), x, delta
    )
    return abs(dst / src - 1.0)


def deep_atom_rep(atoms, arc: BoundaryArc, min_len: int = 4):
    """Slope of a deep atom inside the arc, nearest its midpoint: a stand-in
    limit point whose symbolic itinerary survives several recenterings."""
    mid_angle = angle_of(arc.midpoint())
    best, best_d = None, None
    for a in atoms:
        if math.isnan(a.slope) or len(a.word) < min_len or not arc.contains(a.slope):
            continue
        d = abs(math.remainder(angle_of(a.slope) - mid_angle, 2 * math.pi))
        if best is None or d < best_d:
            best, best_d = a.slope, d
    if best is None:
        raise GeometryError("no deep atom inside the arc")
    return best


def flow_transport_drift(
    group: SchottkyGroup,
    flow: SuspensionFlow,
    box: FlowBox,
    t: float,
    s: float,
    cutoff: float,
    atoms,
) -> float:
    """Relative mass drift of a box transported by time t.

    The flow of a deep representative pair accumulates a group element g;
    the transported box (g-image arcs, same thickness) is measured in the
    g-translated chart, i.e. with the measure rebuilt at basepoint g x and
    the density exp(s rho_{gx}).  The density is flow invariant by
    construction, so any drift beyond float noise indicts the coordinate
    transport itself.
    """
    from .measures import ps_approximant

    x = flow.x
    nu_x = ps_approximant(group, x, s, cutoff)
    src = atomic_pair_mass(nu_x.atoms, box.backward, box.forward, x, s)
    if src == 0:
        raise GeometryError("box carries no atomic mass")
    eta = deep_atom_rep(atoms, box.backward, min_len=5)
    zeta = deep_atom_rep(atoms, box.forward, min_len=5)
    mid = FlowState(eta, zeta, 0.5 * (box.t0 + box.t1))
    _, applied = flow.flow(mid, t)
    gx = applied.act_point(x)
    # the final chart sees the original box through applied-image arcs;
    # measuring there with the measure rebuilt at the translated basepoint
    # must reproduce the source mass exactly
    nu_g = ps_approximant(group, gx, s, cutoff)
    dst = atomic_pair_mass(
        nu_g.atoms,
        box.backward.image(applied.tuple),
        box.forward.image(applied.tuple),
        gx,
        s,
    )
    return abs(dst / src - 1.0)


# ---------------------------------------------------------------------------
# mixing correlations


@dataclass
class CorrelationRow:
    t: float
    correlation: float
    product: float
    stderr: float


def _state_in_boxes(state: FlowState, boxes: Sequence[FlowBox]) -> bool:
    return any(
        b.backward.contains(state.eta)
        and b.forward.contains(state.zeta)
        and b.t0 <= state.t < b.t1
        for b in boxes
    )


def mixing_correlation(
    grid: BMGrid,
    flow: SuspensionFlow,
    obs_a: Sequence[FlowBox],
    obs_b: Sequence[FlowBox],
    t_grid: Sequence[float],
    atoms,
    samples: int = 20000,
    seed: int = 1,
    min_word_length: int = 5,
) -> list[CorrelationRow]:
    """C(t) = mu(A intersect flow_{-t} B) / ||mu|| by importance sampling.

    Pairs of boundary atoms are drawn nu-proportionally inside A's cells and
    weighted by exp(delta * rho); each flows for time t through the
    suspension and is tested against B.  Sampling uses the deep shell of
    the approximant (word length >= min_word_length) so the symbolic
    itinerary outlasts the flow horizon.  stderr is over 10 batches.
    """
    if not obs_a or not obs_b:
        raise GeometryError("empty observables")
    rng = random.Random(seed)
    mass_a = sum(box_mass(grid, b) for b in obs_a)
    mass_b = sum(box_mass(grid, b) for b in obs_b)
    total = suspension_total_mass(grid, flow)
    if mass_a <= 0 or mass_b <= 0:
        raise GeometryError("observables carry no grid mass")
    deep = [a for a in atoms if len(a.word) >= min_word_length and not math.isnan(a.slope)]
    pools = []
    for box in obs_a:
        back = [a for a in deep if box.backward.contains(a.slope)]
        fwd = [a for a in deep if box.forward.contains(a.slope)]
        if back and fwd:
            pools.append((box, _cumulative(back), _cumulative(fwd)))
    if not pools:
        raise GeometryError("no deep atoms inside the A observable")
    rows = []
    for t in t_grid:
        batch_fracs = []
        n_batches = 10
        per_batch = max(1, samples // n_batches)
        for _ in range(n_batches):
            acc = 0.0
            wsum = 0.0
            for _ in range(per_batch):
                box, back_pool, fwd_pool = pools[rng.randrange(len(pools))]
                a = _draw(back_pool, rng)
                b = _draw(fwd_pool, rng)
                if a.slope == b.slope:
                    continue
                rho = gromov_product_points(grid.basepoint, a.slope, b.slope)
                w = math.exp(grid.delta * rho)
                tau = rng.uniform(box.t0, box.t1)
                try:
                    moved, _ = flow.flow(FlowState(a.slope, b.slope, tau), t)
                    hit = 1.0 if _state_in_boxes(moved, obs_b) else 0.0
                except GeometryError:
                    hit = 0.0
                acc += w * hit
                wsum += w
            if wsum > 0:
                batch_fracs.append(acc / wsum)
        if not batch_fracs:
            raise GeometryError("sampling produced no admissible pairs")
        frac = sum(batch_fracs) / len(batch_fracs)
        var = sum((f - frac) ** 2 for f in batch_fracs) / max(1, len(batch_fracs) - 1)
        scale = mass_a / total
        rows.append(
            CorrelationRow(
                t,
                frac * scale,
                mass_a * mass_b / (total * total),
                math.sqrt(var / len(batch_fracs)) * scale,
            )
        )
    return rows


def _cumulative(atoms):
    cum = []
    acc = 0.0
    for a in atoms:
        acc += a.weight
        cum.append(acc)
    return atoms, cum, acc


def _draw(pool, rng: random.Random):
    atoms, cum, total = pool
    u = rng.uniform(0.0, total)
    lo, hi = 0, len(cum) - 1
    while lo < hi:
        mid = (lo + hi) // 2
        if cum[mid] < u:
            lo = mid + 1
        else:
            hi = mid
    return atoms[lo]


@dataclass(frozen=True)
class CylinderObs:
    """Phase-free observable: a union of backward arcs times a union of
    forward arcs, at every time in the fundamental window."""

    back_arcs: tuple
    fwd_arcs: tuple

    def contains(self, state: FlowState) -> bool:
        return any(a.contains(state.eta) for a in self.back_arcs) and any(
            a.contains(state.zeta) for a in self.fwd_arcs
        )


def mixing_correlation_cylinders(
    grid: BMGrid,
    flow: SuspensionFlow,
    cyl_a: CylinderObs,
    cyl_b: CylinderObs,
    t_grid: Sequence[float],
    atoms,
    samples: int = 20000,
    seed: int = 1,
    min_word_length: int = 6,
) -> list[CorrelationRow]:
    """Correlation decay for phase-free cylinder observables.

    Cylinders integrate over the whole fundamental time window, so the
    roof-phase oscillations of sharp windows drop out and the decay tracks
    the symbolic decorrelation directly.  Every quantity, including the
    product baseline, comes from one importance-sampling pass over the
    suspension measure (pairs nu x nu proportional, weight exp(delta rho)
    times the roof), so normalization systematics cancel in the gap.
    """
    rng = random.Random(seed)
    deep = [a for a in atoms if len(a.word) >= min_word_length and not math.isnan(a.slope)]
    if not deep:
        raise GeometryError("no deep atoms available")
    pool = _cumulative(deep)
    rows = []
    for t in t_grid:
        batch = []  # per batch: (wsum, a_mass, b_mass, ab_mass)
        n_batches = 10
        per_batch = max(1, samples // n_batches)
        for _ in range(n_batches):
            wsum = a_mass = b_mass = ab_mass = 0.0
            for _ in range(per_batch):
                a = _draw(pool, rng)
                b = _draw(pool, rng)
                if a.slope == b.slope:
                    continue
                try:
                    if not flow.is_reduced(a.slope, b.slope):
                        continue
                    roof = flow.roof(a.slope, b.slope)
                except GeometryError:
                    continue
                if roof <= 0:
                    continue
                rho = gromov_product_points(grid.basepoint, a.slope, b.slope)
                w = math.exp(grid.delta * rho) * roof
                state = FlowState(a.slope, b.slope, rng.uniform(0.0, roof))
                in_a = cyl_a.contains(state)
                wsum += w
                if cyl_b.contains(state):
                    b_mass += w
                if not in_a:
                    continue
                a_mass += w
                try:
                    moved, _ = flow.flow(state, t)
                    if cyl_b.contains(moved):
                        ab_mass += w
                except GeometryError:
                    pass
            if wsum > 0:
                batch.append((wsum, a_mass, b_mass, ab_mass))
        if not batch:
            raise GeometryError("sampling produced no admissible pairs")
        wsum = sum(b[0] for b in batch)
        corr = sum(b[3] for b in batch) / wsum
        prod = (sum(b[1] for b in batch) / wsum) * (sum(b[2] for b in batch) / wsum)
        per = [b[3] / b[0] - (b[1] / b[0]) * (b[2] / b[0]) for b in batch]
        gap_mean = sum(per) / len(per)
        var = sum((p - gap_mean) ** 2 for p in per) / max(1, len(per) - 1)
        rows.append(CorrelationRow(t, corr, prod, math.sqrt(var / len(per))))
    return rows


def correlation_to_csv(rows: Sequence[CorrelationRow], path: str) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["t", "correlation", "product", "stderr"])
        for row in rows:
            writer.writerow(
                [repr(row.t), repr(row.correlation), repr(row.product), repr(row.stderr)]
            )
