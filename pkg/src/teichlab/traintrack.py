"""Train tracks: switch-balanced weight spaces, the skew pairing, integer
carried actions, Perron stretch factors, and bounded multiplicative
independence certificates for pairs of stretch factors.

A track is pure incidence data: each branch contributes two half-branches,
and every switch lists its incoming and outgoing half-branches in cyclic
order.  All linear algebra runs over the rationals.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Optional, Sequence

import mpmath

from .exactalg import (
    char_poly,
    continued_fraction,
    convergents,
    mat_mul,
    mat_pow,
    mat_vec,
    perron_root_enclosure,
    poly_eval,
    poly_gcd,
    rational_kernel,
    solve_exact,
)


class TrackError(ValueError):
    pass


class NonPrimitiveAction(TrackError):
    """No power of the induced matrix is positive: no Perron guarantee."""


@dataclass(frozen=True)
class TrainTrack:
    """branches: count b; switches: tuples (incoming ids, outgoing ids) of
    half-branch ids in cyclic order.  Half-branch ids are 2*k and 2*k+1 for
    branch k."""

    branches: int
    switches: tuple

    def __post_init__(self):
        if self.branches < 2:
            raise TrackError("a track needs at least two branches")
        seen = {}
        for idx, (inc, out) in enumerate(self.switches):
            for h in list(inc) + list(out):
                if not 0 <= h < 2 * self.branches:
                    raise TrackError(f"half-branch id {h} out of range")
                if h in seen:
                    raise TrackError(f"half-branch {h} appears twice")
                seen[h] = idx
        if len(seen) != 2 * self.branches:
            raise TrackError("every half-branch must appear exactly once")

    def switch_rows(self) -> list:
        """Rows of the switch system: sum of incoming weights minus sum of
        outgoing weights per switch."""
        rows = []
        for inc, out in self.switches:
            row = [0] * self.branches
            for h in inc:
                row[h // 2] += 1
            for h in out:
                row[h // 2] -= 1
            rows.append(row)
        return rows

    def weight_space_basis(self) -> list:
        """Exact kernel basis of the switch system; its length is the
        dimension of the balanced weight space."""
        return rational_kernel(self.switch_rows(), self.branches)

    def check_weights(self, weights: Sequence) -> bool:
        return all(
            sum(Fraction(weights[h // 2]) for h in inc)
            == sum(Fraction(weights[h // 2]) for h in out)
            for inc, out in self.switches
        )


@dataclass(frozen=True)
class WeightVector:
    track: TrainTrack
    weights: tuple

    def __post_init__(self):
        if len(self.weights) != self.track.branches:
            raise TrackError("weight count must match branch count")
        if not self.track.check_weights(self.weights):
            raise TrackError("weights violate a switch condition")

    @property
    def positive(self) -> bool:
        return all(w > 0 for w in self.weights)


def symplectic_form(track: TrainTrack, v: Sequence, w: Sequence) -> Fraction:
    """Skew pairing: per switch, the ordered-pair sum over incoming
    half-branches minus the same sum over outgoing half-branches reversed,
    halved.  Antisymmetric by construction and preserved by every valid
    carried action on the test tracks; the torus track calibrates the
    global constant against the intersection number.
    """
    if not (track.check_weights(v) and track.check_weights(w)):
        raise TrackError("symplectic form needs switch-balanced vectors")
    v = [Fraction(x) for x in v]
    w = [Fraction(x) for x in w]
    total = Fraction(0)
    for inc, out in track.switches:
        for side, sign in ((inc, 1), (tuple(reversed(out)), -1)):
            for a in range(len(side)):
                for b in range(a + 1, len(side)):
                    i, j = side[a] // 2, side[b] // 2
                    total += sign * (v[i] * w[j] - v[j] * w[i])
    return total / 2


@dataclass
class CarriedAction:
    """Nonnegative integer matrix on branch space preserving the switch
    system, with the exact induced matrix on a kernel basis."""

    track: TrainTrack
    branch_matrix: list
    basis: list
    induced: list
    positive_power: Optional[int]

    @property
    def dimension(self) -> int:
        return len(self.induced)


def action_matrix(track: TrainTrack, branch_matrix: Sequence[Sequence[int]]) -> CarriedAction:
    """Validate a branch-image matrix and compute its induced action.

    The matrix must have nonnegative integer entries and map the balanced
    weight space into itself; the induced matrix on the kernel basis must
    be integral.  The positivity witness is the least power with all
    entries positive, if one exists within the Wielandt bound.
    """
    b = track.branches
    mat = [list(row) for row in branch_matrix]
    if len(mat) != b or any(len(row) != b for row in mat):
        raise TrackError("branch matrix has wrong shape")
    for row in mat:
        for v in row:
            if not isinstance(v, int) or v < 0:
                raise TrackError("branch matrix entries must be nonnegative integers")
    basis = track.weight_space_basis()
    images = []
    for vec in basis:
        img = mat_vec(mat, vec)
        if not track.check_weights(img):
            raise TrackError("action does not preserve the switch conditions")
        images.append(img)
    induced_cols = []
    for img in images:
        coords = solve_exact(basis, img)
        if coords is None:
            raise TrackError("action does not preserve the weight space")
        induced_cols.append(coords)
    induced = [[induced_cols[j][i] for j in range(len(basis))] for i in range(len(basis))]
    for row in induced:
        for v in row:
            if v.denominator != 1:
                raise TrackError("induced matrix is not integral")
    induced = [[int(v) for v in row] for row in induced]
    return CarriedAction(track, mat, basis, induced, _positivity_witness(induced))


def _positivity_witness(matrix) -> Optional[int]:
    n = len(matrix)
    if n == 0:
        return None
    bound = n * n - 2 * n + 2 if n > 1 else 1
    power = [row[:] for row in matrix]
    for k in range(1, max(bound, 1) + 1):
        if all(v > 0 for row in power for v in row):
            return k
        power = mat_mul(power, matrix)
    return None


def compose_actions(a: CarriedAction, b: CarriedAction) -> CarriedAction:
    """Action of a after b (matrix product), exact."""
    if a.track is not b.track and a.track != b.track:
        raise TrackError("actions live on different tracks")
    return action_matrix(a.track, mat_mul(a.branch_matrix, b.branch_matrix))


@dataclass
class Dilatation:
    value: float
    lo: Fraction
    hi: Fraction
    char_poly: list
    positive_power: int


def dilatation(action: CarriedAction, width: Fraction = Fraction(1, 10**13)) -> Dilatation:
    """Certified Perron stretch factor of a primitive induced matrix.

    The enclosure comes from exact bisection of the characteristic
    polynomial; a float power iteration cross-checks that the enclosure
    brackets the dominant eigenvalue.
    """
    if action.positive_power is None:
        raise NonPrimitiveAction("no positive power within the Wielandt bound")
    coeffs = char_poly(action.induced)
    lo, hi = perron_root_enclosure(coeffs, width)
    est = _power_iteration(action.induced)
    if not (float(lo) - 1e-6 <= est <= float(hi) + 1e-6):
        raise TrackError(
            f"power iteration {est} escapes the certified enclosure [{lo}, {hi}]"
        )
    return Dilatation(float((lo + hi) / 2), lo, hi, coeffs, action.positive_power)


def _power_iteration(matrix, iters: int = 200) -> float:
    n = len(matrix)
    vec = [1.0] * n
    value = 1.0
    for _ in range(iters):
        nxt = [sum(matrix[i][j] * vec[j] for j in range(n)) for i in range(n)]
        value = max(abs(v) for v in nxt)
        if value == 0:
            return 0.0
        vec = [v / value for v in nxt]
    return value


# ---------------------------------------------------------------------------
# proximality and projective limit sets


@dataclass
class ProximalityReport:
    proximal: list  # per action: (is_proximal, spectral gap)
    samples: list  # projective limit vectors per word
    min_angle_to_complement: float
    depth: int
    invariant_subspace_found: bool


def proximality_and_limit_set(
    actions: Sequence[CarriedAction], depth: int = 6
) -> ProximalityReport:
    """Proximality flags, projective limit-set samples to the given word
    depth, and the angle floor between samples and each action's
    complementary eigenspace (a numerical transversality certificate)."""
    if len(actions) < 2:
        raise TrackError("need at least two actions")
    import numpy as np

    mats = [np.array(a.induced, dtype=float) for a in actions]
    prox = []
    left_dominants = []
    for m in mats:
        vals, vecs = np.linalg.eig(m)
        order = np.argsort(-np.abs(vals))
        vals, vecs = vals[order], vecs[:, order]
        gap = (abs(vals[0]) - abs(vals[1])) / abs(vals[0]) if len(vals) > 1 else 1.0
        is_prox = bool(
            abs(vals[0].imag) < 1e-9 * abs(vals[0]) and gap > 1e-9
        )
        prox.append((is_prox, float(gap)))
        lvals, lvecs = np.linalg.eig(m.T)
        lm = np.argmax(np.abs(lvals))
        left = np.real(lvecs[:, lm])
        left_dominants.append(left / np.linalg.norm(left))
    samples = {}
    frontier = {(): np.identity(len(mats[0]))}
    for level in range(depth):
        nxt = {}
        for word, mat in frontier.items():
            for gidx, g in enumerate(mats):
                nword = word + (gidx,)
                nxt[nword] = mat @ g
        frontier = nxt
        for word, mat in frontier.items():
            vec = _dominant_vector(mat)
            samples[word] = vec
    min_angle = math.inf
    for vec in samples.values():
        for left in left_dominants:
            cosang = abs(float(vec @ left))
            min_angle = min(min_angle, math.asin(min(1.0, cosang)))
    sample_vecs = list(samples.values())
    invariant = _invariant_subspace_among(sample_vecs, mats)
    return ProximalityReport(
        prox, sample_vecs, min_angle, depth, invariant
    )


def _dominant_vector(mat):
    import numpy as np

    vec = np.ones(mat.shape[0])
    for _ in range(256):
        nxt = mat @ vec
        norm = np.linalg.norm(nxt)
        if norm == 0:
            return vec
        vec = nxt / norm
    return vec


def _invariant_subspace_among(vectors, mats, tol: float = 1e-8) -> bool:
    """Rank test: does any subset of <= dim-1 sampled vectors span a space
    invariant under every generator?"""
    import numpy as np
    from itertools import combinations

    dim = mats[0].shape[0]
    # deduplicate projectively
    unique = []
    for v in vectors:
        if not any(abs(abs(float(v @ u)) - 1.0) < 1e-9 for u in unique):
            unique.append(v / np.linalg.norm(v))
    for size in range(1, dim):
        for combo in combinations(unique[:12], size):
            span = np.array(combo).T
            q, _ = np.linalg.qr(span)
            q = q[:, :size]
            invariant = True
            for m in mats:
                image = m @ q
                resid = image - q @ (q.T @ image)
                if np.linalg.norm(resid) > tol * max(1.0, np.linalg.norm(image)):
                    invariant = False
                    break
            if invariant:
                return True
    return False


def lemma_limit_convergence(a: CarriedAction, b: CarriedAction, n: int = 30) -> float:
    """Projective distance between the dominant direction of A B^n and the
    A-image of B's dominant direction (the nested-image limit law)."""
    import numpy as np

    am = np.array(a.induced, dtype=object)
    bm = np.array(b.induced, dtype=object)
    bn = np.array(mat_pow(b.induced, n), dtype=object)
    prod = np.array(mat_mul(a.induced, [list(r) for r in bn.tolist()]), dtype=float)
    v_abn = _dominant_vector(prod)
    vb = _dominant_vector(np.array(b.induced, dtype=float))
    target = np.array(a.induced, dtype=float) @ vb
    target = target / np.linalg.norm(target)
    cosang = abs(float(v_abn @ target))
    return math.sqrt(max(0.0, 1.0 - min(1.0, cosang) ** 2))


# ---------------------------------------------------------------------------
# bounded nonarithmeticity


@dataclass
class NonArithVerdict:
    kind: str  # "DEPENDENT" or "INDEPENDENT-UP-TO"
    p: Optional[int]
    q: Optional[int]
    height: Optional[int]
    log_ratio: Optional[str]

    def __str__(self):
        if self.kind == "DEPENDENT":
            return f"DEPENDENT({self.p},{self.q})"
        return f"INDEPENDENT-UP-TO({self.height})"


def nonarith_check(
    action1: CarriedAction,
    action2: CarriedAction,
    height: int = 10**6,
    precision: int = 50,
) -> NonArithVerdict:
    """Certified multiplicative dependence check for two stretch factors.

    DEPENDENT(p, q) certifies lambda1^p = lambda2^q exactly: the candidate
    (p, q) comes from a continued-fraction convergent of log(lambda2) /
    log(lambda1) at the working precision, and the certificate is a common
    root of the characteristic polynomials of the p-th and q-th matrix
    powers (a nontrivial polynomial gcd containing the Perron root).
    INDEPENDENT-UP-TO(height) means no convergent with denominator and
    numerator up to the height matches within the enclosure width; it is a
    bounded statement, never an unconditional one.
    """
    old_dps = mpmath.mp.dps
    mpmath.mp.dps = max(precision, 30)
    try:
        lam1 = _precise_root(action1, precision)
        lam2 = _precise_root(action2, precision)
        ratio = mpmath.log(lam2) / mpmath.log(lam1)
        terms = continued_fraction(ratio)
        for p, q in convergents(terms):
            if p <= 0 or q <= 0:
                continue
            if p > height or q > height:
                break
            approx = mpmath.mpf(p) / q
            if abs(approx - ratio) > mpmath.mpf(10) ** (-(precision - 10)):
                continue
            if _certify_power_relation(action1, action2, p, q):
                return NonArithVerdict("DEPENDENT", p, q, None, None)
        return NonArithVerdict(
            "INDEPENDENT-UP-TO", None, None, height, mpmath.nstr(ratio, precision - 5)
        )
    finally:
        mpmath.mp.dps = old_dps


def _precise_root(action: CarriedAction, precision: int):
    coeffs = char_poly(action.induced)
    width = Fraction(1, 10 ** (precision + 10))
    lo, hi = perron_root_enclosure(coeffs, width)
    return mpmath.mpf(lo.numerator) / lo.denominator


def _certify_power_relation(a1: CarriedAction, a2: CarriedAction, p: int, q: int) -> bool:
    """Exact check of lambda1^p == lambda2^q: the Perron roots of the p-th
    and q-th powers coincide iff the char polys share that root, iff their
    gcd has a sign change inside the intersected Perron enclosures."""
    m1 = mat_pow(a1.induced, p)
    m2 = mat_pow(a2.induced, q)
    c1 = char_poly(m1)
    c2 = char_poly(m2)
    g = poly_gcd(c1, c2)
    if len(g) <= 1:
        return False
    width = Fraction(1, 10**20)
    lo1, hi1 = perron_root_enclosure(c1, width)
    lo2, hi2 = perron_root_enclosure(c2, width)
    lo, hi = max(lo1, lo2), min(hi1, hi2)
    if lo >= hi:
        return False
    # widen the common bracket slightly and look for a sign change of g
    span = hi - lo
    lo_w, hi_w = lo - 100 * span - Fraction(1, 10**15), hi + 100 * span + Fraction(1, 10**15)
    val_lo = poly_eval(g, lo_w)
    val_hi = poly_eval(g, hi_w)
    if val_lo == 0 or val_hi == 0:
        return True
    return (val_lo < 0) != (val_hi < 0)


# ---------------------------------------------------------------------------
# stock tracks and file formats


def torus_track() -> TrainTrack:
    """Two branches through one switch; every weight pair is balanced, so
    the weight space is the full plane."""
    return TrainTrack(2, (((0, 2), (1, 3)),))


def genus2_track() -> TrainTrack:
    """A complete trivalent track for the closed genus-2 surface: 18
    branches over 12 switches, connected, with switch system of full rank
    so the balanced weight space has dimension 6 = 6g - 6."""
    return TrainTrack(
        18,
        (
            ((7,), (31, 4)),
            ((10, 1), (34,)),
            ((29,), (25, 24)),
            ((15, 14), (9,)),
            ((6,), (16, 32)),
            ((2, 35), (21,)),
            ((22,), (33, 27)),
            ((20, 17), (30,)),
            ((28,), (3, 11)),
            ((5, 13), (18,)),
            ((8,), (12, 23)),
            ((19, 0), (26,)),
        ),
    )


def track_to_json(track: TrainTrack) -> dict:
    return {
        "branches": track.branches,
        "switches": [[list(inc), list(out)] for inc, out in track.switches],
    }


def track_from_json(data: dict) -> TrainTrack:
    return TrainTrack(
        data["branches"], tuple((tuple(inc), tuple(out)) for inc, out in data["switches"])
    )


def load_track(path: str) -> TrainTrack:
    with open(path) as fh:
        return track_from_json(json.load(fh))


def load_action(path: str, track: TrainTrack) -> CarriedAction:
    with open(path) as fh:
        data = json.load(fh)
    return action_matrix(track, data["matrix"] if isinstance(data, dict) else data)
