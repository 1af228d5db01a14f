"""Ping-pong Schottky subgroups: certificates, orbit balls, conjugacy classes.

Groups are free products of cyclic groups generated by hyperbolic integer
matrices.  Convex cocompactness is witnessed constructively: a list of
pairwise disjoint boundary arcs, one attracting and one repelling per
generator, such that each generator maps the complement of its repelling
arc strictly inside its attracting arc.  All certificate checks run in
exact rational arithmetic.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Iterator, Optional, Sequence

import numpy as np

from .circle import BoundaryArc, is_inf
from .geometry import (
    GeometryError,
    MappingClass,
    TeichPoint,
    distance,
    translation_length,
)


class PingPongError(GeometryError):
    """Certificate construction or verification failed."""


class BudgetExceeded(RuntimeError):
    """An enumeration hit its node cap before finishing.

    Distinct from an empty result: partial data is attached.
    """

    def __init__(self, message, partial=None, visited=0):
        super().__init__(message)
        self.partial = partial
        self.visited = visited


DEFAULT_NODE_CAP = 10**8


# ---------------------------------------------------------------------------
# words


@dataclass(frozen=True)
class Word:
    """Reduced word in the generators: letters are (generator index, sign)."""

    letters: tuple = ()

    def __post_init__(self):
        for (i, s), (j, t) in zip(self.letters, self.letters[1:]):
            if i == j and s == -t:
                raise ValueError("word is not reduced")

    def __len__(self):
        return len(self.letters)

    @property
    def is_identity(self):
        return not self.letters

    def append(self, letter) -> "Word":
        if self.letters:
            i, s = self.letters[-1]
            j, t = letter
            if i == j and s == -t:
                return Word(self.letters[:-1])
        return Word(self.letters + (letter,))

    def inverse(self) -> "Word":
        return Word(tuple((i, -s) for (i, s) in reversed(self.letters)))

    def matrix(self, generators: Sequence[MappingClass]) -> MappingClass:
        m = MappingClass(1, 0, 0, 1)
        for i, s in self.letters:
            g = generators[i] if s > 0 else generators[i].inverse()
            m = m @ g
        return m

    def cyclic_reduce(self) -> "Word":
        ls = list(self.letters)
        while len(ls) >= 2 and ls[0][0] == ls[-1][0] and ls[0][1] == -ls[-1][1]:
            ls = ls[1:-1]
        return Word(tuple(ls))

    def canonical_rotation(self) -> tuple:
        """Lexicographically minimal rotation of the letter tuple."""
        ls = self.letters
        if not ls:
            return ls
        return min(tuple(ls[k:] + ls[:k]) for k in range(len(ls)))

    def spell(self, names: Sequence[str] = ("a", "b", "c", "d")) -> str:
        if not self.letters:
            return "e"
        return "".join(
            names[i] if s > 0 else names[i].upper() for i, s in self.letters
        )


# ---------------------------------------------------------------------------
# the group


@dataclass
class SchottkyGroup:
    """Verified ping-pong group: generators plus interval certificate."""

    generators: list
    attracting: list  # BoundaryArc per generator
    repelling: list  # BoundaryArc per generator
    base_matrices: list = None  # pre-power matrices, for reporting
    powers: list = None

    @property
    def rank(self) -> int:
        return len(self.generators)

    def letter_matrix(self, letter) -> MappingClass:
        i, s = letter
        return self.generators[i] if s > 0 else self.generators[i].inverse()

    def letters(self) -> list:
        out = []
        for i in range(self.rank):
            out.append((i, 1))
            out.append((i, -1))
        return out

    def letter_arc(self, letter) -> BoundaryArc:
        """Attracting arc of the letter (repelling arc of its inverse)."""
        i, s = letter
        return self.attracting[i] if s > 0 else self.repelling[i]

    def certificate_arcs(self) -> list:
        """The 2*rank disjoint arcs, ordered (attr_0, rep_0, attr_1, ...)."""
        out = []
        for i in range(self.rank):
            out.append(self.attracting[i])
            out.append(self.repelling[i])
        return out

    def letter_of_point(self, p) -> Optional[tuple]:
        """Letter whose attracting arc contains the boundary point p."""
        for letter in self.letters():
            if self.letter_arc(letter).contains(p):
                return letter
        return None

    def refined_arcs(self, depth: int) -> list:
        """Images of certificate arcs under admissible words of the given
        length: the depth-k cylinder arcs of the limit Cantor set."""
        arcs = [(letter, self.letter_arc(letter)) for letter in self.letters()]
        for _ in range(depth):
            nxt = []
            for letter in self.letters():
                i, s = letter
                mat = self.letter_matrix(letter).tuple
                for prev, arc in arcs:
                    if prev == (i, -s):
                        continue
                    nxt.append((letter, arc.image(mat)))
            arcs = nxt
        return [arc for _, arc in arcs]


def verify_ping_pong(
    matrices: Sequence[MappingClass], powers: Optional[Sequence[int]] = None
) -> SchottkyGroup:
    """Build and exactly verify an interval certificate for the given
    generators (raised to optional powers).

    Raises PingPongError naming the offending generator or pair when the
    configuration is not ping-pong at the given powers.
    """
    if powers is None:
        powers = [1] * len(matrices)
    gens = [m.power(k) for m, k in zip(matrices, powers)]
    fixed = []
    for idx, g in enumerate(gens):
        if abs(g.trace) <= 2:
            raise PingPongError(f"generator {idx} is not hyperbolic (|trace| <= 2)")
        fixed.append(_fixed_pair_exactish(g))
    # shared fixed points mean shared axes: not a free ping-pong basis
    flat = []
    for idx, (p, m) in enumerate(fixed):
        flat.append((p, idx, "+"))
        flat.append((m, idx, "-"))
    for i in range(len(flat)):
        for j in range(i + 1, len(flat)):
            if abs(flat[i][0] - flat[j][0]) < 1e-9:
                raise PingPongError(
                    f"generators {flat[i][1]} and {flat[j][1]} share a fixed point "
                    "(coinciding arcs; not a free ping-pong pair)"
                )
    # two rational separators per gap (a narrow mid-gap band), so the arcs
    # are wide, pairwise disjoint, and leave the circle partly uncovered
    order = sorted(range(len(flat)), key=lambda k: flat[k][0])
    m = len(order)
    last_error = None
    for attempt in range(4):
        shift = 0.015 * attempt
        right_cut, left_cut = [None] * m, [None] * m
        for k in range(m):
            lo = flat[order[k]][0]
            if k + 1 < m:
                hi = flat[order[k + 1]][0]
                w = hi - lo
                right_cut[k] = _simple_rational_between(
                    lo + (0.40 + shift) * w, lo + (0.47 + shift) * w
                )
                left_cut[k + 1] = _simple_rational_between(
                    lo + (0.53 + shift) * w, lo + (0.60 + shift) * w
                )
            else:
                # wrap gap through infinity
                right_cut[k] = _simple_rational_between(lo + 0.8 + shift, lo + 1.6 + shift)
                left_cut[0] = _simple_rational_between(
                    flat[order[0]][0] - 1.6 - shift, flat[order[0]][0] - 0.8 - shift
                )
        arcs = {}
        for k, idx in enumerate(order):
            arcs[(flat[idx][1], flat[idx][2])] = BoundaryArc(left_cut[k], right_cut[k])
        attracting = [arcs[(i, "+")] for i in range(len(gens))]
        repelling = [arcs[(i, "-")] for i in range(len(gens))]
        group = SchottkyGroup(
            generators=gens,
            attracting=attracting,
            repelling=repelling,
            base_matrices=list(matrices),
            powers=list(powers),
        )
        try:
            _check_certificate(group)
            return group
        except PingPongError as err:
            last_error = err
    raise last_error


def _fixed_pair_exactish(g: MappingClass):
    """(attracting, repelling) fixed points as floats."""
    from .geometry import _fixed_points

    return _fixed_points(g)


def _simple_rational_between(lo: float, hi: float) -> Fraction:
    """A low-denominator rational strictly inside (lo, hi), with a safety
    margin against the float approximation of the algebraic endpoints."""
    if not lo < hi:
        raise PingPongError(f"empty separator gap ({lo}, {hi})")
    margin = 1e-6 * (hi - lo)
    mid = Fraction((lo + hi) / 2.0)
    for bits in range(1, 60):
        q = mid.limit_denominator(1 << bits)
        if lo + margin < q < hi - margin:
            return q
    return mid


def _check_certificate(group: SchottkyGroup) -> None:
    arcs = group.certificate_arcs()
    labels = []
    for i in range(group.rank):
        labels.append(f"attracting[{i}]")
        labels.append(f"repelling[{i}]")
    for i in range(len(arcs)):
        for j in range(i + 1, len(arcs)):
            if arcs[i].closure_intersects(arcs[j]):
                raise PingPongError(
                    f"certificate arcs overlap: {labels[i]} and {labels[j]}"
                )
    for i, g in enumerate(group.generators):
        for mat, src, dst in (
            (g, group.repelling[i], group.attracting[i]),
            (g.inverse(), group.attracting[i], group.repelling[i]),
        ):
            image = src.complement().image(mat.tuple)
            if not dst.contains_arc(image, strict=True):
                raise PingPongError(
                    f"generator {i}: image of the complement of its "
                    f"{'repelling' if mat is g else 'attracting'} arc is not "
                    "strictly inside the target arc"
                )


# -- group definition files --------------------------------------------------


def group_to_json(group: SchottkyGroup) -> dict:
    def arc_repr(arc):
        def side(p):
            if is_inf(p):
                return "inf"
            fr = Fraction(p)
            return [fr.numerator, fr.denominator]

        return [side(arc.lo), side(arc.hi)]

    return {
        "generators": [list(m.tuple) for m in (group.base_matrices or group.generators)],
        "powers": group.powers or [1] * group.rank,
        "certificate": {
            "attracting": [arc_repr(a) for a in group.attracting],
            "repelling": [arc_repr(a) for a in group.repelling],
        },
    }


def group_from_json(data: dict) -> SchottkyGroup:
    mats = [MappingClass(*row) for row in data["generators"]]
    powers = data.get("powers")
    return verify_ping_pong(mats, powers)


def load_group(path: str) -> SchottkyGroup:
    with open(path) as fh:
        return group_from_json(json.load(fh))


def standard_pair(power: int = 3) -> SchottkyGroup:
    """The reference group: <A^k, B^k> with A = [[2,1],[1,1]], B = [[1,1],[1,2]]."""
    return verify_ping_pong(
        [MappingClass(2, 1, 1, 1), MappingClass(1, 1, 1, 2)], [power, power]
    )


# ---------------------------------------------------------------------------
# orbit balls


@dataclass
class OrbitPoint:
    word: Word
    matrix: MappingClass
    point: TeichPoint
    dist: float


class PruningModel:
    """Additive lower bound on word displacement.

    increments[prev][next] is the minimum observed distance gain when the
    letter ``next`` follows ``prev``; the defect constant absorbs how far
    the additive model can overshoot the true distance, measured on a full
    low-depth enumeration and inflated for safety.
    """

    def __init__(self, group: SchottkyGroup, x: TeichPoint, y: TeichPoint, depth: int = 4):
        self.letters = group.letters()
        self.index = {letter: k for k, letter in enumerate(self.letters)}
        n = len(self.letters)
        inc = [[math.inf] * n for _ in range(n + 1)]  # row n: first letter
        d_base = distance(x, y)
        sample = list(self._enumerate_to_depth(group, x, y, depth))
        dist_of = {(): d_base}
        for word, d in sample:
            dist_of[word.letters] = d
        for word, d in sample:
            prev_row = self.index[word.letters[-2]] if len(word) > 1 else n
            col = self.index[word.letters[-1]]
            gain = d - dist_of[word.letters[:-1]]
            if gain < inc[prev_row][col]:
                inc[prev_row][col] = gain
        # clamp negatives so prefix bounds stay monotone
        self.inc = [[max(0.0, v) if v != math.inf else 0.0 for v in row] for row in inc]
        # worst additive overshoot on the same enumeration, inflated for safety
        defect = 0.0
        for word, d in sample:
            defect = max(defect, self._increment_sum(word) + d_base - d)
        self.defect = 1.5 * defect + 0.25
        self.base = d_base

    def _enumerate_to_depth(self, group, x, y, depth):
        stack = [(Word(), y)]
        while stack:
            word, pt = stack.pop()
            if word.letters:
                yield word, distance(x, pt)
            if len(word) == depth:
                continue
            for letter in self.letters:
                if word.letters and (letter[0] == word.letters[-1][0] and letter[1] == -word.letters[-1][1]):
                    continue
                nxt = word.append(letter)
                stack.append((nxt, nxt.matrix(group.generators).act_point(y)))

    def _increment_sum(self, word: Word) -> float:
        total, prev = 0.0, len(self.letters)
        for letter in word.letters:
            col = self.index[letter]
            total += self.inc[prev][col]
            prev = col
        return total

    def lower_bound(self, inc_sum: float) -> float:
        return self.base + inc_sum - self.defect


def enumerate_ball(
    group: SchottkyGroup,
    x: TeichPoint,
    y: TeichPoint,
    radius: float,
    node_cap: int = DEFAULT_NODE_CAP,
    pruned: bool = True,
) -> list[OrbitPoint]:
    """All words with distance(x, word * y) <= radius, sorted canonically.

    Depth-first with the additive pruning model; traversal order is by
    generator index then sign, so results are deterministic.
    """
    model = PruningModel(group, x, y) if pruned else None
    out = []
    visited = 0
    letters = group.letters()
    idx = {letter: k for k, letter in enumerate(letters)}
    identity = MappingClass(1, 0, 0, 1)
    stack = [(Word(), identity, 0.0)]
    while stack:
        word, mat, inc_sum = stack.pop()
        visited += 1
        if visited > node_cap:
            raise BudgetExceeded(
                f"ball enumeration exceeded {node_cap} nodes", partial=out, visited=visited
            )
        pt = mat.act_point(y)
        d = distance(x, pt)
        if d <= radius:
            out.append(OrbitPoint(word, mat, pt, d))
        children = []
        for letter in letters:
            if word.letters and (
                letter[0] == word.letters[-1][0] and letter[1] == -word.letters[-1][1]
            ):
                continue
            ninc = inc_sum
            if model is not None:
                prev = idx[word.letters[-1]] if word.letters else len(letters)
                ninc = inc_sum + model.inc[prev][idx[letter]]
                if model.lower_bound(ninc) > radius:
                    continue
            children.append((word.append(letter), mat @ group.letter_matrix(letter), ninc))
        stack.extend(reversed(children))
    out.sort(key=lambda op: (len(op.word), op.word.letters))
    return out


def brute_force_ball(
    group: SchottkyGroup, x: TeichPoint, y: TeichPoint, radius: float, max_len: int
) -> list[OrbitPoint]:
    """Unpruned enumeration of all reduced words up to max_len (oracle)."""
    out = []
    identity = MappingClass(1, 0, 0, 1)
    stack = [(Word(), identity)]
    while stack:
        word, mat = stack.pop()
        pt = mat.act_point(y)
        d = distance(x, pt)
        if d <= radius:
            out.append(OrbitPoint(word, mat, pt, d))
        if len(word) == max_len:
            continue
        for letter in group.letters():
            if word.letters and (
                letter[0] == word.letters[-1][0] and letter[1] == -word.letters[-1][1]
            ):
                continue
            stack.append((word.append(letter), mat @ group.letter_matrix(letter)))
    out.sort(key=lambda op: (len(op.word), op.word.letters))
    return out


def ball_counts(points: Iterable[OrbitPoint], ladder: Sequence[float]) -> list[int]:
    dists = sorted(op.dist for op in points)
    out = []
    k = 0
    for r in ladder:
        while k < len(dists) and dists[k] <= r:
            k += 1
        out.append(k)
    return out


# ---------------------------------------------------------------------------
# full-lattice calibration sieve


def lattice_ball_counts(ladder: Sequence[float], node_cap: int = DEFAULT_NODE_CAP) -> list[int]:
    """Orbit counts of the full integer lattice around the square point.

    Counts matrices (up to overall sign) with distance(i, M i) <= R via the
    identity cosh(2 d) = ||M||_F^2 / 2, enumerating the (b, d) solution line
    for each column pair (a, c).  Exact integer thresholding.
    """
    rmax = max(ladder)
    bound = 2.0 * math.cosh(2.0 * rmax)
    thresholds = [2.0 * math.cosh(2.0 * r) for r in ladder]
    limit = int(math.isqrt(int(bound)))
    counts = [0] * len(ladder)
    visited = 0
    for a in range(-limit, limit + 1):
        for c in range(-limit, limit + 1):
            if a * a + c * c > bound or (a == 0 and c == 0):
                continue
            if math.gcd(a, c) != 1:
                continue
            visited += 1
            if visited > node_cap:
                raise BudgetExceeded("lattice sieve exceeded node cap", visited=visited)
            b0, d0 = _solve_unimodular(a, c)
            # general solution (b0 + t a, d0 + t c); ||M||^2 quadratic in t
            qa = a * a + c * c
            qb = 2 * (a * b0 + c * d0)
            base = a * a + c * c + b0 * b0 + d0 * d0
            for k, thr in enumerate(thresholds):
                rem = thr - base + qb * qb / (4 * qa)
                if rem < 0:
                    continue
                half = math.sqrt(rem / qa)
                center = -qb / (2 * qa)
                lo = math.ceil(center - half - 1e-12)
                hi = math.floor(center + half + 1e-12)
                # exact re-check at the boundary integers
                while lo <= hi and base + qb * lo + qa * lo * lo > thr:
                    lo += 1
                while hi >= lo and base + qb * hi + qa * hi * hi > thr:
                    hi -= 1
                if hi >= lo:
                    counts[k] += hi - lo + 1
    return [c // 2 for c in counts]  # identify M and -M


def _solve_unimodular(a: int, c: int):
    """Some (b, d) with a d - b c = 1 for coprime (a, c)."""
    g, u, v = _ext_gcd(a, c)
    assert g == 1
    # a u + c v = 1 -> choose d = u, b = -v
    return -v, u


def _ext_gcd(a: int, b: int):
    old_r, r = a, b
    old_s, s = 1, 0
    old_t, t = 0, 1
    while r:
        q = old_r // r
        old_r, r = r, old_r - q * r
        old_s, s = s, old_s - q * s
        old_t, t = t, old_t - q * t
    if old_r < 0:
        old_r, old_s, old_t = -old_r, -old_s, -old_t
    return old_r, old_s, old_t


# ---------------------------------------------------------------------------
# growth functionals


@dataclass
class ExponentFit:
    value: float
    ci: float
    rungs: list
    counts: list


def critical_exponent(
    counts: Sequence[int], ladder: Sequence[float], top_fraction: float = 0.5
) -> ExponentFit:
    """Least-squares slope of log N(R) over the top part of the ladder, with
    a residual-based 95% confidence interval."""
    pts = [(r, n) for r, n in zip(ladder, counts) if n > 0]
    if len(pts) < 3:
        raise GeometryError("insufficient ladder depth for exponent fit")
    cut = len(pts) - max(2, int(round(len(pts) * top_fraction)))
    pts = pts[cut:]
    xs = np.array([p[0] for p in pts])
    ys = np.log(np.array([float(p[1]) for p in pts]))
    slope, intercept = np.polyfit(xs, ys, 1)
    resid = ys - (slope * xs + intercept)
    n = len(xs)
    if n > 2:
        sx = float(np.sum((xs - xs.mean()) ** 2))
        se = math.sqrt(float(np.sum(resid**2)) / (n - 2) / sx)
    else:
        se = 0.0
    return ExponentFit(float(slope), 1.96 * se, list(xs), [int(p[1]) for p in pts])


def poincare_series(
    points: Sequence[OrbitPoint], s: float, cutoff: float
) -> float:
    """Partial sum of exp(-s d(x, gamma y)) over the enumerated ball."""
    return sum(math.exp(-s * op.dist) for op in points if op.dist <= cutoff)


def poincare_abscissa(points: Sequence[OrbitPoint], s0: float = 1.0) -> float:
    """Abscissa estimate from the decay slope of unit-annulus partial sums.

    With W_k = sum over the annulus (k, k+1] of exp(-s0 d), the annulus sums
    behave like exp((h - s0) k), so the fitted slope recovers h - s0.
    """
    if not points:
        raise GeometryError("empty orbit sample")
    top = max(op.dist for op in points)
    nbins = int(math.floor(top)) + 1
    sums = [0.0] * nbins
    for op in points:
        if op.word.is_identity:
            continue
        k = min(nbins - 1, int(math.floor(op.dist)))
        sums[k] += math.exp(-s0 * op.dist)
    pts = [(k + 0.5, w) for k, w in enumerate(sums) if w > 0]
    if len(pts) < 3:
        raise GeometryError("insufficient annulus data")
    pts = pts[len(pts) // 2 - 1 :]
    xs = np.array([p[0] for p in pts])
    ys = np.log(np.array([p[1] for p in pts]))
    slope = float(np.polyfit(xs, ys, 1)[0])
    return s0 + slope


def poincare_divergence_profile(
    points: Sequence[OrbitPoint], s: float, cutoffs: Sequence[float]
) -> list[float]:
    return [poincare_series(points, s, c) for c in cutoffs]


# ---------------------------------------------------------------------------
# conjugacy classes


@dataclass(frozen=True)
class ConjClass:
    word: tuple  # canonical (lex-minimal) rotation of the cyclic word
    primitive: bool
    trace: int
    length: float

    def spell(self, names=("a", "b")) -> str:
        return Word(self.word).spell(names)


def enumerate_conjugacy_classes(
    group: SchottkyGroup,
    l_max: float,
    include_imprimitive: bool = False,
    node_cap: int = DEFAULT_NODE_CAP,
) -> list[ConjClass]:
    """One representative per conjugacy class with translation length <= l_max.

    Conjugacy classes of a free product of cyclics are cyclic words; the
    enumeration walks cyclically reduced words in canonical rotation order
    and stops at the word length where even the shortest class is too long.
    """
    letters = group.letters()
    classes = {}
    visited = 0
    length = 1
    while True:
        found_short = False
        for form in _canonical_cyclic_words(letters, length):
            visited += 1
            if visited > node_cap:
                raise BudgetExceeded("conjugacy enumeration exceeded node cap", visited=visited)
            mat = Word(form).matrix(group.generators)
            tr = abs(mat.trace)
            if tr <= 2:
                continue
            ell = translation_length(mat).length
            if ell <= l_max + 1e-12:
                found_short = True
                prim = _is_primitive(form)
                if prim or include_imprimitive:
                    classes[form] = ConjClass(form, prim, mat.trace, ell)
        if not found_short and length > 1:
            break
        length += 1
        if length > 64:
            break
    return sorted(classes.values(), key=lambda c: (c.length, c.word))


def _canonical_cyclic_words(letters, length) -> Iterator[tuple]:
    """Cyclically reduced words of given length, one canonical rotation each."""

    def backtrack(word):
        if len(word) == length:
            if length > 1:
                i, s = word[0]
                j, t = word[-1]
                if i == j and s == -t:
                    return
            form = min(tuple(word[k:] + word[:k]) for k in range(length))
            if form == tuple(word):
                yield tuple(word)
            return
        for letter in letters:
            if word and (letter[0] == word[-1][0] and letter[1] == -word[-1][1]):
                continue
            word.append(letter)
            yield from backtrack(word)
            word.pop()

    yield from backtrack([])


def _is_primitive(form: tuple) -> bool:
    n = len(form)
    for period in range(1, n):
        if n % period == 0 and form[period:] + form[:period] == form:
            return False
    return True


def class_counts(classes: Sequence[ConjClass], ladder: Sequence[float]) -> list[int]:
    lengths = sorted(c.length for c in classes)
    out = []
    k = 0
    for r in ladder:
        while k < len(lengths) and lengths[k] <= r + 1e-12:
            k += 1
        out.append(k)
    return out
