"""Group engine: certificates, orbit balls, pruning soundness, conjugacy."""

import math

import pytest

from teichlab.geometry import MappingClass, TeichPoint, distance, translation_length
from teichlab.schottky import (
    BudgetExceeded,
    PingPongError,
    Word,
    ball_counts,
    brute_force_ball,
    class_counts,
    critical_exponent,
    enumerate_ball,
    enumerate_conjugacy_classes,
    group_from_json,
    group_to_json,
    lattice_ball_counts,
    poincare_abscissa,
    poincare_series,
    standard_pair,
    verify_ping_pong,
)

A = MappingClass(2, 1, 1, 1)
B = MappingClass(1, 1, 1, 2)
I = TeichPoint(0, 1)


@pytest.fixture(scope="module")
def group():
    return standard_pair(3)


@pytest.fixture(scope="module")
def ball8(group):
    return enumerate_ball(group, I, I, 8.0)


# -- words -------------------------------------------------------------------


def test_word_reduction():
    w = Word(((0, 1), (1, 1)))
    assert len(w.append((1, -1))) == 1
    with pytest.raises(ValueError):
        Word(((0, 1), (0, -1)))
    assert w.inverse().letters == ((1, -1), (0, -1))


def test_word_matrix(group):
    w = Word(((0, 1), (1, 1)))
    m = w.matrix(group.generators)
    assert m == group.generators[0] @ group.generators[1]


def test_cyclic_reduce():
    w = Word(((0, -1), (1, 1), (0, 1)))
    assert w.cyclic_reduce().letters == ((1, 1),)


# -- certificates ------------------------------------------------------------


def test_ping_pong_success(group):
    arcs = group.certificate_arcs()
    assert len(arcs) == 4
    for i in range(4):
        for j in range(i + 1, 4):
            assert not arcs[i].closure_intersects(arcs[j])


def test_ping_pong_shared_axis_fails():
    with pytest.raises(PingPongError):
        verify_ping_pong([A, A.power(2)], [3, 3])


def test_ping_pong_inverse_pair_fails():
    with pytest.raises(PingPongError):
        verify_ping_pong([A, A.inverse()], [3, 3])


def test_ping_pong_non_hyperbolic_fails():
    with pytest.raises(PingPongError):
        verify_ping_pong([MappingClass(1, 1, 0, 1), B])


def test_ping_pong_power_one_fails():
    # <A, B> at power one is not a Schottky basis
    with pytest.raises(PingPongError):
        verify_ping_pong([A, B])


def test_group_json_roundtrip(group):
    data = group_to_json(group)
    rebuilt = group_from_json(data)
    assert rebuilt.attracting == group.attracting
    assert rebuilt.repelling == group.repelling
    assert data["certificate"]["attracting"][0][0][1] > 0


# -- orbit balls -------------------------------------------------------------


def test_ball_radius_zero(group):
    ball = enumerate_ball(group, I, I, 0.0)
    assert len(ball) == 1 and ball[0].word.is_identity


def test_ball_r1_identity_only(group):
    ball = enumerate_ball(group, I, I, 1.0)
    oracle = brute_force_ball(group, I, I, 1.0, 6)
    assert [o.word.letters for o in ball] == [o.word.letters for o in oracle]
    assert len(ball) == 1


def test_pruning_soundness_r6(group):
    """Acceptance oracle: pruned equals brute force exactly up to R = 6."""
    pruned = enumerate_ball(group, I, I, 6.0)
    oracle = brute_force_ball(group, I, I, 6.0, 6)
    assert [o.word.letters for o in pruned] == [o.word.letters for o in oracle]


def test_pruning_soundness_deeper(group):
    pruned = enumerate_ball(group, I, I, 9.5)
    oracle = brute_force_ball(group, I, I, 9.5, 7)
    assert [o.word.letters for o in pruned] == [o.word.letters for o in oracle]


def test_counts_monotone(group, ball8):
    ladder = list(range(1, 9))
    counts = ball_counts(ball8, ladder)
    assert all(a <= b for a, b in zip(counts, counts[1:]))


def test_ball_budget_exceeded(group):
    with pytest.raises(BudgetExceeded) as err:
        enumerate_ball(group, I, I, 20.0, node_cap=50)
    assert err.value.visited > 50


def test_equivariance_sandwich(group, ball8):
    """Replacing y by gamma y shifts counts by at most d(y, gamma y)."""
    gamma = group.generators[0]
    gy = gamma.act_point(I)
    shift = distance(I, gy)
    n_base = len(enumerate_ball(group, I, I, 6.0))
    n_lo = len(enumerate_ball(group, I, gy, 6.0 - shift))
    n_hi = len(enumerate_ball(group, I, gy, 6.0 + shift))
    assert n_lo <= n_base <= n_hi


# -- exponents ---------------------------------------------------------------


def test_critical_exponent_schottky(group, ball8):
    ladder = list(range(1, 9))
    fit = critical_exponent(ball_counts(ball8, ladder), ladder)
    assert 0.0 < fit.value < 2.0


def test_critical_exponent_cyclic():
    cyclic = verify_ping_pong([A], [3])
    ball = enumerate_ball(cyclic, I, I, 40.0)
    ladder = [4.0 * k for k in range(1, 11)]
    fit = critical_exponent(ball_counts(ball, ladder), ladder)
    assert abs(fit.value) < 0.05


def test_poincare_series_large_s(group, ball8):
    total = poincare_series(ball8, 10.0, 8.0)
    assert abs(total - 1.0) < 1e-10


def test_poincare_divergence_heuristic(group):
    """Cauchy increments shrink above the exponent and grow below it."""
    ball = enumerate_ball(group, I, I, 16.0)
    h = poincare_abscissa(ball)
    cutoffs = [10.0, 12.0, 14.0, 16.0]
    for s, expect_shrink in ((h + 0.05, True), (h - 0.05, False)):
        sums = [poincare_series(ball, s, c) for c in cutoffs]
        increments = [b - a for a, b in zip(sums, sums[1:])]
        if expect_shrink:
            assert increments[-1] < increments[0]
        else:
            assert increments[-1] > 0.95 * increments[0]


def test_poincare_abscissa_consistent(group, ball8):
    ball16 = enumerate_ball(group, I, I, 16.0)
    ladder = list(range(1, 9))
    h_orbit = critical_exponent(ball_counts(ball8, ladder), ladder).value
    h_poincare = poincare_abscissa(ball16)
    assert abs(h_orbit - h_poincare) < 0.05


# -- lattice sieve -----------------------------------------------------------


def test_lattice_counts_monotone_and_calibrated():
    ladder = [1, 2, 3, 4, 5]
    counts = lattice_ball_counts(ladder)
    assert all(a < b for a, b in zip(counts, counts[1:]))
    fit = critical_exponent(counts, ladder)
    assert abs(fit.value - 2.0) < 0.25  # loose at this depth; R=7 in acceptance


def test_lattice_small_radius_exact():
    # the sieve counts group elements modulo sign: the stabilizer of the
    # square point in the projective lattice is {identity, quarter turn}
    counts = lattice_ball_counts([0.01])
    assert counts[0] == 2


# -- conjugacy classes -------------------------------------------------------


def test_conjugacy_below_shortest(group):
    assert enumerate_conjugacy_classes(group, 2.0) == []


def test_conjugacy_generators(group):
    classes = enumerate_conjugacy_classes(group, 3.0)
    lengths = {round(c.length, 6) for c in classes}
    expected = round(3 * math.log((3 + math.sqrt(5)) / 2), 6)
    assert lengths == {expected}
    assert len(classes) == 4  # a^3, a^-3, b^3, b^-3 as single letters


def test_conjugacy_rotation_invariance(group):
    classes = enumerate_conjugacy_classes(group, 9.0)
    for cls in classes:
        word = Word(cls.word)
        for k in range(1, len(cls.word)):
            rotated = Word(cls.word[k:] + cls.word[:k])
            assert abs(rotated.matrix(group.generators).trace) == abs(cls.trace)


def test_conjugacy_brute_force_counts(group):
    """Class counts match an independent cyclic-word enumeration to length 5."""
    import itertools

    letters = group.letters()
    brute = {}
    for n in range(1, 6):
        for combo in itertools.product(letters, repeat=n):
            ok = all(
                not (a[0] == b[0] and a[1] == -b[1])
                for a, b in zip(combo, combo[1:] + combo[:1])
            )
            if n == 1:
                ok = True
            if not ok:
                continue
            canon = min(tuple(combo[k:] + combo[:k]) for k in range(n))
            brute[canon] = n
    # primitive filter
    def primitive(form):
        n = len(form)
        return not any(
            n % p == 0 and form[p:] + form[:p] == form for p in range(1, n)
        )

    brute_prim = {f for f in brute if primitive(f)}
    lmax = 3.0 * 5 * math.log((3 + math.sqrt(5)) / 2) + 1.0
    classes = enumerate_conjugacy_classes(group, lmax)
    by_len = {}
    for c in classes:
        if len(c.word) <= 5:
            by_len.setdefault(len(c.word), set()).add(c.word)
    brute_by_len = {}
    for f in brute_prim:
        brute_by_len.setdefault(len(f), set()).add(f)
    for n in range(1, 6):
        assert by_len.get(n, set()) == brute_by_len.get(n, set())


def test_primitivity_audit(group):
    """With and without the primitivity filter the counts differ exactly by
    the proper-power classes."""
    lmax = 12.0
    with_imprim = enumerate_conjugacy_classes(group, lmax, include_imprimitive=True)
    primitive = [c for c in with_imprim if c.primitive]
    powers = [c for c in with_imprim if not c.primitive]
    assert len(with_imprim) == len(primitive) + len(powers)
    for c in powers:
        # every proper power's root is present with proportional length
        n = len(c.word)
        found = False
        for p in range(1, n):
            if n % p == 0 and c.word[p:] + c.word[:p] == c.word:
                root = c.word[:p]
                for r in primitive:
                    if r.word == min(
                        tuple(root[k:] + root[:k]) for k in range(len(root))
                    ):
                        assert c.length == pytest.approx(r.length * (n // p), rel=1e-9)
                        found = True
                break
        assert found


def test_translation_length_from_trace(group):
    classes = enumerate_conjugacy_classes(group, 3.0)
    for c in classes:
        m = Word(c.word).matrix(group.generators)
        assert c.length == pytest.approx(translation_length(m).length)


def test_class_counts_ladder(group):
    classes = enumerate_conjugacy_classes(group, 8.0)
    counts = class_counts(classes, [2.0, 3.0, 6.0, 8.0])
    assert counts[0] == 0
    assert counts[1] == 4
    assert all(a <= b for a, b in zip(counts, counts[1:]))
