"""Weight spaces, the skew pairing, carried actions, stretch factors,
projective dynamics, and bounded independence certificates."""

import math
from fractions import Fraction

import pytest

from teichlab.exactalg import (
    char_poly,
    mat_vec,
    perron_root_enclosure,
    poly_gcd,
    rational_kernel,
)
from teichlab.traintrack import (
    NonPrimitiveAction,
    TrackError,
    TrainTrack,
    action_matrix,
    compose_actions,
    dilatation,
    genus2_track,
    lemma_limit_convergence,
    nonarith_check,
    proximality_and_limit_set,
    symplectic_form,
    torus_track,
    track_from_json,
    track_to_json,
)

PHI2 = (3 + math.sqrt(5)) / 2


@pytest.fixture(scope="module")
def torus():
    return torus_track()


@pytest.fixture(scope="module")
def torus_anosov(torus):
    return action_matrix(torus, [[2, 1], [1, 1]])


# -- exact algebra -----------------------------------------------------------


def test_char_poly_matches_numpy():
    import numpy as np

    mats = [[[2, 1], [1, 1]], [[1, 2, 0], [0, 1, 3], [4, 0, 1]], [[5, 2], [2, 1]]]
    for m in mats:
        exact = [float(c) for c in char_poly(m)]
        approx = np.poly(np.array(m, dtype=float))
        assert exact == pytest.approx(list(approx), rel=1e-12)


def test_poly_gcd():
    # (x-2)(x-3) and (x-2)(x-5)
    p = [1, -5, 6]
    q = [1, -7, 10]
    g = poly_gcd(p, q)
    assert g == [Fraction(1), Fraction(-2)]
    assert poly_gcd([1, 0, -1], [1, 1]) == [Fraction(1), Fraction(1)]
    assert len(poly_gcd([1, 0, 1], [1, 1])) == 1  # coprime


def test_perron_enclosure_quadratic():
    lo, hi = perron_root_enclosure([1, -3, 1])
    assert float(hi - lo) < 1e-12
    assert float(lo) <= PHI2 <= float(hi)


def test_kernel_dimension():
    rows = [[1, -1, 0], [0, 0, 0]]
    basis = rational_kernel(rows, 3)
    assert len(basis) == 2
    for vec in basis:
        assert vec[0] == vec[1]


# -- tracks ------------------------------------------------------------------


def test_torus_dimension(torus):
    assert len(torus.weight_space_basis()) == 2


def test_disconnected_branch_raises_or_grows():
    # an extra branch hanging on its own switch adds one dimension
    base = TrainTrack(3, (((0, 2), (1, 3)), ((4,), (5,))))
    assert len(base.weight_space_basis()) == 3


def test_genus2_dimension():
    track = genus2_track()
    assert track.branches == 18
    assert len(track.switches) == 12
    assert len(track.weight_space_basis()) == 6  # 6g - 6 at g = 2


def test_track_validation():
    with pytest.raises(TrackError):
        TrainTrack(2, (((0, 0), (1, 3)),))  # reused half-branch
    with pytest.raises(TrackError):
        TrainTrack(2, (((0,), (1,)),))  # missing half-branches


def test_track_json_roundtrip():
    t = genus2_track()
    assert track_from_json(track_to_json(t)) == t


# -- symplectic form ----------------------------------------------------------


def test_form_antisymmetric(torus):
    v, w = [2, 3], [5, 1]
    assert symplectic_form(torus, v, w) == -symplectic_form(torus, w, v)
    assert symplectic_form(torus, v, v) == 0


def test_form_matches_intersection_on_torus(torus):
    """Pinned calibration: the pairing of balanced weights equals v1 w2 -
    v2 w1 (the intersection number up to sign), fixing the global constant
    at one."""
    for v, w, expect in [([1, 0], [0, 1], 1), ([2, 1], [1, 1], 1), ([3, 1], [1, 2], 5)]:
        assert symplectic_form(torus, v, w) == expect


def test_form_invariance_exact(torus, torus_anosov):
    import random

    rng = random.Random(7)
    mat = torus_anosov.branch_matrix
    for _ in range(20):
        v = [rng.randrange(-9, 10), rng.randrange(-9, 10)]
        w = [rng.randrange(-9, 10), rng.randrange(-9, 10)]
        assert symplectic_form(torus, mat_vec(mat, v), mat_vec(mat, w)) == symplectic_form(
            torus, v, w
        )


def test_form_invariance_genus2_automorphism():
    track = genus2_track()
    basis = track.weight_space_basis()
    ident = [[1 if i == j else 0 for j in range(18)] for i in range(18)]
    act = action_matrix(track, ident)
    v = [sum(b[k] for b in basis[:3]) for k in range(18)]
    w = [sum(b[k] for b in basis[3:]) for k in range(18)]
    assert symplectic_form(track, mat_vec(ident, v), mat_vec(ident, w)) == symplectic_form(
        track, v, w
    )


def test_form_rejects_unbalanced(torus):
    track = genus2_track()
    with pytest.raises(TrackError):
        symplectic_form(track, [1] * 18, [0] * 18)


# -- carried actions -----------------------------------------------------------


def test_identity_action(torus):
    act = action_matrix(torus, [[1, 0], [0, 1]])
    assert act.induced == [[1, 0], [0, 1]]


def test_anosov_action(torus, torus_anosov):
    assert torus_anosov.induced == [[2, 1], [1, 1]]
    assert torus_anosov.positive_power == 1


def test_action_rejects_negative(torus):
    with pytest.raises(TrackError):
        action_matrix(torus, [[1, -1], [0, 1]])


def test_action_switch_preservation():
    track = genus2_track()
    # a matrix that scrambles weights without respecting switches
    bad = [[1 if (i + j) % 5 == 0 else 0 for j in range(18)] for i in range(18)]
    with pytest.raises(TrackError):
        action_matrix(track, bad)


def test_composition_functorial(torus, torus_anosov):
    b = action_matrix(torus, [[1, 1], [1, 2]])
    ab = compose_actions(torus_anosov, b)
    from teichlab.exactalg import mat_mul

    assert ab.induced == mat_mul(torus_anosov.induced, b.induced)


# -- dilatation -----------------------------------------------------------------


def test_dilatation_value(torus_anosov):
    d = dilatation(torus_anosov)
    assert float(d.hi - d.lo) < 1e-12
    assert float(d.lo) <= PHI2 <= float(d.hi)
    assert abs(d.value - 2.6180339887) < 1e-9  # quoted to ten digits
    assert d.char_poly == [1, -3, 1]


def test_dilatation_power_rule(torus, torus_anosov):
    d1 = dilatation(torus_anosov)
    for n in (2, 3):
        from teichlab.exactalg import mat_pow

        dn = dilatation(action_matrix(torus, mat_pow([[2, 1], [1, 1]], n)))
        assert dn.value == pytest.approx(d1.value**n, abs=1e-9)


def test_permutation_rejected(torus):
    with pytest.raises(NonPrimitiveAction):
        dilatation(action_matrix(torus, [[0, 1], [1, 0]]))


# -- proximality and limit sets --------------------------------------------------


def test_proximality_pair(torus, torus_anosov):
    b = action_matrix(torus, [[1, 1], [1, 2]])
    report = proximality_and_limit_set([torus_anosov, b], depth=4)
    assert all(flag for flag, _ in report.proximal)
    assert all(gap > 0.5 for _, gap in report.proximal)
    assert report.min_angle_to_complement > 0.1
    assert not report.invariant_subspace_found
    # limit points accumulate in the positive quadrant's projectivization
    for vec in report.samples:
        assert vec[0] * vec[1] > 0


def test_single_action_limit_point(torus, torus_anosov):
    import numpy as np

    mat = np.array(torus_anosov.induced, dtype=float)
    vals, vecs = np.linalg.eig(mat)
    dom = vecs[:, np.argmax(vals)]
    dom = dom / np.linalg.norm(dom)
    from teichlab.exactalg import mat_pow

    for d in (20, 25):
        power = np.array(mat_pow([[2, 1], [1, 1]], d), dtype=float)
        v = power @ np.ones(2)
        v = v / np.linalg.norm(v)
        assert min(np.linalg.norm(v - dom), np.linalg.norm(v + dom)) < 1e-8


def test_lemma_limit_convergence(torus, torus_anosov):
    b = action_matrix(torus, [[1, 1], [1, 2]])
    assert lemma_limit_convergence(torus_anosov, b, 30) < 1e-6


# -- nonarithmeticity -------------------------------------------------------------


def test_dependent_power(torus, torus_anosov):
    from teichlab.exactalg import mat_pow

    a2 = action_matrix(torus, mat_pow([[2, 1], [1, 1]], 2))
    verdict = nonarith_check(torus_anosov, a2)
    assert verdict.kind == "DEPENDENT" and (verdict.p, verdict.q) == (2, 1)


def test_dependent_equal_traces(torus, torus_anosov):
    b = action_matrix(torus, [[1, 1], [1, 2]])
    verdict = nonarith_check(torus_anosov, b)
    assert verdict.kind == "DEPENDENT" and (verdict.p, verdict.q) == (1, 1)


def test_independent_pair(torus, torus_anosov):
    c = action_matrix(torus, [[5, 2], [2, 1]])
    verdict = nonarith_check(torus_anosov, c, height=10**6, precision=50)
    assert verdict.kind == "INDEPENDENT-UP-TO" and verdict.height == 10**6
    assert verdict.log_ratio.startswith("1.83157")
    # cross-check the ratio at high precision: log(3 + 2 sqrt 2) / log phi^2
    import mpmath

    mpmath.mp.dps = 60
    ratio = mpmath.log(3 + 2 * mpmath.sqrt(2)) / mpmath.log((3 + mpmath.sqrt(5)) / 2)
    assert verdict.log_ratio[:12] == mpmath.nstr(ratio, 12)[:12]
