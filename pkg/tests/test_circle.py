"""Boundary circle arithmetic: orientation, arcs, partitions."""

import math
from fractions import Fraction

import pytest

from teichlab.circle import (
    INF,
    BoundaryArc,
    angle_of,
    cyclic_sign,
    is_partition,
    mobius_boundary,
    partition_index,
    point_of_angle,
    refine_partition,
    uniform_partition,
)


def test_cyclic_sign_basic():
    assert cyclic_sign(0, 1, INF) == 1
    assert cyclic_sign(0, INF, 1) == -1
    assert cyclic_sign(-1, 0, 1) == 1
    assert cyclic_sign(1, 0, -1) == -1
    assert cyclic_sign(0, 0, 1) == 0


def test_cyclic_sign_exact_fractions():
    assert cyclic_sign(Fraction(1, 3), Fraction(1, 2), Fraction(2, 3)) == 1
    assert cyclic_sign(Fraction(5), INF, Fraction(-5)) == 1


def test_arc_membership():
    arc = BoundaryArc(1, INF)
    assert arc.contains(2) and arc.contains(100)
    assert not arc.contains(0) and not arc.contains(-3)
    assert arc.contains(1) and not arc.contains(INF)  # half open
    wrap = BoundaryArc(2, -2)  # through infinity
    assert wrap.contains(INF) and wrap.contains(5) and wrap.contains(-3)
    assert not wrap.contains(0)


def test_arc_rejects_degenerate():
    with pytest.raises(ValueError):
        BoundaryArc(1, 1)


def test_arc_containment_and_intersection():
    big = BoundaryArc(0, 10)
    small = BoundaryArc(2, 3)
    assert big.contains_arc(small) and big.contains_arc(small, strict=True)
    assert not small.contains_arc(big)
    assert big.intersects(BoundaryArc(9, 12))
    assert not big.intersects(BoundaryArc(11, 12))
    assert big.complement() == BoundaryArc(10, 0)


def test_angle_monotone():
    pts = [-50.0, -1.0, 0.0, 0.5, 3.0, 40.0]
    angles = [angle_of(p) for p in pts]
    assert all(a < b for a, b in zip(angles, angles[1:]))
    assert angle_of(INF) == math.pi


def test_point_angle_roundtrip():
    for p in (-7.0, -0.2, 0.0, 1.0, 13.0):
        assert point_of_angle(angle_of(p)) == pytest.approx(p, abs=1e-12)
    assert point_of_angle(angle_of(INF)) == INF


def test_arc_width_and_midpoint():
    arc = BoundaryArc(-1, 1)
    assert arc.width() == pytest.approx(math.pi)
    assert arc.midpoint() == pytest.approx(0.0, abs=1e-12)
    assert BoundaryArc(1, -1).midpoint() == INF


def test_split_refines():
    arc = BoundaryArc(0, INF)
    parts = arc.split(4)
    assert len(parts) == 4
    assert parts[0].lo == 0 and parts[-1].hi == INF
    assert sum(p.width() for p in parts) == pytest.approx(arc.width())


def test_uniform_partition_covers():
    arcs = uniform_partition(16)
    assert is_partition(arcs)
    for p in (0.0, 5.0, -3.3, INF):
        hits = [a.contains(p) for a in arcs]
        assert sum(hits) == 1
    finer = refine_partition(arcs, 2)
    assert len(finer) == 32 and is_partition(finer)


def test_partition_index():
    arcs = uniform_partition(8)
    assert partition_index(arcs, 0.37) >= 0
    assert partition_index(arcs, INF) >= 0


def test_mobius_boundary_exact():
    m = (2, 1, 1, 1)
    assert mobius_boundary(m, 1) == Fraction(3, 2)
    assert mobius_boundary(m, INF) == 2
    assert mobius_boundary(m, -1) == INF
    assert mobius_boundary((1, 1, 0, 1), Fraction(1, 2)) == Fraction(3, 2)


def test_arc_image_orientation():
    m = (2, 1, 1, 1)
    arc = BoundaryArc(0, 1)
    img = arc.image(m)
    assert img.lo == 1 and img.hi == Fraction(3, 2)
    inside = mobius_boundary(m, Fraction(1, 2))
    assert img.contains(inside)
