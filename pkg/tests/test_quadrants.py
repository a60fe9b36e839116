import numpy as np
import pytest

from quadrisk.errors import BallDoesNotFit, DimensionMismatch, EmptyQuadrant, InvalidHalfSpace
from quadrisk.quadrants import (
    HalfSpace,
    Quadrant,
    contains,
    inscribe_ball,
    interior_point,
    is_nondegenerate,
    is_two_sided_constrained,
)


def test_halfspace_validation():
    with pytest.raises(InvalidHalfSpace):
        HalfSpace.of([0.0, 0.0], 1.0)
    with pytest.raises(InvalidHalfSpace):
        HalfSpace.of([1.0], float('inf'))


def test_empty_intersection_is_rejected():
    with pytest.raises(EmptyQuadrant):
        Quadrant.from_arrays([[1.0], [-1.0]], [2.0, -1.0])   # x >= 2 e x <= 1
    with pytest.raises(EmptyQuadrant):
        Quadrant.box([1.0], [0.0])


def test_mixed_dimensions_are_rejected():
    with pytest.raises(DimensionMismatch):
        Quadrant((HalfSpace.of([1.0], 0.0), HalfSpace.of([1.0, 0.0], 0.0)))


def test_membership_is_closed():
    q = Quadrant.box([0.0, 0.0], [1.0, 1.0])
    assert contains(q, [1.0, 1.0])
    assert contains(q, [0.0, 0.5])
    assert not contains(q, [1.0 + 1e-6, 0.5])
    pts = np.array([[0.5, 0.5], [2.0, 0.0]])
    assert q.contains_many(pts).tolist() == [True, False]


def test_interior_point_of_box_is_centre():
    q = Quadrant.box([0.0, 0.0], [2.0, 4.0])
    ip = interior_point(q)
    assert ip.has_interior
    assert ip.margin == pytest.approx(1.0)
    assert contains(q, ip.point)
    assert ip.point[0] == pytest.approx(1.0)


def test_interior_point_far_from_origin():
    q = Quadrant.box([5e6, 5e6], [5e6 + 2.0, 5e6 + 2.0])
    ip = interior_point(q)
    assert ip.has_interior
    assert ip.point == pytest.approx([5e6 + 1.0, 5e6 + 1.0])


def test_degenerate_quadrants():
    line = Quadrant.from_arrays([[1.0, -1.0], [-1.0, 1.0]], [0.0, 0.0])   # x = y
    assert not is_nondegenerate(line)
    ip = interior_point(line)
    assert not ip.has_interior
    assert contains(line, ip.point)

    point = Quadrant.singleton([1.0, 2.0])
    assert not is_nondegenerate(point)
    assert is_nondegenerate(Quadrant.halfspace([1.0, 0.0], 3.0))


def test_two_sided_constraint():
    assert is_two_sided_constrained(Quadrant.box([0.0], [1.0]))
    assert is_two_sided_constrained(Quadrant.from_arrays([[1.0, 1.0], [-1.0, -1.0]], [0.0, -1.0]))
    assert not is_two_sided_constrained(Quadrant.halfspace([1.0], 5.0))
    assert not is_two_sided_constrained(Quadrant.box([0.0, 0.0], [None, None]))
    # cone agudo: x >= 0, y >= 0, x + y >= 1
    assert not is_two_sided_constrained(Quadrant.from_arrays([[1.0, 0.0], [0.0, 1.0], [1.0, 1.0]], [0.0, 0.0, 1.0]))


def test_inscribe_ball():
    q = Quadrant.from_arrays([[1.0, 0.0], [0.0, 1.0]], [1.0, -2.0])    # x >= 1, y >= -2
    d = inscribe_ball(q, 3.0)
    assert d == pytest.approx([4.0, 1.0])
    assert np.all(q.normals @ d >= q.offsets + 3.0 - 1e-9)


def test_inscribe_ball_does_not_fit():
    with pytest.raises(BallDoesNotFit):
        inscribe_ball(Quadrant.box([0.0], [1.0]), 0.75)
    with pytest.raises(ValueError):
        inscribe_ball(Quadrant.halfspace([1.0], 0.0), -1.0)


def test_inscribed_ball_lies_inside_quadrant():
    rng = np.random.default_rng(83)
    for _ in range(20):
        n = int(rng.integers(1, 5))
        u = rng.normal(size=n)
        u /= np.linalg.norm(u)
        normals = []
        while len(normals) < int(rng.integers(1, 5)):
            v = rng.normal(size=n)
            v /= np.linalg.norm(v)
            if v @ u >= 0.2:
                normals.append(v)
        normals = np.array(normals)
        z = rng.normal(size=n)
        q = Quadrant.from_arrays(normals, normals @ z - rng.uniform(0.0, 2.0, size=len(normals)))
        radius = float(rng.uniform(0.1, 3.0))
        d = inscribe_ball(q, radius)
        directions = rng.normal(size=(1000, n))
        directions /= np.linalg.norm(directions, axis=1)[:, None]
        for w in directions:
            assert contains(q, d + radius * w)
