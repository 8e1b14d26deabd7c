import math

import numpy as np
import pytest

from penalty_forge.convex_core import halfspace_plus
from penalty_forge.errors import ConfigError, GeometryError
from penalty_forge.geometry2d import (
    ConvexPolygon,
    Degenerate,
    Disk,
    FrustumTable,
    LeveledBody,
    blend_polygon,
    clip,
    cone_inclusion_check,
    containment_margin,
    convex_hull,
    disk_polygon,
    frustum_eval,
    gauge,
    minkowski_blend_membership,
    offset_body,
    steepness_bound,
    tangent_disk,
)


def square(h, c=(0.0, 0.0)):
    c = np.asarray(c, dtype=float)
    return ConvexPolygon(c + h * np.array([[-1, -1], [1, -1], [1, 1], [-1, 1]], dtype=float))


def random_polygon(rng, n=12, center=(0.0, 0.0), scale=1.0):
    while True:
        P = convex_hull(np.asarray(center) + scale * rng.normal(size=(n, 2)))
        if isinstance(P, ConvexPolygon) and P.area > 0.05 * scale**2:
            return P


def test_hull_drops_interior_point():
    P = convex_hull([(0, 0), (1, 0), (0, 1), (0.2, 0.2)])
    assert sorted(map(tuple, P.vertices)) == [(0, 0), (0, 1), (1, 0)]


def test_hull_orientation_and_degenerate_tags():
    P = convex_hull(np.random.default_rng(3).normal(size=(40, 2)))
    assert P.area > 0
    seg = convex_hull([(0, 0), (1, 1), (2, 2)])
    assert isinstance(seg, Degenerate) and seg.kind == "segment"
    assert convex_hull([(1, 1), (1, 1)]).kind == "point"


def test_hull_idempotent():
    rng = np.random.default_rng(5)
    for _ in range(50):
        P = convex_hull(rng.normal(size=(30, 2)))
        np.testing.assert_array_equal(convex_hull(P.vertices).vertices, P.vertices)


def test_hull_area_in_unit_disk():
    rng = np.random.default_rng(11)
    r = np.sqrt(rng.uniform(size=100))
    t = rng.uniform(0, 2 * np.pi, 100)
    P = convex_hull(np.column_stack([r * np.cos(t), r * np.sin(t)]))
    x, y = P.vertices.T
    shoelace = 0.5 * abs(np.dot(x, np.roll(y, -1)) - np.dot(np.roll(x, -1), y))
    assert P.area == pytest.approx(shoelace)
    assert P.area <= math.pi


def test_hull_keeps_cocircular_points():
    t = 2 * np.pi * np.arange(200) / 200
    P = convex_hull(np.column_stack([np.cos(t), np.sin(t)]))
    assert len(P) == 200


def test_clip_examples():
    U = ConvexPolygon([[0, 0], [1, 0], [1, 1], [0, 1]])
    R = clip(U, halfspace_plus([0.5, 0], [1, 0]))
    assert sorted(map(tuple, np.round(R.vertices, 12))) == [(0.5, 0), (0.5, 1), (1, 0), (1, 1)]
    assert clip(U, halfspace_plus([3, 3], [0, 0])) is U
    assert clip(U, halfspace_plus([2, 0], [1, 0])) is None


def test_clip_commutes_and_shrinks():
    rng = np.random.default_rng(2)
    for _ in range(100):
        P = random_polygon(rng)
        h1 = halfspace_plus(rng.normal(size=2) * 0.3, rng.normal(size=2))
        h2 = halfspace_plus(rng.normal(size=2) * 0.3, rng.normal(size=2))
        a = clip(P, h1)
        b = clip(P, h2)
        if not isinstance(a, ConvexPolygon) or not isinstance(b, ConvexPolygon):
            continue
        ab, ba = clip(a, h2), clip(b, h1)
        if isinstance(ab, ConvexPolygon) and isinstance(ba, ConvexPolygon):
            assert len(ab) == len(ba)
            for v in ab.vertices:
                assert np.min(np.linalg.norm(ba.vertices - v, axis=1)) < 1e-9
            assert np.all(P.excess(ab.vertices) <= 1e-9)


def test_disk_polygon():
    with pytest.raises(ConfigError):
        disk_polygon(Disk([0, 0], 1.0), 4)
    P = disk_polygon(Disk([0, 0], 1.0), 8)
    assert len(P) == 8
    np.testing.assert_allclose(P.vertices[0], [1, 0])
    Q = disk_polygon(Disk([2, -1], 3.0), 64)
    np.testing.assert_allclose(np.linalg.norm(Q.vertices - [2, -1], axis=1), 3.0, rtol=1e-15)
    assert disk_polygon(Disk([0, 0], 1.0), 64).area >= 0.998 * math.pi
    assert disk_polygon(Disk([0, 0], 1.0), 64).area == pytest.approx(32 * math.sin(2 * math.pi / 64))


def test_tangent_disk():
    np.testing.assert_allclose(tangent_disk([0, 0], [0, 1], 1.0).center, [0, 1])
    np.testing.assert_allclose(tangent_disk([1, 1], [3, 4], 5.0).center, [4, 5])
    with pytest.raises(GeometryError):
        tangent_disk([0, 0], [0, 0], 1.0)


def test_offset_square():
    U = square(0.5, (0.5, 0.5))
    E = offset_body(U, 1.0, 8)
    assert E.contains([1.99, 0.5])
    assert containment_margin(U, E) > 0


@pytest.mark.parametrize("arc_k", [2, 8, 64])
def test_offset_area_matches_minkowski_formula(arc_k):
    # square ⊕ regular 4m-gon with a vertex on each axis: area = 1 + 4 + area(4m-gon)
    m = 4 * arc_k
    E = offset_body(square(0.5), 1.0, arc_k)
    assert E.area == pytest.approx(5 + 0.5 * m * math.sin(2 * math.pi / m), rel=1e-12)
    if arc_k == 64:
        assert E.area == pytest.approx(5 + math.pi, abs=2e-3)


def test_offset_strictly_contains_random_polygons():
    rng = np.random.default_rng(4)
    for _ in range(50):
        P = random_polygon(rng)
        r = rng.uniform(1e-3, 1)
        assert containment_margin(P, offset_body(P, r)) > 0.9 * r * math.cos(math.pi / 32)


def test_offset_vertex_count_stays_bounded():
    P0 = P = random_polygon(np.random.default_rng(8))
    for _ in range(10):
        P = offset_body(P, 0.1)
    # fan directions share one lattice, so offsets add at most 32 vertices in total
    assert len(P) <= len(P0) + 32


def test_gauge_examples():
    S = square(1.0)
    assert gauge(S, [0, 0], [0.5, 0]) == 0.5
    assert gauge(S, [0, 0], [1, 0.3]) == pytest.approx(1.0)
    assert gauge(S, [0, 0], [0, 0]) == 0.0
    with pytest.raises(GeometryError):
        gauge(S, [1, 0], [0, 0])


def test_gauge_homogeneous_and_convex():
    rng = np.random.default_rng(6)
    for _ in range(100):
        P = random_polygon(rng)
        a = P.centroid
        X = rng.normal(size=(10, 2)) * 2
        Y = rng.normal(size=(10, 2)) * 2
        for s in (0.3, 2.7):
            np.testing.assert_allclose(gauge(P, a, a + s * (X - a)), s * gauge(P, a, X), rtol=1e-12, atol=1e-12)
        mid = gauge(P, a, 0.5 * (X + Y))
        assert np.all(mid <= 0.5 * (gauge(P, a, X) + gauge(P, a, Y)) + 1e-9)


def test_blend_membership():
    D1, D2 = square(1.0), square(3.0)
    assert minkowski_blend_membership(D1, D2, 0.5, [2, 0])
    assert not minkowski_blend_membership(D1, D2, 0.5, [2.1, 0])
    assert minkowski_blend_membership(D1, D2, 0.0, [1, 1]) and not minkowski_blend_membership(D1, D2, 0.0, [1.1, 0])
    assert minkowski_blend_membership(D1, D2, 1.0, [3, 3]) and not minkowski_blend_membership(D1, D2, 1.0, [3.1, 0])


def test_frustum_square_example():
    bottom, top = LeveledBody(square(1.0), 1.0), LeveledBody(square(3.0), 2.0)
    assert frustum_eval(bottom, top, [2, 0]) == pytest.approx(1.5, abs=1e-12)
    assert frustum_eval(bottom, top, [1, 0.4]) == 1.0
    assert frustum_eval(bottom, top, [3, -2]) == pytest.approx(2.0, abs=1e-12)
    with pytest.raises(GeometryError):
        frustum_eval(bottom, top, [0, 0])
    with pytest.raises(GeometryError):
        frustum_eval(bottom, top, [4, 0])
    with pytest.raises(GeometryError):
        frustum_eval(top, bottom, [2, 0])


def _annulus_samples(rng, bottom, top, n):
    a = bottom.polygon.centroid
    out = []
    while len(out) < n:
        x = a + rng.normal(size=2) * 3
        if bottom.polygon.excess(x)[0] >= 0 and top.polygon.excess(x)[0] <= 0:
            out.append(x)
    return np.array(out)


def test_closed_form_lateral_matches_bisection():
    # bisection rebuilds a hull per step, so keep this sample small
    rng = np.random.default_rng(9)
    for _ in range(8):
        D1 = random_polygon(rng, scale=0.5)
        D2 = offset_body(convex_hull(np.vstack([D1.vertices, rng.normal(size=(4, 2)) * 1.5])), 0.2)
        bottom, top = LeveledBody(D1, 1.0), LeveledBody(D2, 1.0 + rng.uniform(0.5, 5))
        table = FrustumTable(bottom, top)
        X = _annulus_samples(rng, bottom, top, 6)
        slow = np.array([frustum_eval(bottom, top, x) for x in X])
        np.testing.assert_allclose(table.levels(X), slow, atol=1e-9)


def test_frustum_radially_convex():
    rng = np.random.default_rng(10)
    for _ in range(30):
        D1 = random_polygon(rng, scale=0.5)
        D2 = offset_body(D1, rng.uniform(0.1, 1.0))
        table = FrustumTable(LeveledBody(D1, 1.0), LeveledBody(D2, 3.0))
        a = D1.centroid
        d = rng.normal(size=2)
        t_in = 1.0 / np.max(D1.normals @ d / (D1.offsets - D1.normals @ a))
        t_out = 1.0 / np.max(D2.normals @ d / (D2.offsets - D2.normals @ a))
        ts = np.linspace(t_in, t_out, 50)
        v = table.levels(a + ts[:, None] * d)
        assert np.all(v[:-2] + v[2:] - 2 * v[1:-1] >= -1e-6)


def test_blend_sections_strictly_nested():
    rng = np.random.default_rng(12)
    for _ in range(30):
        D1 = random_polygon(rng, scale=0.5)
        D2 = offset_body(D1, rng.uniform(0.05, 1.0))
        s1, s2 = np.sort(rng.uniform(0, 1, 2))
        assert containment_margin(blend_polygon(D1, D2, s1), blend_polygon(D1, D2, s2)) > 0


def test_steepness_examples():
    base = LeveledBody(square(2.0), 1.0)
    assert steepness_bound([0, 0], 0.0, base) == 0.5
    assert steepness_bound([0, 0], 1.0, base) == 0.0
    with pytest.raises(GeometryError):
        steepness_bound([5, 0], 0.0, base)


def test_frustum_steepness_bounds_sampled_slopes():
    rng = np.random.default_rng(13)
    D1 = random_polygon(rng, scale=0.5)
    D2 = offset_body(D1, 0.4)
    table = FrustumTable(LeveledBody(D1, 1.0), LeveledBody(D2, 4.0))
    X = _annulus_samples(rng, table.bottom, table.top, 400)
    v = table.levels(X)
    i, j = rng.integers(0, len(X), (2, 2000))
    ok = i != j
    slopes = np.abs(v[i] - v[j])[ok] / np.linalg.norm(X[i] - X[j], axis=1)[ok]
    assert slopes.max() <= table.steepness + 1e-9


@pytest.mark.parametrize("a,b,theta,delta", [
    ((0, 0), (1, 0), 0.5, 0.25),
    ((1, 2), (4, 6), 0.9, 0.1),
])
def test_cone_inclusion_examples(a, b, theta, delta):
    assert cone_inclusion_check(a, b, theta, delta, samples=1000)


def test_cone_inclusion_random_configurations():
    rng = np.random.default_rng(14)
    for _ in range(50):
        theta = rng.uniform(0.05, 0.95)
        delta = rng.uniform(0.01, 0.99) * theta
        assert cone_inclusion_check(rng.normal(size=2) * 3, rng.normal(size=2) * 3, theta, delta, 200, rng)


def test_cone_inclusion_precondition():
    with pytest.raises(ConfigError):
        cone_inclusion_check((0, 0), (1, 0), 0.5, 0.5)


def test_polygon_roundtrip():
    P = random_polygon(np.random.default_rng(15))
    Q = ConvexPolygon.from_dict(P.to_dict())
    np.testing.assert_array_equal(P.vertices, Q.vertices)
