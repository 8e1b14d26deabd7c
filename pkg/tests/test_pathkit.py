import json

import numpy as np
import pytest

from penalty_forge.artifacts import dumps, path_from_dict, path_to_dict
from penalty_forge.convex_core import make_oracle, signed_margin
from penalty_forge.errors import ConfigError, DivergenceError, EmptyRegionError, PathOrderError
from penalty_forge.pathkit import (
    SearchPath,
    box_polygon,
    check_admissibility,
    group_by_value,
    ingest_path,
    run_gradient_descent,
    sort_path,
    ultimate_region,
)

HALF_SQ = make_oracle({"kind": "shifted-quadratic", "c": [0.0, 0.0]})


def fake_path(f_values, points=None, grads=None):
    n = len(f_values)
    P = np.zeros((n, 2)) if points is None else np.asarray(points, dtype=float)
    G = np.tile([1.0, 0.0], (n, 1)) if grads is None else np.asarray(grads, dtype=float)
    return SearchPath(P, np.asarray(f_values, dtype=float), G)


def test_gd_contraction():
    p = run_gradient_descent(HALF_SQ, [1, 0], 0.5, 3)
    np.testing.assert_array_equal(p.points, [[1, 0], [0.5, 0], [0.25, 0], [0.125, 0]])
    np.testing.assert_array_equal(p.f_values, [0.5, 0.125, 0.03125, 0.0078125])


def test_gd_unit_step_lands_on_minimizer():
    p = run_gradient_descent(HALF_SQ, [1, 0], 1.0, 3)
    np.testing.assert_array_equal(p.points[1:], np.zeros((3, 2)))
    assert p.is_degenerate(1) and not p.is_degenerate(0)


def test_gd_monotone_anisotropic():
    f = make_oracle({"kind": "quadratic", "A": [[1, 0], [0, 2]], "b": [1, 2]})
    p = run_gradient_descent(f, [0, 0], 0.1, 20)
    fv = np.array([f.value(x) for x in p.points])
    np.testing.assert_allclose(p.f_values, fv, rtol=0, atol=1e-12)
    assert np.all(np.diff(fv) < 0)


@pytest.mark.parametrize("spec", [
    {"kind": "shifted-quadratic", "c": [1.0, -2.0]},
    {"kind": "quadratic", "A": [[2, 1], [0, 1], [1, 1]], "b": [1, 0, 2]},
    {"kind": "logistic", "data": [[1, 2, 1], [2, -1, -1], [-1, 0.5, 1]]},
])
def test_gd_monotone_below_inverse_smoothness(spec):
    f = make_oracle(spec)
    p = run_gradient_descent(f, [2.0, 2.0], 1.0 / f.smoothness, 30)
    assert np.all(np.diff(p.f_values) <= 1e-15)


def test_gd_divergence():
    with pytest.raises(DivergenceError):
        run_gradient_descent(HALF_SQ, [1, 0], 3.0, 200)


def test_gd_bad_arguments():
    with pytest.raises(ConfigError):
        run_gradient_descent(HALF_SQ, [1, 0], 0.0, 3)
    with pytest.raises(ConfigError):
        run_gradient_descent(HALF_SQ, [1, 0, 0], 0.1, 3)


def test_ingest_minimizer_and_duplicates():
    p = ingest_path([[0, 0]], HALF_SQ)
    assert p.is_degenerate(0)
    q = ingest_path([[1, 0], [1, 0], [0.5, 0]], HALF_SQ)
    assert len(q) == 3
    assert group_by_value(q).groups == [(0, 1), (2,)]


def test_path_json_roundtrip():
    p = run_gradient_descent(HALF_SQ, [1, 1], 0.4, 5)
    q = path_from_dict(json.loads(dumps(path_to_dict(p))))
    np.testing.assert_array_equal(p.points, q.points)
    np.testing.assert_array_equal(p.f_values, q.f_values)
    np.testing.assert_array_equal(p.subgradients, q.subgradients)
    assert q.source == p.source and q.loss == p.loss


def test_grouping_examples():
    assert group_by_value(fake_path([3, 3, 2, 1])).groups == [(0, 1), (2,), (3,)]
    with pytest.raises(PathOrderError) as exc:
        group_by_value(fake_path([3, 2, 3]))
    assert exc.value.indices == [1, 2]
    assert group_by_value(fake_path([1.0000001, 1.0]), tol=1e-6).groups == [(0, 1)]
    assert group_by_value(fake_path([1.0000001, 1.0]), tol=0.0).groups == [(0,), (1,)]


def test_sort_relabels():
    p = sort_path(fake_path([2, 3, 1], points=[[0, 0], [1, 1], [2, 2]]))
    np.testing.assert_array_equal(p.f_values, [3, 2, 1])
    np.testing.assert_array_equal(p.points[0], [1, 1])


def test_gd_path_admissible_with_far_witness():
    p = run_gradient_descent(HALF_SQ, [1, 1], 0.4, 5)
    rep = check_admissibility(p, group_by_value(p))
    assert rep.admissible, rep.reason
    w = np.array(rep.cond_iii["witness"])
    # halfspaces {⟨x_j, y − x_j⟩ ≥ 0} exclude the minimizer; the witness lies beyond x_0
    assert w @ np.array([1, 1]) > 2
    for i in range(len(p)):
        assert signed_margin(p.halfspace(i), w) >= rep.cond_iii["radius"] - 1e-9


def test_single_stationary_point_admissible():
    p = ingest_path([[0, 0]], HALF_SQ)
    rep = check_admissibility(p, group_by_value(p))
    assert rep.admissible
    np.testing.assert_allclose(rep.cond_iii["witness"], [0, 0], atol=1e-9)


def boundary_path():
    # x_1 = (2, 1) sits on the boundary of H⁺((2, 0), (2, 0)) = {y₁ ≥ 2}
    return ingest_path([[3, 0], [2, 1], [2, 0]], HALF_SQ)


def test_boundary_point_violates_condition_i():
    p = boundary_path()
    rep = check_admissibility(p, group_by_value(p))
    assert not rep.admissible
    assert rep.cond_i == [(1, 2, 0.0)]


def test_admissibility_invariant_to_subgradient_scaling():
    p = run_gradient_descent(HALF_SQ, [1, 1], 0.4, 5)
    scales = np.array([1, 3, 0.2, 7, 1e-3, 50.0])[:, None]
    q = SearchPath(p.points, p.f_values, p.subgradients * scales)
    r1 = check_admissibility(p, group_by_value(p))
    r2 = check_admissibility(q, group_by_value(q))
    assert r1.verdict == r2.verdict == "admissible"
    np.testing.assert_allclose(r1.cond_iii["witness"], r2.cond_iii["witness"], atol=1e-7)


def test_condition_ii_requires_shared_hyperplane():
    # equal f on a circle, different normals
    p = ingest_path([[1, 0], [0, 1]], HALF_SQ)
    rep = check_admissibility(p, group_by_value(p))
    assert not rep.cond_ii[0]["ok"] and not rep.admissible
    # equal f on one tangent line: f = max-affine with a flat face
    f = make_oracle({"kind": "custom-tabulated", "data": [[1, 0, 0], [-1, 0, -10]]})
    q = ingest_path([[2, 0], [2, 1]], f)
    rep = check_admissibility(q, group_by_value(q))
    assert rep.cond_ii[0]["ok"] and rep.admissible


def test_half_box_region():
    f = make_oracle({"kind": "custom-tabulated", "data": [[1, 0, 0], [-1, 0, -5]]})
    p = ingest_path([[0.0, 0.0]], f)  # gradient (1, 0) → {y₁ ≥ 0}
    reg = ultimate_region(p, (np.zeros(2), 10.0))
    np.testing.assert_allclose(reg.chebyshev_center, [5, 0], atol=1e-9)
    assert reg.chebyshev_radius == pytest.approx(5.0)
    assert reg.polygon.area == pytest.approx(200.0)


def test_degenerate_region_is_the_box():
    p = ingest_path([[1.0, 2.0]], make_oracle({"kind": "shifted-quadratic", "c": [1.0, 2.0]}))
    reg = ultimate_region(p, (np.array([1.0, 2.0]), 3.0))
    assert reg.polygon.area == pytest.approx(box_polygon([1, 2], 3.0).area)
    np.testing.assert_allclose(reg.chebyshev_center, [1, 2], atol=1e-9)


def test_opposing_halfspaces_certificate():
    f = make_oracle({"kind": "custom-tabulated", "data": [[1, 0, 0], [-1, 0, 0]]})  # |y₁|
    p = ingest_path([[3.0, 0.0], [-1.0, 0.0]], f)  # {y₁ ≥ 3} and {y₁ ≤ −1}
    np.testing.assert_allclose(p.subgradients, [[1, 0], [-1, 0]], atol=1e-8)
    with pytest.raises(EmptyRegionError) as exc:
        ultimate_region(p)
    assert sorted(exc.value.certificate) == [0, 1]
    rep = check_admissibility(p, group_by_value(p))
    assert sorted(rep.cond_iii["certificate"]) == [0, 1]


def test_region_polygon_inside_every_halfspace():
    p = run_gradient_descent(HALF_SQ, [1, 1], 0.4, 5)
    reg = ultimate_region(p)
    for i in range(len(p)):
        for v in reg.polygon.vertices:
            assert signed_margin(p.halfspace(i), v) >= -1e-9
        assert signed_margin(p.halfspace(i), reg.chebyshev_center) >= reg.chebyshev_radius - 1e-9
