import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from catecon.euclid import (
    FeasibleSet,
    Param,
    PointSet,
    VALUE_TIE,
    Subspace,
    complement,
    grid_maximize,
    nearest_points,
    orthonormalize,
    project,
)
from catecon.expr import parse_expr

TAU = 2 * np.pi
CIRCLE = FeasibleSet(3, (Param("t", 0, TAU, periodic=True),), ("cos(t)", "sin(t)", "0"))


def test_orthonormalize_scaling():
    s = orthonormalize([[2, 0, 0]])
    assert np.allclose(s.basis, [[1, 0, 0]])


def test_orthonormalize_by_hand():
    s = orthonormalize([[1, 0, 0], [1, 1, 0]])
    assert np.allclose(s.basis, [[1, 0, 0], [0, 1, 0]])


def test_plane_with_normal():
    s = orthonormalize([[1, 1, 0], [0, 1, 1]])
    assert s.dim == 2
    assert np.all(np.abs(s.basis @ np.array([1, -1, 1])) < 1e-12)
    assert np.allclose(s.basis @ s.basis.T, np.eye(2), atol=1e-12)


def test_dependent_vectors_dropped():
    assert orthonormalize([[1, 2, 3], [2, 4, 6], [0, 0, 0]]).dim == 1


def test_dimension_mismatch():
    with pytest.raises(ValueError):
        orthonormalize([[1, 0], [0, 1, 0]])
    with pytest.raises(ValueError):
        project(Subspace.full(3), [1, 2])


def test_non_orthonormal_basis_rejected():
    with pytest.raises(ValueError):
        Subspace(2, np.array([[1.0, 0.0], [1.0, 1.0]]))


def test_projection_examples():
    z0 = complement([[0, 0, 1]])
    assert np.allclose(project(z0, [-0.577, -0.789, 0.211]), [-0.577, -0.789, 0])
    x = np.array([0.3, -2.0, 7.0])
    assert np.allclose(project(Subspace.full(3), x), x)
    plane = complement([[1, -1, 1]])
    n = np.array([1.0, -1.0, 1.0])
    e = np.array([0.0, 1.0, 0.0])
    assert np.allclose(project(plane, e), e - (e @ n) / (n @ n) * n)
    assert np.allclose(project(plane, e), [1 / 3, 2 / 3, 1 / 3])


vec3 = arrays(float, 3, elements=st.floats(-10, 10))
spans = st.lists(vec3, min_size=1, max_size=3)


@settings(max_examples=60, deadline=None)
@given(spans, vec3)
def test_projection_idempotent_and_optimal(spanning, x):
    s = orthonormalize(spanning)
    px = project(s, x)
    assert np.allclose(project(s, px), px, atol=1e-10)
    rng = np.random.default_rng(0)
    if s.dim == 0:
        assert np.allclose(px, 0)
        return
    ys = rng.normal(size=(1000, s.dim)) * 10 @ s.basis
    assert np.all(np.linalg.norm(x - px) <= np.linalg.norm(x - ys, axis=1) + 1e-8)


def test_feasible_set_validation():
    with pytest.raises(ValueError):
        Param("t", 1.0, 1.0)
    with pytest.raises(ValueError):
        FeasibleSet(2, (Param("t", 0, 1),), ("t", "s"))
    with pytest.raises(ValueError):
        FeasibleSet(2, (Param("t", 0, 1),), ("t",))


def test_grid_maximize_circle():
    sols, val = grid_maximize(parse_expr("3-2*x^2-y^2-3*z^2"), CIRCLE)
    assert val == pytest.approx(2.0, abs=1e-9)
    assert PointSet(np.array([[0, 1, 0], [0, -1, 0.0]])).same_as(sols, 1e-3)


def test_grid_maximize_never_beaten_by_grid():
    f = parse_expr("x*y - z + 0.3*x")
    sphere = FeasibleSet(
        3, (Param("t", 0, np.pi), Param("f", 0, TAU, periodic=True)),
        ("sin(t)*cos(f)", "sin(t)*sin(f)", "cos(t)"), grid_resolution=120,
    )
    _, val = grid_maximize(f, sphere)
    P, _ = sphere.grid()
    X = sphere.embed(P)
    assert np.all(f.evaluate({"x": X[:, 0], "y": X[:, 1], "z": X[:, 2]}) <= val + 1e-12)


def test_constant_objective_samples_the_set():
    sols, val = grid_maximize(parse_expr("1+0*x"), CIRCLE)
    assert val == 1
    assert len(sols) > 100
    assert np.allclose(np.linalg.norm(sols.points[:, :2], axis=1), 1)


def test_nearest_points_radial():
    assert PointSet(np.array([[0.0, 1, 0]])).same_as(nearest_points(CIRCLE, [0, 2, 0]), 1e-3)


def test_nearest_points_degenerate_centre():
    pts = nearest_points(CIRCLE, [0, 0, 0])
    assert len(pts) >= 360
    assert pts.contains([0, 1, 0], 1e-3) and pts.contains([0, -1, 0], 1e-3)


def test_nearest_points_normalised_target():
    target = np.array([-0.577, -0.789, 0.0])
    oracle = target / np.linalg.norm(target)
    got = nearest_points(CIRCLE, target)
    assert len(got) == 1
    assert np.allclose(got.points[0], oracle, atol=1e-3)
    assert np.allclose(got.points[0], [-0.5906, -0.8073, 0], atol=1e-3)


@settings(max_examples=25, deadline=None)
@given(vec3)
def test_nearest_points_beat_every_grid_sample(target):
    got = nearest_points(CIRCLE, target)
    P, _ = CIRCLE.grid()
    grid_best = np.linalg.norm(CIRCLE.embed(P) - target, axis=1).min()
    # minimisers are reported up to the value tie
    assert np.all(np.linalg.norm(got.points - target, axis=1) <= grid_best + VALUE_TIE)


def test_point_set_clustering_and_ops():
    a = PointSet(np.array([[0.0, 0], [0, 5e-5], [1, 0]]))
    assert len(a) == 2
    b = PointSet(np.array([[1.0, 0.0005]]))
    assert len(a.intersect(b, 1e-3)) == 1
    assert len(a.union(b)) == 3
    assert a.same_as(PointSet(np.array([[1.0, 0], [0, 0]])), 1e-3)
    assert PointSet.empty(2).same_as(PointSet.empty(2), 1e-3)
