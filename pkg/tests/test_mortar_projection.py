import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy.interpolate import BarycentricInterpolator

from mortar_dg.mesh_topology import build_adapted_box, build_mortars, checkerboard
from mortar_dg.mortar_projection import (OP_INTERP_BOTTOM, OP_INTERP_TOP,
                                         OP_PROJECT_BOTTOM, OP_PROJECT_TOP,
                                         build_half_ops, face_operator_dense, op_table)
from mortar_dg.tensor_basis import lgl_rule

from conftest import setup_for, skew


def _integrate(fn, lo, hi, points=40):
    x, w = np.polynomial.legendre.leggauss(points)
    xs = 0.5 * (hi - lo) * x + 0.5 * (hi + lo)
    return 0.5 * (hi - lo) * np.dot(w, fn(xs))


@settings(max_examples=25, deadline=None)
@given(order=st.integers(1, 7), top=st.booleans(), seed=st.integers(0, 2 ** 32 - 1))
def test_half_projection_matches_half_interval_integral(order, top, seed):
    rng = np.random.default_rng(seed)
    nodes = lgl_rule(order).nodes
    half = build_half_ops(order)
    proj = half.project_top if top else half.project_bottom
    child = rng.standard_normal(order + 1)
    test_fn = BarycentricInterpolator(nodes, rng.standard_normal(order + 1))
    projected = BarycentricInterpolator(nodes, proj @ child)
    child_fn = BarycentricInterpolator(nodes, child)
    lo, hi = (0.0, 1.0) if top else (-1.0, 0.0)
    lhs = _integrate(lambda x: test_fn(x) * projected(x), -1.0, 1.0)
    rhs = _integrate(lambda x: test_fn(x) * child_fn(2.0 * x - (lo + hi)), lo, hi)
    assert abs(lhs - rhs) <= 1e-12 * max(1.0, abs(rhs))


@pytest.mark.parametrize("order", range(1, 8))
def test_split_then_recompose_is_identity(order):
    h = build_half_ops(order)
    total = h.project_bottom @ h.interp_bottom + h.project_top @ h.interp_top
    assert np.abs(total - np.eye(order + 1)).max() <= 1e-13


@pytest.mark.parametrize("order", range(1, 8))
def test_interpolation_reproduces_half_coordinates(order):
    h = build_half_ops(order)
    x = lgl_rule(order).nodes
    np.testing.assert_allclose(h.interp_bottom @ x, 0.5 * (x - 1.0), atol=1e-14)
    np.testing.assert_allclose(h.interp_top @ x, 0.5 * (x + 1.0), atol=1e-14)


@pytest.mark.parametrize("order", range(1, 8))
def test_four_child_projections_preserve_constants(order):
    table = op_table(build_half_ops(order))
    ones = np.ones((order + 1) ** 2)
    total = sum(face_operator_dense(table, s, f) @ ones
                for s in (OP_PROJECT_BOTTOM, OP_PROJECT_TOP)
                for f in (OP_PROJECT_BOTTOM, OP_PROJECT_TOP))
    assert np.abs(total - 1.0).max() <= 1e-13


@pytest.mark.parametrize("order", [2, 4])
def test_face_interpolation_exact_on_bilinear_fields(order):
    table = op_table(build_half_ops(order))
    x = lgl_rule(order).nodes
    slow, fast = np.meshgrid(x, x, indexing="ij")
    field = 1.0 + 2.0 * slow - 3.0 * fast + 0.5 * slow * fast
    mapped = (face_operator_dense(table, OP_INTERP_TOP, OP_INTERP_BOTTOM)
              @ field.ravel()).reshape(field.shape)
    s, f = 0.5 * (slow + 1.0), 0.5 * (fast - 1.0)
    np.testing.assert_allclose(mapped, 1.0 + 2.0 * s - 3.0 * f + 0.5 * s * f, atol=1e-13)


@pytest.mark.parametrize("kind", ["full", "split"])
def test_gather_and_scatter_are_transposes(kind, rng):
    ops = setup_for(**skew(mortar=kind)).operator.mortars
    n, num = ops.n, ops.num_elements
    faces = rng.standard_normal((6, num, 2, n, n))
    conn = rng.standard_normal((ops.num_connections, 2, n, n))
    lhs = np.sum(ops.gather(faces) * conn)
    rhs = np.sum(faces * ops.scatter(conn))
    assert abs(lhs - rhs) <= 1e-12 * abs(lhs)


@pytest.mark.parametrize("kind", ["full", "split"])
def test_back_map_transpose(kind, rng):
    ops = setup_for(**skew(mortar=kind)).operator.mortars
    n, num = ops.n, ops.num_elements
    faces = rng.standard_normal((6, num, 2, n, n))
    conn = rng.standard_normal((ops.num_connections, 2, n, n))
    lhs = np.sum(ops.apply_back(conn) * faces)
    rhs = np.sum(conn * ops.apply_back_transpose(faces))
    assert abs(lhs - rhs) <= 1e-12 * abs(lhs)


@pytest.mark.parametrize("kind", ["full", "split"])
def test_gathered_constants_sum_to_one_per_mortar(kind):
    ops = setup_for(mortar=kind).operator.mortars
    n = ops.n
    conn = ops.gather(np.ones((6, ops.num_elements, 1, n, n)))
    flat = conn.reshape(ops.num_connections, -1)
    np.testing.assert_allclose(ops.sum_minus @ flat, 1.0, atol=1e-13)
    np.testing.assert_allclose(ops.sum_plus @ flat, 1.0, atol=1e-13)


def test_mortar_counts_match_the_refinement_pattern():
    mesh = build_adapted_box((2, 2, 2), checkerboard)
    full = build_mortars(mesh, "full")
    split = build_mortars(mesh, "split")
    assert full.counts()["nonconforming"] == 24
    assert split.counts()["nonconforming"] == 4 * 24
    assert all(len(m.plus) == 4 for m in full.mortars if m.nonconforming)
    assert all(len(m.plus) == 1 for m in split.mortars if m.nonconforming)
    assert OP_INTERP_BOTTOM != OP_INTERP_TOP
