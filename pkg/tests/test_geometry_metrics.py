import numpy as np
import pytest

from mortar_dg.geometry_metrics import (TransformSpec, build_geometry,
                                        check_discrete_divergence,
                                        nonconforming_coordinate_jump,
                                        skew_rotation_matrix)
from mortar_dg.material_state import uniform_material
from mortar_dg.mesh_topology import build_adapted_box, build_mortars, checkerboard
from mortar_dg.mortar_projection import assemble_mortar_operators, build_half_ops
from mortar_dg.tensor_basis import apply_along, diff_matrix, lgl_rule
from mortar_dg.time_integration import stable_dt

BOX = ((-1.0, -1.0, -1.0), (1.0, 1.0, 1.0))


def _rot(axis, angle):
    c, s = np.cos(angle), np.sin(angle)
    i, j = [a for a in range(3) if a != axis]
    r = np.eye(3)
    r[i, i], r[i, j], r[j, i], r[j, j] = c, -s, s, c
    if axis == 1:
        r = r.T
    return r


def test_skew_transform_at_origin_is_two_quarter_rotations():
    spec = TransformSpec("skew-rotation")
    q = skew_rotation_matrix(np.pi / 4)
    np.testing.assert_allclose(q, _rot(1, np.pi / 4) @ _rot(2, np.pi / 4), atol=1e-15)
    r = np.array([0.0, 0.0, 0.0]).reshape(3, 1) + 1e-300
    np.testing.assert_allclose(spec(r), q @ r, atol=1e-15)
    point = np.array([0.3, -0.2, 0.5]).reshape(3, 1)
    beta = np.pi / 4 * np.prod(1 - point ** 2, axis=0)
    np.testing.assert_allclose(spec(point), skew_rotation_matrix(beta)[..., 0] @ point,
                               atol=1e-15)


def test_skew_transform_is_identity_on_the_box_boundary():
    rng = np.random.default_rng(0)
    pts = rng.uniform(-1, 1, (3, 50))
    for axis in range(3):
        for side in (-1.0, 1.0):
            p = pts.copy()
            p[axis] = side
            np.testing.assert_allclose(TransformSpec("skew-rotation")(p), p, atol=1e-15)


def test_affine_parallelepiped_metrics():
    a = np.array([[1.0, 0.3, 0.0], [0.0, 1.2, 0.2], [0.1, 0.0, 0.9]])
    mesh = build_adapted_box((1, 1, 1), box=BOX)
    geo = build_geometry(mesh, 3, TransformSpec("affine-box", matrix=a))
    np.testing.assert_allclose(geo.jac, np.linalg.det(a), rtol=1e-13)
    # outward normal of face 1 (r1 = +1) is the normalized cross product of
    # the images of the r2 and r3 edge vectors
    cross = np.cross(a[:, 1], a[:, 2])
    expected = cross / np.linalg.norm(cross)
    np.testing.assert_allclose(geo.face_normal[1].reshape(3, -1).T, np.tile(expected, (16, 1)),
                               atol=1e-13)
    np.testing.assert_allclose(geo.face_sj[1], np.linalg.norm(cross), rtol=1e-13)


def test_watertight_removes_coordinate_gaps():
    mesh = build_adapted_box((2, 2, 2), checkerboard, box=BOX)
    spec = TransformSpec("skew-rotation")
    nodes = lgl_rule(3).nodes
    raw = build_geometry(mesh, 3, spec, "interpolated")
    tight = build_geometry(mesh, 3, spec, "watertight")
    assert nonconforming_coordinate_jump(mesh, raw.coords, nodes) > 1e-6
    assert nonconforming_coordinate_jump(mesh, tight.coords, nodes) <= 1e-13


@pytest.mark.parametrize("treatment", ["interpolated", "watertight", "continuous-metric"])
def test_element_level_freestream_identity(treatment):
    mesh = build_adapted_box((2, 2, 2), checkerboard, box=BOX)
    geo = build_geometry(mesh, 4, TransformSpec("skew-rotation"), treatment)
    d = diff_matrix(lgl_rule(4)).deriv
    for j in range(3):
        total = sum(apply_along(d, geo.jr[k, j], k) for k in range(3))
        assert np.abs(total).max() <= 1e-12


def test_zeta_lacks_the_top_mode_along_its_direction():
    mesh = build_adapted_box((2, 2, 2), checkerboard, box=BOX)
    order = 4
    geo = build_geometry(mesh, order, TransformSpec("skew-rotation"), "watertight")
    x = lgl_rule(order).nodes
    inv_vander = np.linalg.inv(np.polynomial.legendre.legvander(x, order))
    for k in range(3):
        modes = apply_along(inv_vander, geo.zeta[:, k], k)
        top = np.take(modes, order, axis=modes.ndim - 1 - k)
        assert np.abs(top).max() <= 1e-12


def _hanging_sj_ratio(mesh, geo, order):
    """Largest mismatch of hanging-face S_J n against 1/4 of the full-face interpolant."""
    h = build_half_ops(order)
    halves = (h.interp_bottom, h.interp_top)
    worst = 0.0
    for e, links in enumerate(mesh.faces):
        for f, link in enumerate(links):
            if link.kind != "hanging":
                continue
            o, fo, quad, _ = link.neighbors[0]
            full = geo.face_sj[fo, o] * geo.face_normal[fo, :, o]
            interp = np.matmul(halves[quad[1]], full) @ halves[quad[0]].T
            small = geo.face_sj[f, e] * geo.face_normal[f, :, e]
            worst = max(worst, float(np.abs(small + 0.25 * interp).max()))
    return worst


def test_continuous_metric_scales_hanging_face_normals_by_a_quarter():
    mesh = build_adapted_box((2, 2, 2), checkerboard, box=BOX)
    spec = TransformSpec("skew-rotation")
    cont = build_geometry(mesh, 4, spec, "continuous-metric")
    tight = build_geometry(mesh, 4, spec, "watertight")
    assert _hanging_sj_ratio(mesh, cont, 4) <= 1e-13
    assert _hanging_sj_ratio(mesh, tight, 4) > 1e-8


def _divergence_residual(order, kind, treatment):
    mesh = build_adapted_box((2, 2, 2), checkerboard, box=BOX)
    geo = build_geometry(mesh, order, TransformSpec("skew-rotation"), treatment)
    ops = assemble_mortar_operators(mesh, build_mortars(mesh, kind), geo,
                                    build_half_ops(order))
    res, scale = check_discrete_divergence(geo, ops, diff_matrix(lgl_rule(order)))
    return float((res / scale[:, None]).max())


@pytest.mark.parametrize("order", [2, 3])
@pytest.mark.parametrize("kind", ["full", "split"])
def test_discrete_divergence_theorem(order, kind):
    assert _divergence_residual(order, kind, "continuous-metric") <= 1e-12
    assert _divergence_residual(order, kind, "interpolated") > 1e-6


def test_inverted_map_is_rejected():
    mesh = build_adapted_box((1, 1, 1), box=BOX)
    with pytest.raises(ValueError):
        build_geometry(mesh, 2, TransformSpec("affine-box", matrix=-np.eye(3)))


def test_unknown_treatment_is_rejected():
    with pytest.raises(ValueError):
        build_geometry(build_adapted_box((1, 1, 1)), 2, treatment="smooth")


@pytest.mark.parametrize("order", [1, 3, 5])
def test_time_step_on_reference_cube(order):
    mesh = build_adapted_box((1, 1, 1), box=BOX, periodic=(False,) * 3)
    geo = build_geometry(mesh, order)
    material = uniform_material(geo.jac.shape, 1.0, 0.2, 0.4)  # lam + 2 mu = rho
    assert stable_dt(geo, material, order, cfl=1.0) == pytest.approx(1.0 / order, rel=1e-13)


def test_time_step_matches_brute_force_loop():
    from mortar_dg.material_state import random_material

    mesh = build_adapted_box((2, 2, 2), checkerboard, box=BOX)
    order = 3
    geo = build_geometry(mesh, order, TransformSpec("skew-rotation"))
    material = random_material(geo.jac.shape, seed=4)
    best = np.inf
    n = order + 1
    for e in range(mesh.num_elements):
        for idx in np.ndindex(n, n, n):
            cp = np.sqrt((material.lam[e][idx] + 2 * material.mu[e][idx]) / material.rho[e][idx])
            for k in range(3):
                grad = [geo.jr[k, j, e][idx] / geo.jac[e][idx] for j in range(3)]
                best = min(best, 1.0 / (order * np.sqrt(cp * sum(g * g for g in grad))))
    assert stable_dt(geo, material, order, cfl=0.5) == pytest.approx(0.5 * best, rel=1e-13)
