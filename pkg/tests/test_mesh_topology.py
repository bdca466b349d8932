import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from mortar_dg.dg_operator import DGOperator
from mortar_dg.geometry_metrics import TransformSpec, build_geometry
from mortar_dg.material_state import uniform_material
from mortar_dg.mesh_topology import (build_adapted_box, build_mortars, checkerboard,
                                     compose_orientation, face_coverage,
                                     invert_orientation, orientation_permutation,
                                     refine_uniform)

CODES = st.integers(0, 7)


def test_checkerboard_mesh_has_36_elements():
    mesh = build_adapted_box((2, 2, 2), checkerboard)
    assert mesh.num_elements == 4 + 4 * 8
    assert mesh.summary()["refined_cells"] == 4


def test_uniform_refinement_gives_288_elements():
    mesh = refine_uniform(build_adapted_box((2, 2, 2), checkerboard))
    assert mesh.num_elements == 288
    assert np.all(np.bincount(mesh.elem_size)[1:] > 0)


@pytest.mark.parametrize("periodic, expected", [(True, 24), (False, 12)])
def test_nonconforming_interface_count(periodic, expected):
    mesh = build_adapted_box((2, 2, 2), checkerboard, periodic=(periodic,) * 3)
    # each refined cell touches its six face neighbours; the interior grid of a
    # 2x2x2 block has 12 faces, all between a refined and an unrefined cell
    assert build_mortars(mesh, "full").counts()["nonconforming"] == expected
    kinds = mesh.summary()["face_kinds"]
    assert kinds["full"] == expected
    assert kinds["hanging"] == 4 * expected


def test_non_periodic_boundary_mortars_cover_the_box_surface():
    mesh = build_adapted_box((2, 2, 2), checkerboard, periodic=(False,) * 3)
    counts = build_mortars(mesh, "full").counts()
    # 6 box faces, each made of 4 base faces, half of which are refined
    assert counts["boundary"] == 6 * (2 * 1 + 2 * 4)


@pytest.mark.parametrize("kind", ["full", "split"])
@pytest.mark.parametrize("periodic", [True, False])
def test_every_face_is_covered_exactly_once(kind, periodic):
    mesh = build_adapted_box((2, 2, 2), checkerboard, periodic=(periodic,) * 3)
    cover = face_coverage(mesh, build_mortars(mesh, kind))
    np.testing.assert_allclose(cover, 1.0)


def test_explicit_refinement_list_and_no_refinement():
    mesh = build_adapted_box((3, 1, 1), [(1, 0, 0)])
    assert mesh.num_elements == 2 + 8
    assert build_adapted_box((2, 2, 2)).num_elements == 8


def test_rejects_empty_base_grid():
    with pytest.raises(ValueError):
        build_adapted_box((0, 1, 1))


def test_rejects_unknown_mortar_kind():
    with pytest.raises(ValueError):
        build_mortars(build_adapted_box((1, 1, 1)), "half")


@given(CODES)
def test_orientation_inverse(code):
    assert compose_orientation(code, invert_orientation(code)) == 0
    assert compose_orientation(invert_orientation(code), code) == 0


@given(CODES, CODES, CODES)
def test_orientation_composition_is_associative(a, b, c):
    left = compose_orientation(compose_orientation(a, b), c)
    right = compose_orientation(a, compose_orientation(b, c))
    assert left == right


@given(CODES, st.integers(2, 6))
def test_orientation_is_a_permutation(code, n):
    perm = orientation_permutation(code, n)
    assert sorted(perm) == list(range(n * n))


def test_orientation_code_out_of_range():
    with pytest.raises(ValueError):
        orientation_permutation(8, 3)


def _operator(mesh, kind):
    geometry = build_geometry(mesh, 2, TransformSpec("skew-rotation"), "continuous-metric")
    material = uniform_material(geometry.jac.shape, 2.0, 4.0, 3.0)
    return DGOperator(mesh, build_mortars(mesh, kind), geometry, material, "sfim", 1.0)


@settings(max_examples=4, deadline=None)
@given(seed=st.integers(0, 2 ** 32 - 1), kind=st.sampled_from(["full", "split"]))
def test_element_ordering_does_not_change_the_discretization(seed, kind):
    box = ((-1.0, -1.0, -1.0), (1.0, 1.0, 1.0))
    perm = np.random.default_rng(seed).permutation(36)
    plain = build_adapted_box((2, 2, 2), checkerboard, box=box)
    shuffled = build_adapted_box((2, 2, 2), checkerboard, box=box, element_order=perm)
    assert shuffled.summary() == plain.summary()
    q = np.random.default_rng(seed + 1).standard_normal((9, 36, 3, 3, 3))
    out_plain = _operator(plain, kind).rhs(q)
    out_shuffled = _operator(shuffled, kind).rhs(q[:, perm])
    scale = np.abs(out_plain).max()
    assert np.abs(out_shuffled - out_plain[:, perm]).max() <= 1e-12 * scale
