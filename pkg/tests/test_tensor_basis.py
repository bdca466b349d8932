import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from numpy.polynomial import legendre as npleg

from mortar_dg.tensor_basis import (apply_along, apply_tensor, diff_matrix, face_index,
                                    interp_matrix, lgl_rule, modal_truncation_matrix,
                                    restrict_face)

ORDERS = range(1, 9)


def reference_lgl(order):
    """Independent oracle: roots of P_N' from numpy plus the endpoints."""
    inner = npleg.Legendre.basis(order).deriv().roots()
    nodes = np.concatenate([[-1.0], np.sort(inner.real), [1.0]])
    p = npleg.Legendre.basis(order)(nodes)
    return nodes, 2.0 / (order * (order + 1) * p ** 2)


def test_order_two_nodes_and_weights():
    rule = lgl_rule(2)
    np.testing.assert_allclose(rule.nodes, [-1.0, 0.0, 1.0], atol=1e-15)
    np.testing.assert_allclose(rule.weights, [1 / 3, 4 / 3, 1 / 3], atol=1e-15)


@pytest.mark.parametrize("order", ORDERS)
def test_nodes_match_independent_roots(order):
    nodes, weights = reference_lgl(order)
    rule = lgl_rule(order)
    np.testing.assert_allclose(rule.nodes, nodes, atol=1e-14)
    np.testing.assert_allclose(rule.weights, weights, atol=1e-14)


@pytest.mark.parametrize("order", ORDERS)
def test_quadrature_exact_to_degree_2n_minus_1(order):
    rule = lgl_rule(order)
    for k in range(2 * order):
        exact = 0.0 if k % 2 else 2.0 / (k + 1)
        assert abs(np.dot(rule.weights, rule.nodes ** k) - exact) <= 1e-13


def test_order_one_derivative_matrix():
    np.testing.assert_allclose(diff_matrix(lgl_rule(1)).deriv,
                               [[-0.5, 0.5], [-0.5, 0.5]], atol=1e-15)


@pytest.mark.parametrize("order", ORDERS)
def test_summation_by_parts(order):
    basis = diff_matrix(lgl_rule(order))
    w = np.diag(basis.weights)
    boundary = np.outer(basis.last, basis.last) - np.outer(basis.first, basis.first)
    residual = w @ basis.deriv + basis.deriv.T @ w - boundary
    assert np.abs(residual).max() <= 1e-13


@settings(max_examples=30, deadline=None)
@given(order=st.integers(1, 8), seed=st.integers(0, 2 ** 32 - 1))
def test_derivative_exact_on_degree_n_polynomials(order, seed):
    coef = np.random.default_rng(seed).standard_normal(order + 1)
    basis = diff_matrix(lgl_rule(order))
    x = basis.nodes
    exact = npleg.legval(x, npleg.legder(coef))
    scale = max(1.0, np.abs(exact).max())
    assert np.abs(basis.deriv @ npleg.legval(x, coef) - exact).max() <= 1e-12 * scale


@settings(max_examples=20, deadline=None)
@given(order=st.integers(1, 6), seed=st.integers(0, 2 ** 32 - 1))
def test_directional_derivatives_commute(order, seed):
    d = diff_matrix(lgl_rule(order)).deriv
    n = order + 1
    field = np.random.default_rng(seed).standard_normal((2, n, n, n))
    for a in range(3):
        for b in range(3):
            ab = apply_along(d, apply_along(d, field, a), b)
            ba = apply_along(d, apply_along(d, field, b), a)
            assert np.abs(ab - ba).max() <= 1e-12 * max(1.0, np.abs(ab).max())


@pytest.mark.parametrize("order", [2, 4, 7])
def test_interpolation_of_identity_at_shifted_points(order):
    x = lgl_rule(order).nodes
    dst = np.array([-0.9, -0.3, 0.0, 0.25, 0.77, 1.0])
    np.testing.assert_allclose(interp_matrix(x, dst) @ x, dst, atol=1e-14)


def test_interpolation_rows_are_unit_vectors_at_nodes():
    x = lgl_rule(4).nodes
    np.testing.assert_array_equal(interp_matrix(x, x), np.eye(5))


def test_interpolation_rejects_repeated_nodes():
    with pytest.raises(ValueError):
        interp_matrix([0.0, 0.0, 1.0], [0.5])


@settings(max_examples=10, deadline=None)
@given(seed=st.integers(0, 2 ** 32 - 1))
def test_tensor_application_matches_dense_kronecker(seed):
    rng = np.random.default_rng(seed)
    ops = [rng.standard_normal((3, 3)) for _ in range(3)]
    field = rng.standard_normal((3, 3, 3))
    dense = np.kron(ops[2], np.kron(ops[1], ops[0]))
    expected = (dense @ field.ravel()).reshape(3, 3, 3)
    np.testing.assert_allclose(apply_tensor(ops, field), expected, atol=1e-14)


def test_tensor_application_with_identity_entries_copies():
    field = np.arange(27.0).reshape(3, 3, 3)
    out = apply_tensor([None, None, None], field)
    assert out is not field
    np.testing.assert_array_equal(out, field)


@pytest.mark.parametrize("order", [2, 3, 5])
def test_modal_truncation_removes_top_mode(order):
    rule = lgl_rule(order)
    coef = np.random.default_rng(order).standard_normal(order + 1)
    values = npleg.legval(rule.nodes, coef)
    trunc = modal_truncation_matrix(rule) @ values
    modes = np.linalg.solve(npleg.legvander(rule.nodes, order), trunc)
    assert abs(modes[-1]) <= 1e-13
    np.testing.assert_allclose(modes[:-1], coef[:-1], atol=1e-13)


def test_face_restriction_picks_boundary_planes():
    n = 3
    field = np.arange(n ** 3, dtype=float).reshape(n, n, n)
    np.testing.assert_array_equal(restrict_face(field, 0), field[:, :, 0])
    np.testing.assert_array_equal(restrict_face(field, 3), field[:, n - 1, :])
    np.testing.assert_array_equal(restrict_face(field, 4), field[0])
    assert face_index(5, n)[1] == n - 1
