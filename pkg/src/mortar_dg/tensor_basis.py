"""One-dimensional LGL rules and tensor-product kernels on hexahedra.

Index convention used throughout the package: a volume field on ``E``
elements with ``n = N + 1`` nodes per direction has shape ``(E, n, n, n)``
indexed as ``[e, i3, i2, i1]``, so the first reference direction ``r1`` is
the fastest-varying (last) array axis.  A face field has shape ``(n, n)``
indexed ``[slow, fast]`` where ``fast`` is the tangential reference
direction with the smaller number.

Faces are numbered 0..5: face ``f`` lies on reference axis ``f // 2`` at
``r = -1`` when ``f % 2 == 0`` and at ``r = +1`` otherwise.
"""

from dataclasses import dataclass

import numpy as np
from numpy.polynomial import legendre as npleg

__all__ = [
    "LglRule",
    "Basis1D",
    "lgl_rule",
    "diff_matrix",
    "interp_matrix",
    "apply_tensor",
    "apply_along",
    "modal_truncation_matrix",
    "face_axis",
    "face_side",
    "face_index",
    "face_tangents",
    "restrict_face",
    "lift_face_add",
    "TensorOps3D",
]


@dataclass(frozen=True)
class LglRule:
    order: int
    nodes: np.ndarray
    weights: np.ndarray


@dataclass(frozen=True)
class Basis1D:
    rule: LglRule
    deriv: np.ndarray
    first: np.ndarray
    last: np.ndarray

    @property
    def order(self):
        return self.rule.order

    @property
    def nodes(self):
        return self.rule.nodes

    @property
    def weights(self):
        return self.rule.weights


def _legendre_and_derivs(order, x):
    """Return P_N(x), P_N'(x) and P_N''(x) by the three-term recurrence."""
    p_prev = np.ones_like(x)
    p = x.copy()
    for k in range(2, order + 1):
        p_prev, p = p, ((2 * k - 1) * x * p - (k - 1) * p_prev) / k
    # derivatives from the Legendre ODE, valid away from +-1
    dp = order * (p_prev - x * p) / np.where(np.abs(x) < 1, 1 - x * x, 1.0)
    d2p = (2 * x * dp - order * (order + 1) * p) / np.where(
        np.abs(x) < 1, 1 - x * x, 1.0)
    return p, dp, d2p


def _legendre(order, x):
    p_prev = np.ones_like(x)
    if order == 0:
        return p_prev
    p = np.array(x, dtype=float)
    for k in range(2, order + 1):
        p_prev, p = p, ((2 * k - 1) * x * p - (k - 1) * p_prev) / k
    return p


def lgl_rule(order, tol=1e-15, max_iter=100):
    """Legendre-Gauss-Lobatto nodes and weights of polynomial order ``order``.

    Interior nodes are roots of P_N', found by Newton iteration started from
    the Chebyshev-Gauss-Lobatto points.  The result is symmetrized so that
    mirrored nodes are exact negatives of each other.
    """
    order = int(order)
    if order < 1:
        raise ValueError("LGL rule needs order >= 1")
    n = order + 1
    x = -np.cos(np.pi * np.arange(n) / order)
    interior = x[1:-1].copy()
    for _ in range(max_iter):
        _, dp, d2p = _legendre_and_derivs(order, interior)
        step = dp / d2p
        interior -= step
        if np.max(np.abs(step), initial=0.0) < tol:
            break
    x[1:-1] = interior
    x[0], x[-1] = -1.0, 1.0
    x = 0.5 * (x - x[::-1])
    if order % 2 == 0:
        x[order // 2] = 0.0
    p = _legendre(order, x)
    w = 2.0 / (order * (order + 1) * p * p)
    w = 0.5 * (w + w[::-1])
    return LglRule(order, x, w)


def _bary_weights(nodes):
    diff = nodes[:, None] - nodes[None, :]
    np.fill_diagonal(diff, 1.0)
    return 1.0 / np.prod(diff, axis=1)


def diff_matrix(rule):
    """Nodal Lagrange derivative matrix on the LGL nodes of ``rule``."""
    x = rule.nodes
    b = _bary_weights(x)
    diff = x[:, None] - x[None, :]
    np.fill_diagonal(diff, 1.0)
    d = (b[None, :] / b[:, None]) / diff
    np.fill_diagonal(d, 0.0)
    np.fill_diagonal(d, -d.sum(axis=1))
    n = len(x)
    first = np.zeros(n)
    last = np.zeros(n)
    first[0] = 1.0
    last[-1] = 1.0
    return Basis1D(rule, d, first, last)


def interp_matrix(src, dst):
    """Lagrange interpolation matrix from nodes ``src`` to points ``dst``.

    Rows for destination points that coincide with a source node are exact
    unit vectors.
    """
    src = np.asarray(src, dtype=float)
    dst = np.asarray(dst, dtype=float)
    if len(np.unique(src)) != len(src):
        raise ValueError("interpolation source nodes must be distinct")
    b = _bary_weights(src)
    diff = dst[:, None] - src[None, :]
    hit = diff == 0.0
    safe = np.where(hit, 1.0, diff)
    terms = b[None, :] / safe
    mat = terms / terms.sum(axis=1, keepdims=True)
    rows = hit.any(axis=1)
    mat[rows] = hit[rows].astype(float)
    return mat


def modal_truncation_matrix(rule, drop=1):
    """Nodal matrix removing the top ``drop`` Legendre modes (L2 projection)."""
    n = rule.order + 1
    vander = npleg.legvander(rule.nodes, rule.order)
    keep = np.ones(n)
    keep[n - drop:] = 0.0
    return vander @ np.diag(keep) @ np.linalg.inv(vander)


def apply_along(op, field, direction):
    """Apply the 1D matrix ``op`` along reference direction 0, 1 or 2."""
    if direction == 0:
        return field @ op.T
    if direction == 1:
        return np.matmul(op, field)
    shape = field.shape
    flat = field.reshape(shape[:-3] + (shape[-3], shape[-2] * shape[-1]))
    out = np.matmul(op, flat)
    return out.reshape(shape[:-3] + (op.shape[0],) + shape[-2:])


def apply_tensor(ops, field):
    """Apply ``ops[2] (x) ops[1] (x) ops[0]`` to a field of shape (..., n3, n2, n1).

    ``ops[d]`` acts on reference direction ``d``; ``None`` means identity.
    The Kronecker product is never formed.
    """
    if len(ops) != 3:
        raise ValueError("need one operator (or None) per direction")
    if field.ndim < 3:
        raise ValueError("field must have three trailing node axes")
    out = field
    for d, op in enumerate(ops):
        if op is None:
            continue
        if op.shape[1] != out.shape[-1 - d]:
            raise ValueError("operator/field shape mismatch in direction %d" % d)
        out = apply_along(op, out, d)
    if out is field:
        out = field.copy()
    return out


def face_axis(face):
    return face // 2


def face_side(face):
    return face % 2


def face_tangents(face):
    """Tangential directions (fast, slow) of ``face``."""
    d = face // 2
    others = [a for a in range(3) if a != d]
    return others[0], others[1]


def face_index(face, n):
    """Index tuple selecting face ``face`` from an array (..., n, n, n)."""
    d = face // 2
    idx = 0 if face % 2 == 0 else n - 1
    if d == 0:
        return (Ellipsis, idx)
    if d == 1:
        return (Ellipsis, idx, slice(None))
    return (Ellipsis, idx, slice(None), slice(None))


def restrict_face(field, face):
    n = field.shape[-1]
    return field[face_index(face, n)]


def lift_face_add(field, face, values):
    """In-place transpose of :func:`restrict_face`."""
    n = field.shape[-1]
    field[face_index(face, n)] += values


@dataclass(frozen=True)
class TensorOps3D:
    """Bundle of the 1D basis with cached tensor weights."""

    basis: Basis1D

    @property
    def n(self):
        return self.basis.order + 1

    @property
    def volume_weights(self):
        w = self.basis.weights
        return w[:, None, None] * w[None, :, None] * w[None, None, :]

    @property
    def face_weights(self):
        w = self.basis.weights
        return w[:, None] * w[None, :]

    def lexicographic_index(self, i1, i2, i3):
        """Flat index of node (i1, i2, i3) with i1 fastest."""
        n = self.n
        return i1 + n * i2 + n * n * i3

    def derivative(self, field, direction):
        return apply_along(self.basis.deriv, field, direction)

    def derivative_transpose(self, field, direction):
        return apply_along(self.basis.deriv.T, field, direction)


def make_tensor_ops(order):
    return TensorOps3D(diff_matrix(lgl_rule(order)))
