"""Half-interval L2 projections and interpolations for 2:1 mortars.

The 1D building blocks map between polynomials of degree N on [-1, 1] and
the two halves [-1, 0] (bottom) and [0, 1] (top).  Two-dimensional face
operators are tensor products of the 1D ones; they are never formed
densely inside the solver, only as (slow, fast) pairs of 1D matrices.
"""

from dataclasses import dataclass

import numpy as np
from scipy import sparse

from .tensor_basis import interp_matrix, lgl_rule

__all__ = [
    "HalfOps1D",
    "build_half_ops",
    "exact_mass_matrix",
    "OP_IDENTITY",
    "OP_INTERP_BOTTOM",
    "OP_INTERP_TOP",
    "OP_PROJECT_BOTTOM",
    "OP_PROJECT_TOP",
    "op_table",
    "back_op",
    "interp_op",
    "project_op",
    "face_operator_dense",
    "MortarOperators",
    "assemble_mortar_operators",
    "restrict_faces",
    "lift_faces",
]

OP_IDENTITY = 0
OP_INTERP_BOTTOM = 1
OP_INTERP_TOP = 2
OP_PROJECT_BOTTOM = 3
OP_PROJECT_TOP = 4


@dataclass(frozen=True)
class HalfOps1D:
    order: int
    interp_bottom: np.ndarray
    interp_top: np.ndarray
    project_bottom: np.ndarray
    project_top: np.ndarray
    mass: np.ndarray


def exact_mass_matrix(nodes):
    """Exact mass matrix of the Lagrange basis on ``nodes`` over [-1, 1].

    Integrated with an (n + 1)-point Gauss rule, exact for the degree 2N
    integrands.
    """
    n = len(nodes)
    gx, gw = np.polynomial.legendre.leggauss(n + 1)
    basis = interp_matrix(nodes, gx)
    return basis.T @ (gw[:, None] * basis)


def build_half_ops(order):
    rule = lgl_rule(order)
    x = rule.nodes
    ib = interp_matrix(x, 0.5 * (x - 1.0))
    it = interp_matrix(x, 0.5 * (x + 1.0))
    mass = exact_mass_matrix(x)
    pb = 0.5 * np.linalg.solve(mass, ib.T @ mass)
    pt = 0.5 * np.linalg.solve(mass, it.T @ mass)
    return HalfOps1D(order, ib, it, pb, pt, mass)


def op_table(half):
    """Stack of the five 1D operators indexed by the ``OP_*`` constants."""
    n = half.order + 1
    return np.stack([np.eye(n), half.interp_bottom, half.interp_top,
                     half.project_bottom, half.project_top])


_BACK = {OP_IDENTITY: OP_IDENTITY,
         OP_INTERP_BOTTOM: OP_PROJECT_BOTTOM,
         OP_INTERP_TOP: OP_PROJECT_TOP,
         OP_PROJECT_BOTTOM: OP_INTERP_BOTTOM,
         OP_PROJECT_TOP: OP_INTERP_TOP}


def back_op(code):
    """Operator mapping mortar data back to the face (projection <-> interpolation)."""
    return _BACK[int(code)]


def interp_op(half_index):
    return OP_INTERP_TOP if half_index else OP_INTERP_BOTTOM


def project_op(half_index):
    return OP_PROJECT_TOP if half_index else OP_PROJECT_BOTTOM


def face_operator_dense(table, op_slow, op_fast):
    """Dense (n^2 x n^2) matrix of the tensor face operator, fast index inner."""
    return np.kron(table[op_slow], table[op_fast])


# -- assembled per-(mortar, element) operators -------------------------------

class MortarOperators:
    """Connection tables and tensor-product maps between faces and mortars.

    A connection is one (mortar, element face) pair.  ``gather`` maps face
    data of shape (6, E, k, n, n) to connection data (C, k, n, n) on mortar
    nodes through P^{m,e}; ``scatter`` applies the transposes and sums back
    into face data.  Connections with the same (op_slow, op_fast,
    orientation) are grouped so each group costs two matrix products.
    """

    def __init__(self, mesh, mortar_set, geometry, half):
        from .mesh_topology import orientation_permutation

        n = half.order + 1
        self.n = n
        self.kind = mortar_set.kind
        self.num_elements = mesh.num_elements
        self.num_mortars = len(mortar_set)
        self.table = op_table(half)
        rows = []
        for m, mortar in enumerate(mortar_set.mortars):
            e, f = mortar.minus
            rows.append((m, e, f, 1.0, OP_IDENTITY, OP_IDENTITY, 0))
            for o, fo, op_s, op_f, _, orient in mortar.plus:
                rows.append((m, o, fo, -1.0, op_s, op_f, orient))
        rows = np.array(rows, dtype=float)
        self.conn_mortar = rows[:, 0].astype(int)
        self.conn_elem = rows[:, 1].astype(int)
        self.conn_face = rows[:, 2].astype(int)
        self.conn_sign = rows[:, 3]
        self.conn_op_slow = rows[:, 4].astype(int)
        self.conn_op_fast = rows[:, 5].astype(int)
        self.conn_orient = rows[:, 6].astype(int)
        self.num_connections = len(rows)
        self.minus = self.conn_sign > 0
        self.boundary = np.array([mm.is_boundary for mm in mortar_set.mortars])

        keys = np.stack([self.conn_op_slow, self.conn_op_fast, self.conn_orient], 1)
        self.groups = []
        for key in np.unique(keys, axis=0):
            idx = np.nonzero(np.all(keys == key, axis=1))[0]
            self.groups.append((tuple(int(x) for x in key), idx))
        self._perm = {c: orientation_permutation(c, n) for c in range(8)}
        self._inv_perm = {c: np.argsort(p) for c, p in self._perm.items()}

        # minus-side metrics define the mortar metrics
        minus_idx = np.nonzero(self.minus)[0]
        order = np.argsort(self.conn_mortar[minus_idx])
        minus_idx = minus_idx[order]
        me, mf = self.conn_elem[minus_idx], self.conn_face[minus_idx]
        self.mortar_sj = geometry.face_sj[mf, me]
        self.mortar_normal = np.moveaxis(geometry.face_normal[mf, :, me], 1, 0)
        w = half_weights(half)
        self.face_weights = w
        self.mortar_weight = self.mortar_sj * w

        c = np.arange(self.num_connections)
        ones = np.ones(self.num_connections)
        shape_m = (self.num_mortars, self.num_connections)
        self.sum_minus = sparse.csr_matrix(
            (ones[self.minus], (self.conn_mortar[self.minus], c[self.minus])), shape_m)
        plus = ~self.minus
        self.sum_plus = sparse.csr_matrix(
            (ones[plus], (self.conn_mortar[plus], c[plus])), shape_m)
        self.to_faces = sparse.csr_matrix(
            (ones, (self.conn_face * self.num_elements + self.conn_elem, c)),
            (6 * self.num_elements, self.num_connections))

    # -- tensor maps --------------------------------------------------------
    def _apply(self, data, transpose):
        out = np.empty_like(data) if not transpose else np.empty_like(data)
        n = self.n
        for (op_s, op_f, orient), idx in self.groups:
            block = data[idx]
            if transpose and orient:
                flat = block.reshape(block.shape[:-2] + (n * n,))
                block = flat[..., self._inv_perm[orient]].reshape(block.shape)
            if op_s != OP_IDENTITY or op_f != OP_IDENTITY:
                a_s = self.table[op_s]
                a_f = self.table[op_f]
                if transpose:
                    a_s, a_f = a_s.T, a_f.T
                block = np.matmul(a_s, block) @ a_f.T
            if not transpose and orient:
                flat = block.reshape(block.shape[:-2] + (n * n,))
                block = flat[..., self._perm[orient]].reshape(block.shape)
            out[idx] = block
        return out

    def gather(self, face_data):
        """Face data (6, E, k, n, n) -> connection data (C, k, n, n)."""
        return self._apply(face_data[self.conn_face, self.conn_elem], False)

    def scatter(self, conn_data):
        """Transpose of :meth:`gather`: (C, k, n, n) -> (6, E, k, n, n)."""
        back = self._apply(conn_data, True)
        shape = back.shape[1:]
        summed = self.to_faces @ back.reshape(self.num_connections, -1)
        return summed.reshape((6, self.num_elements) + shape)

    def apply_back(self, conn_data):
        """Map mortar data to faces with the reverse operator per connection.

        Interpolation is undone by projection and vice versa; summed per face.
        """
        out = np.empty_like(conn_data)
        for (op_s, op_f, orient), idx in self.groups:
            block = conn_data[idx]
            if orient:
                flat = block.reshape(block.shape[:-2] + (self.n * self.n,))
                block = flat[..., self._inv_perm[orient]].reshape(block.shape)
            if op_s != OP_IDENTITY or op_f != OP_IDENTITY:
                block = (np.matmul(self.table[back_op(op_s)], block)
                         @ self.table[back_op(op_f)].T)
            out[idx] = block
        summed = self.to_faces @ out.reshape(self.num_connections, -1)
        return summed.reshape((6, self.num_elements) + conn_data.shape[1:])

    def apply_back_transpose(self, face_data):
        """Transpose of :meth:`apply_back`: (6, E, k, n, n) -> (C, k, n, n)."""
        conn = face_data[self.conn_face, self.conn_elem]
        out = np.empty_like(conn)
        for (op_s, op_f, orient), idx in self.groups:
            block = conn[idx]
            if op_s != OP_IDENTITY or op_f != OP_IDENTITY:
                block = (np.matmul(self.table[back_op(op_s)].T, block)
                         @ self.table[back_op(op_f)])
            if orient:
                flat = block.reshape(block.shape[:-2] + (self.n * self.n,))
                block = flat[..., self._perm[orient]].reshape(block.shape)
            out[idx] = block
        return out

    def integrate_normals(self):
        """Sum over mortars of P^T W n_j^{m[e]} lifted to volume, (3, E, n, n, n)."""
        g = (self.conn_sign[:, None, None, None]
             * self.mortar_weight[self.conn_mortar][:, None]
             * np.moveaxis(self.mortar_normal[:, self.conn_mortar], 0, 1))
        faces = self.scatter(g)
        n = self.n
        vol = np.zeros((3, self.num_elements, n, n, n))
        lift_faces(vol, faces)
        return vol


def half_weights(half):
    from .tensor_basis import lgl_rule
    w = lgl_rule(half.order).weights
    return w[:, None] * w[None, :]


def restrict_faces(vol):
    """Volume data (k, E, n, n, n) -> face data (6, E, k, n, n)."""
    from .tensor_basis import restrict_face
    return np.stack([np.moveaxis(restrict_face(vol, f), 0, 1) for f in range(6)])


def lift_faces(vol, faces):
    """Add face data (6, E, k, n, n) into volume data (k, E, n, n, n)."""
    from .tensor_basis import lift_face_add
    for f in range(6):
        lift_face_add(vol, f, np.moveaxis(faces[f], 1, 0))


def assemble_mortar_operators(mesh, mortar_set, geometry, half):
    return MortarOperators(mesh, mortar_set, geometry, half)
