"""Isoparametric geometry, curl-form metric terms and surface metrics.

Arrays are component-first: coordinates have shape (3, E, n, n, n),
``zeta[j, k]`` and ``jr[k, j]`` have shape (3, 3, E, n, n, n), where
``jr[k, j]`` holds J * dr_k/dx_j.  Face quantities are stored per face
number: ``face_sj`` is (6, E, n, n) and ``face_normal`` is (6, 3, E, n, n).
"""

from dataclasses import dataclass

import numpy as np

from .tensor_basis import (apply_along, face_tangents, interp_matrix,
                           make_tensor_ops, modal_truncation_matrix,
                           restrict_face)

__all__ = [
    "TREATMENTS",
    "TransformSpec",
    "ElementGeometry",
    "reference_coordinates",
    "sample_transform",
    "make_watertight",
    "compute_zeta",
    "make_zeta_consistent",
    "compute_jacobian",
    "compute_volume_metrics",
    "compute_surface_metrics",
    "build_geometry",
    "skew_rotation_matrix",
    "check_discrete_divergence",
    "edge_index",
    "nonconforming_coordinate_jump",
]

TREATMENTS = ("interpolated", "watertight", "continuous-metric")


@dataclass(frozen=True)
class TransformSpec:
    """Global map from reference-box coordinates r to physical x.

    kind "affine-box": x = matrix @ r + offset.
    kind "skew-rotation": x = Q(beta(r)) r with
    beta = amplitude * prod(1 - r_i^2) on the box [-1, 1]^3.
    kind "user-polynomial": x = mapping(r) for a user callable taking
    and returning arrays of shape (3, ...).
    """

    kind: str = "affine-box"
    matrix: tuple = None
    offset: tuple = None
    amplitude: float = np.pi / 4
    mapping: object = None

    def __call__(self, r):
        if self.kind == "affine-box":
            a = np.eye(3) if self.matrix is None else np.asarray(self.matrix, float)
            b = np.zeros(3) if self.offset is None else np.asarray(self.offset, float)
            return np.einsum("ij,j...->i...", a, r) + b.reshape((3,) + (1,) * (r.ndim - 1))
        if self.kind == "skew-rotation":
            beta = self.amplitude * np.prod(1.0 - r * r, axis=0)
            q = skew_rotation_matrix(beta)
            return np.einsum("ij...,j...->i...", q, r)
        if self.kind == "user-polynomial":
            if self.mapping is None:
                raise ValueError("user-polynomial transform needs a mapping")
            return np.asarray(self.mapping(r), dtype=float)
        raise ValueError("unknown transform kind %r" % self.kind)


def skew_rotation_matrix(beta):
    """Rotation Q(beta) = R_y(beta) R_z(beta), shape (3, 3) + beta.shape."""
    c, s = np.cos(beta), np.sin(beta)
    z = np.zeros_like(c)
    return np.array([[c * c, -c * s, s],
                     [s, c, z],
                     [-c * s, s * s, c]])


@dataclass
class ElementGeometry:
    order: int
    treatment: str
    coords: np.ndarray
    zeta: np.ndarray
    jr: np.ndarray
    jac: np.ndarray
    face_sj: np.ndarray
    face_normal: np.ndarray

    @property
    def num_elements(self):
        return self.jac.shape[0]

    def inverse_metric(self):
        """dr_k/dx_j as (3, 3, E, n, n, n)."""
        return self.jr / self.jac


# -- coordinates -----------------------------------------------------------

def reference_coordinates(mesh, nodes):
    """Reference-box coordinates of all element nodes, shape (3, E, n, n, n)."""
    n = len(nodes)
    num = mesh.num_elements
    out = np.empty((3, num, n, n, n))
    lo_all = np.empty((num, 3))
    hi_all = np.empty((num, 3))
    for e in range(num):
        lo_all[e], hi_all[e] = mesh.element_bounds(e)
    for c in range(3):
        line = 0.5 * (lo_all[:, c, None] * (1.0 - nodes) + hi_all[:, c, None] * (1.0 + nodes))
        shape = [num, 1, 1, 1]
        shape[3 - c] = n
        out[c] = line.reshape(shape)
    return out


def sample_transform(mesh, nodes, spec):
    x = spec(reference_coordinates(mesh, nodes))
    if not np.all(np.isfinite(x)):
        raise ValueError("transform produced non-finite coordinates")
    return x


def edge_index(axis, sides, n):
    """Index tuple of the edge along ``axis`` on an (..., n, n, n) array."""
    others = [a for a in range(3) if a != axis]
    pos = [None, None, None]
    pos[axis] = slice(None)
    for a, s in zip(others, sides):
        pos[a] = 0 if s == 0 else n - 1
    return (Ellipsis, pos[2], pos[1], pos[0])


def _face_interp(face_values, quadrant, ib_it):
    """Interpolate (..., n, n) face data onto quadrant (q_fast, q_slow)."""
    a_slow = ib_it[quadrant[1]]
    a_fast = ib_it[quadrant[0]]
    return np.matmul(a_slow, face_values) @ a_fast.T


def _half_ops(nodes):
    return (interp_matrix(nodes, 0.5 * (nodes - 1.0)),
            interp_matrix(nodes, 0.5 * (nodes + 1.0)))


def make_watertight(mesh, coords, nodes):
    """Replace hanging face and edge coordinates by interpolation from the full side."""
    out = coords.copy()
    ib_it = _half_ops(nodes)
    n = len(nodes)
    for e, links in enumerate(mesh.faces):
        for f, link in enumerate(links):
            if link.kind != "hanging":
                continue
            o, fo, quad, shift = link.neighbors[0]
            src = restrict_face(coords[:, o], fo)
            val = _face_interp(src, quad, ib_it) + shift[:, None, None]
            out[(slice(None), e) + _face_slice(f, n)] = val
    for edge in mesh.hanging_edges:
        src = coords[(slice(None), edge.owner) + edge_index(edge.axis, edge.owner_sides, n)[1:]]
        val = src @ ib_it[edge.half].T + edge.shift[:, None]
        out[(slice(None), edge.element) + edge_index(edge.axis, edge.sides, n)[1:]] = val
    return out


def _face_slice(face, n):
    d = face // 2
    idx = 0 if face % 2 == 0 else n - 1
    full = [slice(None)] * 3
    full[2 - d] = idx
    return tuple(full)


def nonconforming_coordinate_jump(mesh, coords, nodes):
    """Largest mismatch of hanging-face coordinates versus the full face.

    Both sides are evaluated on the hanging face's nodes: the full side
    through its polynomial interpolant.
    """
    ib_it = _half_ops(nodes)
    worst = 0.0
    for e, links in enumerate(mesh.faces):
        for f, link in enumerate(links):
            if link.kind != "hanging":
                continue
            o, fo, quad, shift = link.neighbors[0]
            full = _face_interp(restrict_face(coords[:, o], fo), quad, ib_it)
            full = full + shift[:, None, None]
            small = restrict_face(coords[:, e], f)
            worst = max(worst, float(np.abs(full - small).max()))
    return worst


# -- metric terms ----------------------------------------------------------

def compute_zeta(coords, deriv, trunc):
    """zeta[j, k] = P_k( x_{j+1} D_k x_{j-1} - (D_k x_{j+1}) x_{j-1} )."""
    dx = np.stack([apply_along(deriv, coords, k) for k in range(3)])
    zeta = np.empty((3, 3) + coords.shape[1:])
    for j in range(3):
        jp, jm = (j + 1) % 3, (j - 1) % 3
        for k in range(3):
            raw = coords[jp] * dx[k, jm] - dx[k, jp] * coords[jm]
            zeta[j, k] = apply_along(trunc, raw, k)
    return zeta


def make_zeta_consistent(mesh, coords, zeta, nodes, deriv, trunc):
    """Overwrite hanging-face and hanging-edge zeta by halved interpolants.

    The source values are recomputed from the full element's coordinates,
    translated across periodic seams, so the result does not depend on
    whether ``zeta`` was already made consistent.
    """
    out = zeta.copy()
    ib_it = _half_ops(nodes)
    n = len(nodes)
    for e, links in enumerate(mesh.faces):
        for f, link in enumerate(links):
            if link.kind != "hanging":
                continue
            o, fo, quad, shift = link.neighbors[0]
            src = compute_zeta(coords[:, o:o + 1] + shift[:, None, None, None, None],
                               deriv, trunc)[:, :, 0]
            for k in face_tangents(f):
                val = _face_interp(restrict_face(src[:, k], fo), quad, ib_it)
                out[(slice(None), k, e) + _face_slice(f, n)] = 0.5 * val
    for edge in mesh.hanging_edges:
        a = edge.axis
        src = compute_zeta(coords[:, edge.owner:edge.owner + 1]
                           + edge.shift[:, None, None, None, None], deriv, trunc)
        line = src[(slice(None), a, 0) + edge_index(a, edge.owner_sides, n)[1:]]
        val = 0.5 * (line @ ib_it[edge.half].T)
        out[(slice(None), a, edge.element) + edge_index(a, edge.sides, n)[1:]] = val
    return out


def compute_jacobian(coords, deriv):
    """Nodal determinant of dx/dr."""
    g = np.stack([apply_along(deriv, coords, k) for k in range(3)], axis=1)
    # g[i, k] = d x_i / d r_k
    return (g[0, 0] * (g[1, 1] * g[2, 2] - g[1, 2] * g[2, 1])
            - g[0, 1] * (g[1, 0] * g[2, 2] - g[1, 2] * g[2, 0])
            + g[0, 2] * (g[1, 0] * g[2, 1] - g[1, 1] * g[2, 0]))


def compute_volume_metrics(zeta, deriv):
    """jr[k, j] = 1/2 (D_{k+1} zeta[j, k-1] - D_{k-1} zeta[j, k+1])."""
    jr = np.empty_like(zeta)
    for k in range(3):
        kp, km = (k + 1) % 3, (k - 1) % 3
        for j in range(3):
            jr[k, j] = 0.5 * (apply_along(deriv, zeta[j, km], kp)
                              - apply_along(deriv, zeta[j, kp], km))
    return jr


def compute_surface_metrics(jr):
    """Surface Jacobian and outward unit normal on all six faces."""
    sj, normal = [], []
    for f in range(6):
        d = f // 2
        sign = -1.0 if f % 2 == 0 else 1.0
        vec = sign * np.stack([restrict_face(jr[d, j], f) for j in range(3)])
        mag = np.sqrt(np.sum(vec * vec, axis=0))
        if np.any(mag <= 0.0):
            raise ValueError("degenerate face: zero surface Jacobian")
        sj.append(mag)
        normal.append(vec / mag)
    return np.stack(sj), np.stack(normal)


def build_geometry(mesh, order, spec=None, treatment="continuous-metric"):
    """Full metric pipeline for one of the three geometry treatments."""
    if treatment not in TREATMENTS:
        raise ValueError("unknown geometry treatment %r" % treatment)
    spec = TransformSpec() if spec is None else spec
    ops = make_tensor_ops(order)
    nodes = ops.basis.nodes
    deriv = ops.basis.deriv
    trunc = modal_truncation_matrix(ops.basis.rule)
    coords = sample_transform(mesh, nodes, spec)
    if treatment != "interpolated":
        coords = make_watertight(mesh, coords, nodes)
    zeta = compute_zeta(coords, deriv, trunc)
    if treatment == "continuous-metric":
        zeta = make_zeta_consistent(mesh, coords, zeta, nodes, deriv, trunc)
    jr = compute_volume_metrics(zeta, deriv)
    jac = compute_jacobian(coords, deriv)
    if np.any(jac <= 0.0):
        raise ValueError("non-positive Jacobian: geometry rejected")
    face_sj, face_normal = compute_surface_metrics(jr)
    return ElementGeometry(order, treatment, coords, zeta, jr, jac,
                           face_sj, face_normal)


def check_discrete_divergence(geometry, mortar_ops, basis):
    """Residual of the discrete divergence theorem per element and direction.

    Returns ``(residual, scale)`` with shapes (E, 3) and (E,): the max-norm of
    S_j^T 1 minus the mortar boundary integral of n_j, and the largest
    nodal |J dr/dx| of each element.
    """
    w = basis.weights
    w3 = w[:, None, None] * w[None, :, None] * w[None, None, :]
    deriv = basis.deriv
    volume = np.zeros((3,) + geometry.jac.shape)
    for j in range(3):
        for k in range(3):
            volume[j] += apply_along(deriv.T, w3 * geometry.jr[k, j], k)
    surface = mortar_ops.integrate_normals()
    res = np.abs(volume - surface).reshape(3, geometry.num_elements, -1).max(axis=2).T
    scale = np.abs(geometry.jr).reshape(9, geometry.num_elements, -1).max(axis=(0, 2))
    return res, scale
