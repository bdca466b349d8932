"""Structured 2:1 adapted hexahedral meshes and their mortar decomposition.

A mesh is a base grid of cells, each either kept whole or split once into
eight children.  Geometry lives on an integer "fine" grid with two fine
cells per base cell, so a whole cell has size 2 and a child has size 1.
Elements are ordered base cell by base cell (first axis fastest) and
children in the same lexicographic order.
"""

from dataclasses import dataclass, field
import itertools

import numpy as np

from .mortar_projection import (OP_IDENTITY, interp_op, project_op)
from .tensor_basis import face_tangents

__all__ = [
    "FaceLink",
    "HangingEdge",
    "Mesh",
    "Mortar",
    "MortarSet",
    "build_adapted_box",
    "refine_uniform",
    "build_mortars",
    "checkerboard",
    "face_coverage",
    "orientation_permutation",
    "invert_orientation",
    "compose_orientation",
]


@dataclass(frozen=True)
class FaceLink:
    """Neighbor information of one element face.

    kind is "boundary", "conforming", "hanging" (this face is a quarter of
    a larger neighbor face) or "full" (four smaller neighbors).  Each entry
    of ``neighbors`` is ``(element, face, quadrant, shift)`` where
    ``quadrant`` is ``(q_fast, q_slow)`` locating the smaller face inside
    the larger one and ``shift`` translates the neighbor's reference-box
    coordinates next to this element (nonzero only across periodic seams).
    """

    kind: str
    neighbors: tuple = ()


@dataclass(frozen=True)
class HangingEdge:
    """Edge of a small element lying on one half of a larger element's edge."""

    element: int
    axis: int
    sides: tuple
    owner: int
    owner_sides: tuple
    half: int
    shift: np.ndarray


@dataclass
class Mesh:
    base_dims: tuple
    periodic: tuple
    box_lo: np.ndarray
    box_hi: np.ndarray
    refined: np.ndarray
    elem_lo: np.ndarray
    elem_size: np.ndarray
    owner: np.ndarray
    faces: list = field(default_factory=list)
    hanging_edges: list = field(default_factory=list)

    @property
    def num_elements(self):
        return len(self.elem_size)

    @property
    def fine_dims(self):
        return tuple(2 * d for d in self.base_dims)

    @property
    def fine_spacing(self):
        return (self.box_hi - self.box_lo) / np.array(self.fine_dims)

    @property
    def period(self):
        return self.box_hi - self.box_lo

    def element_bounds(self, e):
        """Reference-box corners (lo, hi) of element ``e``."""
        g = np.array(self.fine_dims)
        lo_i = self.elem_lo[e]
        hi_i = lo_i + self.elem_size[e]
        span = self.box_hi - self.box_lo
        lo = self.box_lo + span * lo_i / g
        hi = self.box_lo + span * hi_i / g
        return lo, hi

    def summary(self):
        kinds = {}
        for links in self.faces:
            for link in links:
                kinds[link.kind] = kinds.get(link.kind, 0) + 1
        return {
            "base_dims": list(self.base_dims),
            "periodic": list(self.periodic),
            "num_elements": self.num_elements,
            "refined_cells": int(self.refined.sum()),
            "face_kinds": kinds,
            "hanging_edges": len(self.hanging_edges),
        }


def checkerboard(cell):
    """Refinement predicate selecting base cells with even index sum."""
    return sum(cell) % 2 == 0


def build_adapted_box(base, refine=None, periodic=(True, True, True),
                      box=((0.0, 0.0, 0.0), (1.0, 1.0, 1.0)),
                      element_order=None):
    """Build a base grid with single-level refinement.

    Parameters
    ----------
    base : tuple of 3 ints
        Number of base cells per direction.
    refine : callable, iterable of cells, or None
        Predicate over base cell indices ``(i1, i2, i3)`` or an explicit
        collection of cells to split.
    periodic : 3 booleans
    box : pair of corner points of the reference box.
    element_order : optional permutation applied to the canonical element
        ordering (used to check ordering independence).
    """
    base = tuple(int(b) for b in base)
    if any(b < 1 for b in base):
        raise ValueError("base grid dimensions must be >= 1")
    refined = np.zeros(base, dtype=bool)
    if refine is not None:
        if callable(refine):
            for cell in itertools.product(*(range(b) for b in base)):
                refined[cell] = bool(refine(cell))
        else:
            for cell in refine:
                refined[tuple(cell)] = True
    # One refinement level can never violate 2:1 balance, so there is
    # nothing to propagate.
    los, sizes = [], []
    for i3, i2, i1 in itertools.product(*(range(b) for b in base[::-1])):
        lo = np.array([2 * i1, 2 * i2, 2 * i3])
        if refined[i1, i2, i3]:
            for c3, c2, c1 in itertools.product(range(2), repeat=3):
                los.append(lo + np.array([c1, c2, c3]))
                sizes.append(1)
        else:
            los.append(lo)
            sizes.append(2)
    elem_lo = np.array(los, dtype=int)
    elem_size = np.array(sizes, dtype=int)
    if element_order is not None:
        order = np.asarray(element_order)
        elem_lo = elem_lo[order]
        elem_size = elem_size[order]
    fine = tuple(2 * b for b in base)
    owner = -np.ones(fine, dtype=int)
    for e, (lo, s) in enumerate(zip(elem_lo, elem_size)):
        owner[lo[0]:lo[0] + s, lo[1]:lo[1] + s, lo[2]:lo[2] + s] = e
    mesh = Mesh(base, tuple(bool(p) for p in periodic),
                np.array(box[0], dtype=float), np.array(box[1], dtype=float),
                refined, elem_lo, elem_size, owner)
    mesh.faces = [_element_faces(mesh, e) for e in range(mesh.num_elements)]
    mesh.hanging_edges = _hanging_edges(mesh)
    return mesh


def refine_uniform(mesh):
    """Bisect every element (each element becomes 8)."""
    base = tuple(2 * b for b in mesh.base_dims)
    flags = np.repeat(np.repeat(np.repeat(mesh.refined, 2, 0), 2, 1), 2, 2)
    cells = [tuple(c) for c in np.argwhere(flags)]
    return build_adapted_box(base, cells, mesh.periodic,
                             (mesh.box_lo, mesh.box_hi))


def _wrap(mesh, axis, index):
    """Wrap a fine index along ``axis``; return (index, shift) or None."""
    g = mesh.fine_dims[axis]
    if 0 <= index < g:
        return index, 0.0
    if not mesh.periodic[axis]:
        return None
    period = mesh.period[axis]
    if index < 0:
        return index + g, -period
    return index - g, period


def _element_faces(mesh, e):
    lo = mesh.elem_lo[e]
    s = mesh.elem_size[e]
    links = []
    for f in range(6):
        d, side = f // 2, f % 2
        a_fast, a_slow = face_tangents(f)
        layer = lo[d] - 1 if side == 0 else lo[d] + s
        wrapped = _wrap(mesh, d, layer)
        if wrapped is None:
            links.append(FaceLink("boundary"))
            continue
        layer, shift_d = wrapped
        shift = np.zeros(3)
        shift[d] = shift_d
        owners = []
        for t_slow in range(lo[a_slow], lo[a_slow] + s):
            for t_fast in range(lo[a_fast], lo[a_fast] + s):
                idx = [0, 0, 0]
                idx[d], idx[a_fast], idx[a_slow] = layer, t_fast, t_slow
                o = int(mesh.owner[tuple(idx)])
                if o not in owners:
                    owners.append(o)
        other = 2 * d + (1 - side)
        if len(owners) == 1:
            o = owners[0]
            so = mesh.elem_size[o]
            if so == s:
                links.append(FaceLink("conforming", ((o, other, None, shift),)))
            else:
                q = ((lo[a_fast] - mesh.elem_lo[o][a_fast]) // s,
                     (lo[a_slow] - mesh.elem_lo[o][a_slow]) // s)
                links.append(FaceLink("hanging", ((o, other, q, shift),)))
        else:
            nbrs = []
            for o in sorted(owners):
                lo_o = mesh.elem_lo[o]
                q = (lo_o[a_fast] - lo[a_fast], lo_o[a_slow] - lo[a_slow])
                nbrs.append((o, other, q, shift))
            if len(nbrs) != 4:
                raise ValueError("mesh is not 2:1 balanced")
            links.append(FaceLink("full", tuple(nbrs)))
    return links


def _hanging_edges(mesh):
    edges = []
    for e in range(mesh.num_elements):
        if mesh.elem_size[e] != 1:
            continue
        lo = mesh.elem_lo[e]
        for a in range(3):
            b, c = [x for x in range(3) if x != a]
            for sc, sb in itertools.product(range(2), repeat=2):
                pb, pc = lo[b] + sb, lo[c] + sc
                best = None
                for cb, cc in itertools.product((pb - 1, pb), (pc - 1, pc)):
                    wb = _wrap(mesh, b, cb)
                    wc = _wrap(mesh, c, cc)
                    if wb is None or wc is None:
                        continue
                    idx = [0, 0, 0]
                    idx[a], idx[b], idx[c] = lo[a], wb[0], wc[0]
                    o = int(mesh.owner[tuple(idx)])
                    if mesh.elem_size[o] != 2:
                        continue
                    # owner's corner in coordinates unwrapped next to e
                    lob = mesh.elem_lo[o][b] + (cb - wb[0])
                    loc = mesh.elem_lo[o][c] + (cc - wc[0])
                    if pb not in (lob, lob + 2) or pc not in (loc, loc + 2):
                        continue
                    if best is not None and best[0] <= o:
                        continue
                    shift = np.zeros(3)
                    shift[b], shift[c] = wb[1], wc[1]
                    best = (o, (int(pb != lob), int(pc != loc)), shift)
                if best is None:
                    continue
                o, osides, shift = best
                half = int(lo[a] - mesh.elem_lo[o][a])
                edges.append(HangingEdge(e, a, (sb, sc), o, osides, half, shift))
    return edges


# -- orientation codes ---------------------------------------------------

def orientation_permutation(code, n):
    """Flat node permutation of an (n, n) face array for a dihedral code.

    Bit 0 flips the fast index, bit 1 flips the slow index and bit 2
    transposes (applied last).  ``oriented.ravel() == face.ravel()[perm]``.
    """
    code = int(code)
    if not 0 <= code < 8:
        raise ValueError("orientation code must be in 0..7")
    idx = np.arange(n * n).reshape(n, n)
    if code & 1:
        idx = idx[:, ::-1]
    if code & 2:
        idx = idx[::-1, :]
    if code & 4:
        idx = idx.T
    return idx.ravel()


def _code_of_perm(perm, n):
    for c in range(8):
        if np.array_equal(orientation_permutation(c, n), perm):
            return c
    raise ValueError("not a dihedral permutation")


def compose_orientation(first, second, n=3):
    """Code equivalent to applying ``first`` then ``second``."""
    p1 = orientation_permutation(first, n)
    p2 = orientation_permutation(second, n)
    return _code_of_perm(p1[p2], n)


def invert_orientation(code, n=3):
    perm = orientation_permutation(code, n)
    return _code_of_perm(np.argsort(perm), n)


# -- mortars ---------------------------------------------------------------

@dataclass(frozen=True)
class Mortar:
    """One mortar element.

    ``minus`` is ``(element, face)``; each ``plus`` entry is
    ``(element, face, op_slow, op_fast, shift, orientation)`` where the two
    ops are ``OP_*`` codes mapping that face's nodal data onto the mortar
    nodes and ``shift`` translates the plus element next to the minus one.
    """

    minus: tuple
    plus: tuple
    nonconforming: bool

    @property
    def is_boundary(self):
        return len(self.plus) == 0


@dataclass(frozen=True)
class MortarSet:
    kind: str
    mortars: tuple

    def __len__(self):
        return len(self.mortars)

    def counts(self):
        out = {"boundary": 0, "conforming": 0, "nonconforming": 0}
        for m in self.mortars:
            if m.is_boundary:
                out["boundary"] += 1
            elif m.nonconforming:
                out["nonconforming"] += 1
            else:
                out["conforming"] += 1
        return out


def build_mortars(mesh, kind="full"):
    """Decompose all element faces into mortars.

    ``kind`` is "full" (mortar conforms to the larger face, four plus-side
    children) or "split" (four mortars conforming to the hanging faces).
    """
    if kind not in ("full", "split"):
        raise ValueError("mortar kind must be 'full' or 'split'")
    mortars = []
    for e in range(mesh.num_elements):
        for f, link in enumerate(mesh.faces[e]):
            if link.kind == "boundary":
                mortars.append(Mortar((e, f), (), False))
            elif link.kind == "conforming":
                o, fo, _, shift = link.neighbors[0]
                if (e, f) < (o, fo):
                    plus = ((o, fo, OP_IDENTITY, OP_IDENTITY, shift, 0),)
                    mortars.append(Mortar((e, f), plus, False))
            elif link.kind == "full":
                if kind == "full":
                    plus = tuple(
                        (o, fo, project_op(q[1]), project_op(q[0]), shift, 0)
                        for o, fo, q, shift in link.neighbors)
                    mortars.append(Mortar((e, f), plus, True))
                else:
                    for o, fo, q, shift in link.neighbors:
                        plus = ((e, f, interp_op(q[1]), interp_op(q[0]),
                                 -shift, 0),)
                        mortars.append(Mortar((o, fo), plus, True))
    return MortarSet(kind, tuple(mortars))


def face_coverage(mesh, mortar_set):
    """Fraction of each element face covered by mortars, shape (E, 6)."""
    cover = np.zeros((mesh.num_elements, 6))
    for m in mortar_set.mortars:
        e, f = m.minus
        cover[e, f] += 1.0
        for o, fo, op_s, op_f, _, _ in m.plus:
            # interpolation onto a mortar means the mortar is a quadrant
            frac = 0.25 if op_s in (1, 2) else 1.0
            cover[o, fo] += frac
    return cover
