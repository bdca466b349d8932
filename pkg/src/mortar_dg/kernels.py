"""Compiled loops for the right-hand side hot path.

These kernels compute the same quantities as the array implementation in
:mod:`mortar_dg.dg_operator` (which stays the reference and is used for
the transposed and AFIM operators).  They fuse the gather, flux and
scatter steps so no connection-sized temporaries are allocated.
"""

import numpy as np
from numba import njit

__all__ = ["face_node_table", "volume_dual_kernel", "sfim_surface_kernel",
           "inverse_mass_kernel", "KernelData"]

# Voigt component of the symmetric pair (i, j)
_VI = np.array([[0, 5, 4], [5, 1, 3], [4, 3, 2]], dtype=np.int64)


def face_node_table(n):
    """Flat volume node index (i3 n^2 + i2 n + i1) of face node [slow, fast]."""
    table = np.empty((6, n, n), dtype=np.int64)
    a = np.arange(n)[:, None]
    b = np.arange(n)[None, :]
    for f in range(6):
        idx = 0 if f % 2 == 0 else n - 1
        d = f // 2
        if d == 0:
            table[f] = a * n * n + b * n + idx
        elif d == 1:
            table[f] = a * n * n + idx * n + b
        else:
            table[f] = idx * n * n + a * n + b
    return table


@njit(cache=True)
def volume_dual_kernel(q, wjr, deriv, out):
    """Overwrite ``out`` with the volume duals.

    q, out: (9, E, n^3) flat nodes; wjr: (3, 3, E, n^3) with [k, j] = w J dr_k/dx_j.
    """
    vi = _VI
    num_elem = q.shape[1]
    n = deriv.shape[0]
    nn = n * n
    n3 = nn * n
    deriv_t = deriv.T.copy()
    grad = np.empty((3, 3, n3))
    flux = np.empty((3, 3, n3))
    sv = np.empty((3, 3))
    for e in range(num_elem):
        # grad[k, l] = D_k v_l with node = i3 n^2 + i2 n + i1
        for i3 in range(n):
            for i2 in range(n):
                row = i3 * nn + i2 * n
                for i1 in range(n):
                    node = row + i1
                    for l in range(3):
                        g0 = 0.0
                        g1 = 0.0
                        g2 = 0.0
                        for m in range(n):
                            g0 += deriv[i1, m] * q[l, e, row + m]
                            g1 += deriv[i2, m] * q[l, e, i3 * nn + m * n + i1]
                            g2 += deriv[i3, m] * q[l, e, m * nn + i2 * n + i1]
                        grad[0, l, node] = g0
                        grad[1, l, node] = g1
                        grad[2, l, node] = g2
        for node in range(n3):
            # S_j v_l = sum_k wjr[k, j] grad[k, l]
            for j in range(3):
                w0 = wjr[0, j, e, node]
                w1 = wjr[1, j, e, node]
                w2 = wjr[2, j, e, node]
                for l in range(3):
                    sv[j, l] = w0 * grad[0, l, node] + w1 * grad[1, l, node] + w2 * grad[2, l, node]
            out[3, e, node] = sv[0, 0]
            out[4, e, node] = sv[1, 1]
            out[5, e, node] = sv[2, 2]
            out[6, e, node] = 0.5 * (sv[1, 2] + sv[2, 1])
            out[7, e, node] = 0.5 * (sv[0, 2] + sv[2, 0])
            out[8, e, node] = 0.5 * (sv[0, 1] + sv[1, 0])
            # flux[k, i] = sum_j wjr[k, j] sigma_ij
            for k in range(3):
                w0 = wjr[k, 0, e, node]
                w1 = wjr[k, 1, e, node]
                w2 = wjr[k, 2, e, node]
                for i in range(3):
                    flux[k, i, node] = (w0 * q[3 + vi[i, 0], e, node]
                                        + w1 * q[3 + vi[i, 1], e, node]
                                        + w2 * q[3 + vi[i, 2], e, node])
        # g_v_i = -sum_k D_k^T flux[k, i]
        for i3 in range(n):
            for i2 in range(n):
                row = i3 * nn + i2 * n
                for i1 in range(n):
                    node = row + i1
                    for i in range(3):
                        acc = 0.0
                        for m in range(n):
                            acc += (deriv_t[i1, m] * flux[0, i, row + m]
                                    + deriv_t[i2, m] * flux[1, i, i3 * nn + m * n + i1]
                                    + deriv_t[i3, m] * flux[2, i, m * nn + i2 * n + i1])
                        out[i, e, node] = -acc


@njit(cache=True, inline="always")
def _gather_connection(q, e, fn, a_s, a_f, ident, perm, oriented, raw, tmp):
    """Face trace of element ``e`` mapped to mortar nodes: oriented[comp, a, b]."""
    n = fn.shape[0]
    if ident:
        for a in range(n):
            for b in range(n):
                node = fn[a, b]
                for comp in range(9):
                    raw[comp, a, b] = q[comp, e, node]
    else:
        for a in range(n):
            for b in range(n):
                node = fn[a, b]
                for comp in range(9):
                    tmp[comp, a, b] = q[comp, e, node]
        # raw = a_s @ tmp @ a_f^T per component
        for comp in range(9):
            for a in range(n):
                for b in range(n):
                    acc = 0.0
                    for bb in range(n):
                        acc += tmp[comp, a, bb] * a_f[b, bb]
                    oriented[comp, a, b] = acc
            for a in range(n):
                for b in range(n):
                    acc = 0.0
                    for aa in range(n):
                        acc += a_s[a, aa] * oriented[comp, aa, b]
                    raw[comp, a, b] = acc
    for j in range(n * n):
        p = perm[j]
        a, b = j // n, j % n
        pa, pb = p // n, p % n
        for comp in range(9):
            oriented[comp, a, b] = raw[comp, pa, pb]


@njit(cache=True, inline="always")
def _scatter_connection(dual, e, fn, a_s, a_f, ident, inv_perm, out, raw, tmp):
    """Add the transposed connection map of ``dual`` into volume data ``out``."""
    n = fn.shape[0]
    for j in range(n * n):
        p = inv_perm[j]
        a, b = j // n, j % n
        pa, pb = p // n, p % n
        for comp in range(9):
            raw[comp, a, b] = dual[comp, pa, pb]
    if ident:
        for a in range(n):
            for b in range(n):
                node = fn[a, b]
                for comp in range(9):
                    out[comp, e, node] += raw[comp, a, b]
        return
    # a_s^T @ raw @ a_f per component
    for comp in range(9):
        for a in range(n):
            for b in range(n):
                acc = 0.0
                for bb in range(n):
                    acc += raw[comp, a, bb] * a_f[bb, b]
                tmp[comp, a, b] = acc
    for a in range(n):
        for b in range(n):
            node = fn[a, b]
            for comp in range(9):
                acc = 0.0
                for aa in range(n):
                    acc += a_s[aa, a] * tmp[comp, aa, b]
                out[comp, e, node] += acc


@njit(cache=True)
def sfim_surface_kernel(q, out, conn_elem, conn_face, conn_op_slow, conn_op_fast,
                        conn_orient, conn_mortar, perm, inv_perm, table, face_nodes,
                        mortar_minus, plus_ptr, plus_conn, normal, weight,
                        zp_minus, zp_plus, zs_minus, zs_plus, boundary, alpha):
    """Add the SFIM surface duals of every mortar into ``out`` (9, E, n^3)."""
    vi = _VI
    n = table.shape[1]
    num_conn = conn_elem.shape[0]
    num_mortar = mortar_minus.shape[0]
    raw = np.empty((9, n, n))
    tmp = np.empty((9, n, n))
    oriented = np.empty((9, n, n))
    # velocity and traction traces of every connection on mortar nodes
    vt = np.empty((num_conn, n, n, 6))
    for c in range(num_conn):
        op_s = conn_op_slow[c]
        op_f = conn_op_fast[c]
        _gather_connection(q, conn_elem[c], face_nodes[conn_face[c]], table[op_s],
                           table[op_f], op_s == 0 and op_f == 0, perm[conn_orient[c]],
                           oriented, raw, tmp)
        m = conn_mortar[c]
        for a in range(n):
            for b in range(n):
                n0 = normal[0, m, a, b]
                n1 = normal[1, m, a, b]
                n2 = normal[2, m, a, b]
                for i in range(3):
                    vt[c, a, b, i] = oriented[i, a, b]
                    vt[c, a, b, 3 + i] = (oriented[3 + vi[i, 0], a, b] * n0
                                          + oriented[3 + vi[i, 1], a, b] * n1
                                          + oriented[3 + vi[i, 2], a, b] * n2)
    vm = np.empty(3)
    tm = np.empty(3)
    vp = np.empty(3)
    tp = np.empty(3)
    nrm = np.empty(3)
    vstar = np.empty((n, n, 3))
    tstar = np.empty((n, n, 3))
    dual = np.empty((9, n, n))
    for m in range(num_mortar):
        cmin = mortar_minus[m]
        for a in range(n):
            for b in range(n):
                for i in range(3):
                    nrm[i] = normal[i, m, a, b]
                    vm[i] = vt[cmin, a, b, i]
                    tm[i] = vt[cmin, a, b, 3 + i]
                    vp[i] = 0.0
                    tp[i] = 0.0
                for p in range(plus_ptr[m], plus_ptr[m + 1]):
                    cp = plus_conn[p]
                    for i in range(3):
                        vp[i] += vt[cp, a, b, i]
                        tp[i] += vt[cp, a, b, 3 + i]
                vmn = vm[0] * nrm[0] + vm[1] * nrm[1] + vm[2] * nrm[2]
                tmn = tm[0] * nrm[0] + tm[1] * nrm[1] + tm[2] * nrm[2]
                zpm = zp_minus[m, a, b]
                zsm = zs_minus[m, a, b]
                if boundary[m]:
                    v_n = vmn - alpha * tmn / zpm
                    for i in range(3):
                        vmt = vm[i] - nrm[i] * vmn
                        tmt = tm[i] - nrm[i] * tmn
                        vstar[a, b, i] = nrm[i] * v_n + vmt - alpha * tmt / zsm
                        tstar[a, b, i] = 0.0
                    continue
                zpp = zp_plus[m, a, b]
                zsp = zs_plus[m, a, b]
                vpn = vp[0] * nrm[0] + vp[1] * nrm[1] + vp[2] * nrm[2]
                tpn = tp[0] * nrm[0] + tp[1] * nrm[1] + tp[2] * nrm[2]
                kp = 1.0 / (zpm + zpp)
                ks = 1.0 / (zsm + zsp)
                t_n = kp * (zpp * tmn + zpm * tpn - alpha * zpm * zpp * (vmn - vpn))
                v_n = kp * (zpm * vmn + zpp * vpn - alpha * (tmn - tpn))
                for i in range(3):
                    vmt = vm[i] - nrm[i] * vmn
                    vpt = vp[i] - nrm[i] * vpn
                    tmt = tm[i] - nrm[i] * tmn
                    tpt = tp[i] - nrm[i] * tpn
                    tstar[a, b, i] = nrm[i] * t_n + ks * (zsp * tmt + zsm * tpt
                                                          - alpha * zsm * zsp * (vmt - vpt))
                    vstar[a, b, i] = nrm[i] * v_n + ks * (zsm * vmt + zsp * vpt
                                                          - alpha * (tmt - tpt))
        count = plus_ptr[m + 1] - plus_ptr[m] + 1
        for slot in range(count):
            if slot == 0:
                c = cmin
                sign = 1.0
            else:
                c = plus_conn[plus_ptr[m] + slot - 1]
                sign = -1.0
            for a in range(n):
                for b in range(n):
                    ws = weight[m, a, b] * sign
                    n0 = normal[0, m, a, b]
                    n1 = normal[1, m, a, b]
                    n2 = normal[2, m, a, b]
                    # jump between the flux velocity and this side's own trace
                    if slot == 0:
                        d0 = ws * (vstar[a, b, 0] - vt[cmin, a, b, 0])
                        d1 = ws * (vstar[a, b, 1] - vt[cmin, a, b, 1])
                        d2 = ws * (vstar[a, b, 2] - vt[cmin, a, b, 2])
                    else:
                        s0 = 0.0
                        s1 = 0.0
                        s2 = 0.0
                        for p in range(plus_ptr[m], plus_ptr[m + 1]):
                            cp = plus_conn[p]
                            s0 += vt[cp, a, b, 0]
                            s1 += vt[cp, a, b, 1]
                            s2 += vt[cp, a, b, 2]
                        d0 = ws * (vstar[a, b, 0] - s0)
                        d1 = ws * (vstar[a, b, 1] - s1)
                        d2 = ws * (vstar[a, b, 2] - s2)
                    dual[0, a, b] = ws * tstar[a, b, 0]
                    dual[1, a, b] = ws * tstar[a, b, 1]
                    dual[2, a, b] = ws * tstar[a, b, 2]
                    dual[3, a, b] = n0 * d0
                    dual[4, a, b] = n1 * d1
                    dual[5, a, b] = n2 * d2
                    dual[6, a, b] = 0.5 * (n2 * d1 + n1 * d2)
                    dual[7, a, b] = 0.5 * (n2 * d0 + n0 * d2)
                    dual[8, a, b] = 0.5 * (n1 * d0 + n0 * d1)
            op_s = conn_op_slow[c]
            op_f = conn_op_fast[c]
            _scatter_connection(dual, conn_elem[c], face_nodes[conn_face[c]], table[op_s],
                                table[op_f], op_s == 0 and op_f == 0,
                                inv_perm[conn_orient[c]], out, raw, tmp)


@njit(cache=True)
def inverse_mass_kernel(dual, inv_mass_rho, lam_over_mass, two_mu_over_mass, out):
    """Velocity rates dual / (w J rho); stress rates (lam tr(E) I + 2 mu E) / (w J)."""
    num_elem = dual.shape[1]
    nodes = dual.shape[2]
    for e in range(num_elem):
        for k in range(nodes):
            for i in range(3):
                out[i, e, k] = dual[i, e, k] * inv_mass_rho[e, k]
            tr = lam_over_mass[e, k] * (dual[3, e, k] + dual[4, e, k] + dual[5, e, k])
            tm = two_mu_over_mass[e, k]
            for a in range(3):
                out[3 + a, e, k] = tm * dual[3 + a, e, k] + tr
                out[6 + a, e, k] = tm * dual[6 + a, e, k]


class KernelData:
    """Flat connection tables consumed by :func:`sfim_surface_kernel`."""

    def __init__(self, ops, z, alpha):
        n = ops.n
        minus_idx = np.nonzero(ops.minus)[0]
        mortar_minus = np.empty(ops.num_mortars, dtype=np.int64)
        mortar_minus[ops.conn_mortar[minus_idx]] = minus_idx
        plus_idx = np.nonzero(~ops.minus)[0]
        order = np.argsort(ops.conn_mortar[plus_idx], kind="stable")
        plus_conn = plus_idx[order].astype(np.int64)
        counts = np.bincount(ops.conn_mortar[plus_idx], minlength=ops.num_mortars)
        plus_ptr = np.concatenate([[0], np.cumsum(counts)]).astype(np.int64)
        self.args = (
            ops.conn_elem.astype(np.int64),
            ops.conn_face.astype(np.int64),
            ops.conn_op_slow.astype(np.int64),
            ops.conn_op_fast.astype(np.int64),
            ops.conn_orient.astype(np.int64),
            ops.conn_mortar.astype(np.int64),
            np.stack([ops._perm[c] for c in range(8)]).astype(np.int64),
            np.stack([ops._inv_perm[c] for c in range(8)]).astype(np.int64),
            np.ascontiguousarray(ops.table),
            face_node_table(n),
            mortar_minus,
            plus_ptr,
            plus_conn,
            np.ascontiguousarray(ops.mortar_normal),
            np.ascontiguousarray(ops.mortar_weight),
            np.ascontiguousarray(z["zp_minus"]),
            np.ascontiguousarray(z["zp_plus"]),
            np.ascontiguousarray(z["zs_minus"]),
            np.ascontiguousarray(z["zs_plus"]),
            ops.boundary.astype(np.bool_),
            float(alpha),
        )
