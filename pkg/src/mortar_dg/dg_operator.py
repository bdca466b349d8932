"""Semi-discrete right-hand side of the velocity-stress system.

Two surface treatments are provided.  In the symmetric flux integral
method (``"sfim"``) traces are projected to the mortar and the flux is
tested against the same projected test functions on mortar quadrature.
In the asymmetric method (``"afim"``) the mortar flux is mapped back to
each element face and integrated with the face rule.

Every right-hand side is formed in "dual" variables first: the velocity
dual is M_rho dv/dt and the stress dual is the tensor E with
M sigma_dot = C : E, so the energy rate is v.g_v + sigma:E summed over
all nodes.
"""

from dataclasses import dataclass
import logging

import numpy as np

from .material_state import VOIGT_INDEX, State, compliance_apply, voigt_contract
from .mortar_projection import (assemble_mortar_operators, build_half_ops,
                                lift_faces, restrict_faces)
from .tensor_basis import apply_along, diff_matrix, lgl_rule

__all__ = [
    "MortarTrace",
    "FluxResult",
    "numerical_flux",
    "boundary_flux",
    "numerical_flux_transpose",
    "DGOperator",
    "energy_rate",
    "symmetric_gradient_dual",
]

log = logging.getLogger(__name__)


@dataclass
class MortarTrace:
    """Mortar-node traces, component axis first: (3, M, n, n)."""

    v_minus: np.ndarray
    v_plus: np.ndarray
    t_minus: np.ndarray
    t_plus: np.ndarray
    zp_minus: np.ndarray
    zp_plus: np.ndarray
    zs_minus: np.ndarray
    zs_plus: np.ndarray


@dataclass
class FluxResult:
    t_star: np.ndarray
    v_star: np.ndarray
    alpha: float


def _split(vec, normal):
    par = np.sum(vec * normal, axis=0)
    return par, vec - normal * par


def numerical_flux(v_minus, v_plus, t_minus, t_plus, normal,
                   zp_minus, zp_plus, zs_minus, zs_plus, alpha):
    """Isotropic interface flux; vectors carry the component on axis 0."""
    if (np.any(zp_minus <= 0) or np.any(zp_plus <= 0)
            or np.any(zs_minus <= 0) or np.any(zs_plus <= 0)):
        raise ValueError("impedances must be positive")
    vm_n, vm_t = _split(v_minus, normal)
    vp_n, vp_t = _split(v_plus, normal)
    tm_n, tm_t = _split(t_minus, normal)
    tp_n, tp_t = _split(t_plus, normal)
    kp = 1.0 / (zp_minus + zp_plus)
    ks = 1.0 / (zs_minus + zs_plus)
    t_n = kp * (zp_plus * tm_n + zp_minus * tp_n
                - alpha * zp_minus * zp_plus * (vm_n - vp_n))
    v_n = kp * (zp_minus * vm_n + zp_plus * vp_n - alpha * (tm_n - tp_n))
    t_t = ks * (zs_plus * tm_t + zs_minus * tp_t
                - alpha * zs_minus * zs_plus * (vm_t - vp_t))
    v_t = ks * (zs_minus * vm_t + zs_plus * vp_t - alpha * (tm_t - tp_t))
    return FluxResult(normal * t_n + t_t, normal * v_n + v_t, alpha)


def numerical_flux_transpose(a_v, b_t, normal, zp_minus, zp_plus, zs_minus,
                             zs_plus, alpha):
    """Transpose of :func:`numerical_flux` as a linear map of the traces.

    ``a_v`` and ``b_t`` are sensitivities with respect to v* and T*; the
    result holds those with respect to (v-, v+, T-, T+).
    """
    a_n, a_t = _split(a_v, normal)
    b_n, b_t = _split(b_t, normal)
    kp = 1.0 / (zp_minus + zp_plus)
    ks = 1.0 / (zs_minus + zs_plus)
    zzp = alpha * zp_minus * zp_plus
    zzs = alpha * zs_minus * zs_plus

    def combine(par, perp):
        return normal * par + perp

    v_minus = combine(kp * (zp_minus * a_n - zzp * b_n), ks * (zs_minus * a_t - zzs * b_t))
    v_plus = combine(kp * (zp_plus * a_n + zzp * b_n), ks * (zs_plus * a_t + zzs * b_t))
    t_minus = combine(kp * (zp_plus * b_n - alpha * a_n), ks * (zs_plus * b_t - alpha * a_t))
    t_plus = combine(kp * (zp_minus * b_n + alpha * a_n), ks * (zs_minus * b_t + alpha * a_t))
    return v_minus, v_plus, t_minus, t_plus


def boundary_flux(v_minus, t_minus, normal, zp_minus, zs_minus, alpha):
    """Traction-free boundary: zero traction, velocity corrected by alpha."""
    vm_n, vm_t = _split(v_minus, normal)
    tm_n, tm_t = _split(t_minus, normal)
    v_n = vm_n - alpha * tm_n / zp_minus
    v_t = vm_t - alpha * tm_t / zs_minus
    return FluxResult(np.zeros_like(t_minus), normal * v_n + v_t, alpha)


def symmetric_gradient_dual(normal, dv):
    """Voigt components of 1/2 (n_j dv_i + n_i dv_j); component axis 0."""
    return np.stack([
        normal[0] * dv[0],
        normal[1] * dv[1],
        normal[2] * dv[2],
        0.5 * (normal[2] * dv[1] + normal[1] * dv[2]),
        0.5 * (normal[2] * dv[0] + normal[0] * dv[2]),
        0.5 * (normal[1] * dv[0] + normal[0] * dv[1]),
    ])


def _traction_cf(stress, normal):
    """Traction with component axis 1: stress (C, 6, ...), normal (C, 3, ...)."""
    return np.stack([sum(stress[:, VOIGT_INDEX[i, j]] * normal[:, j] for j in range(3))
                     for i in range(3)], axis=1)


class DGOperator:
    """Right-hand side evaluator for a fixed mesh, geometry and material.

    Parameters
    ----------
    mesh, mortar_set, geometry, material
        Topology, mortars, metric terms and nodal material.
    scheme : "sfim" or "afim"
    alpha : float in [0, 1], 1 for upwind and 0 for central flux.
    """

    def __init__(self, mesh, mortar_set, geometry, material, scheme="sfim", alpha=1.0,
                 compiled=True):
        if scheme not in ("sfim", "afim"):
            raise ValueError("scheme must be 'sfim' or 'afim'")
        if not 0.0 <= alpha <= 1.0:
            raise ValueError("alpha must lie in [0, 1]")
        order = geometry.order
        self.order = order
        self.n = order + 1
        self.num_elements = geometry.jac.shape[0]
        self.scheme = scheme
        self.alpha = float(alpha)
        self.mesh = mesh
        self.geometry = geometry
        self.material = material
        self.basis = diff_matrix(lgl_rule(order))
        self.half = build_half_ops(order)
        self.mortars = assemble_mortar_operators(mesh, mortar_set, geometry, self.half)
        w = self.basis.weights
        self.w3 = w[:, None, None] * w[None, :, None] * w[None, None, :]
        self.deriv = self.basis.deriv
        self.deriv_t = np.ascontiguousarray(self.deriv.T)
        self.wjr = self.w3 * geometry.jr
        self.mass = self.w3 * geometry.jac
        self.mass_rho = self.mass * material.rho
        self.inv_mass_rho = 1.0 / self.mass_rho
        self.lam_over_mass = material.lam / self.mass
        self.two_mu_over_mass = 2.0 * material.mu / self.mass
        ops = self.mortars
        self.conn_normal = np.ascontiguousarray(
            np.moveaxis(ops.mortar_normal[:, ops.conn_mortar], 0, 1))
        self.conn_weight = ops.mortar_weight[ops.conn_mortar][:, None]
        self._impedances()
        self._kernel = None
        self._wjr_flat = None
        if compiled:
            from .kernels import KernelData
            nodes = self.n ** 3
            self._wjr_flat = np.ascontiguousarray(
                self.wjr.reshape(3, 3, self.num_elements, nodes))
            self._flat_mass = tuple(
                np.ascontiguousarray(np.broadcast_to(a, self.mass.shape)).reshape(
                    self.num_elements, nodes)
                for a in (self.inv_mass_rho, self.lam_over_mass, self.two_mu_over_mass))
            if scheme == "sfim":
                self._kernel = KernelData(ops, self.z, self.alpha)
        if scheme == "afim":
            self.face_weight = (geometry.face_sj * ops.face_weights)[:, :, None]
            self.face_normal = np.ascontiguousarray(np.moveaxis(geometry.face_normal, 2, 1))

    # -- setup ---------------------------------------------------------------
    def _impedances(self):
        ops = self.mortars
        out = {}
        for name, field in (("zp", self.material.zp), ("zs", self.material.zs)):
            faces = restrict_faces(field[None])
            tr = ops.gather(faces)[:, 0]
            flat = tr.reshape(ops.num_connections, -1)
            for side, mat in (("minus", ops.sum_minus), ("plus", ops.sum_plus)):
                val = (mat @ flat).reshape(ops.num_mortars, self.n, self.n)
                bad = val <= 0.0
                if side == "plus":
                    bad &= ~ops.boundary[:, None, None]
                if np.any(bad):
                    floor = self._face_floor(field, side)
                    log.warning("clamped %d non-positive mortar impedances", int(bad.sum()))
                    val = np.where(bad, floor[:, None, None], val)
                if side == "plus":
                    val = np.where(ops.boundary[:, None, None], 1.0, val)
                out[name + "_" + side] = val
        self.z = out

    def _face_floor(self, field, side):
        """Smallest positive nodal value over the faces feeding each mortar side."""
        ops = self.mortars
        faces = restrict_faces(field[None])[:, :, 0]
        floor = np.full(ops.num_mortars, np.inf)
        want = ops.minus if side == "minus" else ~ops.minus
        for c in np.nonzero(want)[0]:
            vals = faces[ops.conn_face[c], ops.conn_elem[c]]
            pos = vals[vals > 0]
            if pos.size:
                m = ops.conn_mortar[c]
                floor[m] = min(floor[m], pos.min())
        return floor

    # -- pieces ----------------------------------------------------------------
    def volume_dual(self, q):
        """Volume contributions to the velocity and stress duals."""
        v, s = q[:3], q[3:]
        wjr = self.wjr
        gv = np.zeros_like(v)
        for k in range(3):
            for i in range(3):
                flux = (wjr[k, 0] * s[VOIGT_INDEX[i, 0]]
                        + wjr[k, 1] * s[VOIGT_INDEX[i, 1]]
                        + wjr[k, 2] * s[VOIGT_INDEX[i, 2]])
                gv[i] -= apply_along(self.deriv_t, flux, k)
        grad = [apply_along(self.deriv, v, k) for k in range(3)]
        # sv[j][l] = S_j v_l
        sv = [[wjr[0, j] * grad[0][l] + wjr[1, j] * grad[1][l] + wjr[2, j] * grad[2][l]
               for l in range(3)] for j in range(3)]
        ge = np.empty_like(s)
        for a, (i, j) in enumerate(((0, 0), (1, 1), (2, 2), (1, 2), (0, 2), (0, 1))):
            ge[a] = sv[i][i] if i == j else 0.5 * (sv[i][j] + sv[j][i])
        return gv, ge

    def traces(self, q):
        """Connection traces (C, 9, n, n) and mortar-level :class:`MortarTrace`."""
        ops = self.mortars
        conn = ops.gather(restrict_faces(q))
        tc = _traction_cf(conn[:, 3:], self.conn_normal)
        vt = np.concatenate([conn[:, :3], tc], axis=1)
        flat = vt.reshape(ops.num_connections, -1)
        shape = (ops.num_mortars, 6, self.n, self.n)
        minus = np.moveaxis((ops.sum_minus @ flat).reshape(shape), 1, 0)
        plus = np.moveaxis((ops.sum_plus @ flat).reshape(shape), 1, 0)
        z = self.z
        trace = MortarTrace(minus[:3], plus[:3], minus[3:], plus[3:],
                            z["zp_minus"], z["zp_plus"], z["zs_minus"], z["zs_plus"])
        return conn, trace

    def flux(self, trace):
        ops = self.mortars
        normal = ops.mortar_normal
        res = numerical_flux(trace.v_minus, trace.v_plus, trace.t_minus, trace.t_plus,
                             normal, trace.zp_minus, trace.zp_plus,
                             trace.zs_minus, trace.zs_plus, self.alpha)
        if np.any(ops.boundary):
            b = ops.boundary
            bres = boundary_flux(trace.v_minus[:, b], trace.t_minus[:, b], normal[:, b],
                                 trace.zp_minus[b], trace.zs_minus[b], self.alpha)
            res.t_star[:, b] = bres.t_star
            res.v_star[:, b] = bres.v_star
        return res

    def surface_dual(self, q):
        """Surface contributions to the duals as face data (6, E, 9, n, n)."""
        ops = self.mortars
        conn, trace = self.traces(q)
        res = self.flux(trace)
        cm = ops.conn_mortar
        sign = ops.conn_sign[:, None, None, None]
        t_star = np.moveaxis(res.t_star, 0, 1)[cm]
        v_star = np.moveaxis(res.v_star, 0, 1)[cm]
        if self.scheme == "sfim":
            v_side = np.where(ops.minus[:, None, None, None],
                              np.moveaxis(trace.v_minus, 0, 1)[cm],
                              np.moveaxis(trace.v_plus, 0, 1)[cm])
            gv = self.conn_weight * sign * t_star
            dv = self.conn_weight * (v_star - v_side)
            ge = np.moveaxis(symmetric_gradient_dual(
                np.moveaxis(self.conn_normal, 1, 0), np.moveaxis(sign * dv, 1, 0)), 0, 1)
            return ops.scatter(np.concatenate([gv, ge], axis=1))
        back = ops.apply_back(np.concatenate([sign * t_star, v_star], axis=1))
        faces_q = restrict_faces(q)
        gv = self.face_weight * back[:, :, :3]
        dv = self.face_weight * (back[:, :, 3:] - faces_q[:, :, :3])
        ge = np.moveaxis(symmetric_gradient_dual(
            np.moveaxis(self.face_normal, 2, 0), np.moveaxis(dv, 2, 0)), 0, 2)
        return np.concatenate([gv, ge], axis=2)

    def _flux_transpose(self, trace, a_v, b_t):
        ops = self.mortars
        normal = ops.mortar_normal
        vm, vp, tm, tp = numerical_flux_transpose(
            a_v, b_t, normal, trace.zp_minus, trace.zp_plus,
            trace.zs_minus, trace.zs_plus, self.alpha)
        if np.any(ops.boundary):
            b = ops.boundary
            a_n, a_t = _split(a_v[:, b], normal[:, b])
            vm[:, b] = a_v[:, b]
            tm[:, b] = -self.alpha * (normal[:, b] * a_n / trace.zp_minus[b]
                                      + a_t / trace.zs_minus[b])
            vp[:, b] = 0.0
            tp[:, b] = 0.0
        return vm, vp, tm, tp

    def _traces_transpose(self, vm, vp, tm, tp, extra_v=None):
        """Map mortar-side sensitivities back to connection face data."""
        ops = self.mortars
        cm = ops.conn_mortar
        minus = ops.minus[:, None, None, None]
        dv = np.where(minus, np.moveaxis(vm, 0, 1)[cm], np.moveaxis(vp, 0, 1)[cm])
        dt = np.where(minus, np.moveaxis(tm, 0, 1)[cm], np.moveaxis(tp, 0, 1)[cm])
        if extra_v is not None:
            dv = dv + extra_v
        ds = np.moveaxis(symmetric_gradient_dual(
            np.moveaxis(self.conn_normal, 1, 0), np.moveaxis(dt, 1, 0)), 0, 1)
        return ops.scatter(np.concatenate([dv, ds], axis=1))

    def surface_dual_transpose(self, p):
        """Adjoint of the surface part of :meth:`dual` in the energy pairing.

        For all p, q: <p, surface(q)> == <surface_transpose(p), q> where
        <a, b> = sum(a_v b_v) + sum(a_s : b_s) (full tensor contraction).
        Returns face data (6, E, 9, n, n).
        """
        ops = self.mortars
        cm = ops.conn_mortar
        sign = ops.conn_sign[:, None, None, None]
        shape = (ops.num_mortars, 3, self.n, self.n)
        _, trace = self.traces(np.zeros_like(p))
        if self.scheme == "sfim":
            y = ops.gather(restrict_faces(p))
            tr = _traction_cf(y[:, 3:], self.conn_normal)
            a_c = self.conn_weight * sign * tr
            sv = (self.conn_weight * sign * y[:, :3]).reshape(ops.num_connections, -1)
            b_t = np.moveaxis((ops.sum_minus @ sv).reshape(shape)
                              + (ops.sum_plus @ sv).reshape(shape), 1, 0)
            ac = a_c.reshape(ops.num_connections, -1)
            a_minus = np.moveaxis((ops.sum_minus @ ac).reshape(shape), 1, 0)
            a_plus = np.moveaxis((ops.sum_plus @ ac).reshape(shape), 1, 0)
            vm, vp, tm, tp = self._flux_transpose(trace, a_minus + a_plus, b_t)
            return self._traces_transpose(vm - a_minus, vp - a_plus, tm, tp)
        y = restrict_faces(p)
        a_f = self.face_weight * _traction_cf(
            y[:, :, 3:].reshape((-1, 6) + y.shape[-2:]),
            self.face_normal.reshape((-1, 3) + y.shape[-2:])).reshape(y.shape[:2] + (3,) + y.shape[-2:])
        b_f = self.face_weight * y[:, :, :3]
        conn = ops.apply_back_transpose(np.concatenate([b_f, a_f], axis=2))
        sb = (sign * conn[:, :3]).reshape(ops.num_connections, -1)
        sa = conn[:, 3:].reshape(ops.num_connections, -1)
        b_t = np.moveaxis((ops.sum_minus @ sb + ops.sum_plus @ sb).reshape(shape), 1, 0)
        a_v = np.moveaxis((ops.sum_minus @ sa + ops.sum_plus @ sa).reshape(shape), 1, 0)
        vm, vp, tm, tp = self._flux_transpose(trace, a_v, b_t)
        out = self._traces_transpose(vm, vp, tm, tp)
        out[:, :, :3] -= a_f
        return out

    def symmetric_surface_dual(self, q):
        """Energy-symmetrized surface operator 1/2 (B + B^T) applied to ``q``."""
        if isinstance(q, State):
            q = q.q
        faces = 0.5 * (self.surface_dual(q) + self.surface_dual_transpose(q))
        out = np.zeros_like(q)
        lift_faces(out, faces)
        return out

    def dual(self, q):
        """Velocity and stress duals (9, E, n, n, n) of the right-hand side."""
        gv, ge = self.volume_dual(q)
        out = np.concatenate([gv, ge])
        lift_faces(out, self.surface_dual(q))
        return out

    def apply_mass(self, q):
        """Energy mass: velocity times M_rho and stress times M S (compliance)."""
        out = np.empty_like(q)
        out[:3] = q[:3] * self.mass_rho
        out[3:] = self.mass * compliance_apply(self.material, q[3:])
        return out

    def apply_inverse_mass(self, dual):
        out = np.empty_like(dual)
        out[:3] = dual[:3] * self.inv_mass_rho
        ge = dual[3:]
        trace = self.lam_over_mass * (ge[0] + ge[1] + ge[2])
        out[3:] = self.two_mu_over_mass * ge
        out[3:6] += trace
        return out

    def dual_compiled(self, q):
        """Same as :meth:`dual` through the compiled kernels where available."""
        if self._wjr_flat is None:
            return self.dual(q)
        from .kernels import sfim_surface_kernel, volume_dual_kernel
        shape = q.shape
        flat = np.ascontiguousarray(q).reshape(9, self.num_elements, -1)
        out = np.empty_like(flat)
        volume_dual_kernel(flat, self._wjr_flat, self.deriv, out)
        if self._kernel is not None:
            sfim_surface_kernel(flat, out, *self._kernel.args)
            return out.reshape(shape)
        out = out.reshape(shape)
        lift_faces(out, self.surface_dual(q))
        return out

    def rhs(self, q, t=None):
        if isinstance(q, State):
            q = q.q
        dual = self.dual_compiled(q)
        if self._wjr_flat is None:
            return self.apply_inverse_mass(dual)
        from .kernels import inverse_mass_kernel
        flat = dual.reshape(9, self.num_elements, -1)
        out = np.empty_like(flat)
        inverse_mass_kernel(flat, *self._flat_mass, out)
        return out.reshape(dual.shape)

    __call__ = rhs

    def energy(self, q):
        if isinstance(q, State):
            q = q.q
        kinetic = np.sum(self.mass_rho * np.sum(q[:3] ** 2, axis=0))
        strain = np.sum(self.mass * voigt_contract(q[3:], compliance_apply(self.material, q[3:])))
        return 0.5 * float(kinetic + strain)

    def energy_rate(self, q, dq=None):
        if isinstance(q, State):
            q = q.q
        if dq is None:
            dq = self.rhs(q)
        return energy_rate(q, dq, self.material, self.mass)


def energy_rate(q, dq, material, mass):
    """v^T M_rho dv + sigma^T M_S dsigma summed over all nodes.

    ``mass`` is the nodal product of quadrature weights and Jacobian.
    """
    if isinstance(q, State):
        q = q.q
    if isinstance(dq, State):
        dq = dq.q
    kinetic = np.sum(mass * material.rho * np.sum(q[:3] * dq[:3], axis=0))
    strain = np.sum(mass * voigt_contract(q[3:], compliance_apply(material, dq[3:])))
    return float(kinetic + strain)
