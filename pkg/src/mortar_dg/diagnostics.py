"""Analytic solutions, error norms and conservation measures."""

import numpy as np

from .material_state import (VOIGT_MULTIPLICITY, State, compliance_apply,
                             energy_density_integrals, voigt_contract)

__all__ = [
    "planewave_exact",
    "l2_energy_error",
    "energy_norm",
    "conservation_error",
    "conservation_components",
    "convergence_rates",
    "CONSTANT_VELOCITY",
    "CONSTANT_STRESS",
]

# constant test state: v = (1, 2, 3); s11=4, s12=5, s13=6, s22=7, s23=8, s33=9
CONSTANT_VELOCITY = (1.0, 2.0, 3.0)
CONSTANT_STRESS = (4.0, 7.0, 9.0, 8.0, 6.0, 5.0)


def planewave_exact(x, t, rho, lam, mu):
    """Velocity and Voigt stress of the x1-directed P/S planewave.

    Displacements are u1 = cos(2 pi (c_p t + x1)) and
    u2 = u3 = cos(2 pi (c_s t + x1)).  Returns an array (9,) + x.shape[1:].
    """
    cp = np.sqrt((lam + 2.0 * mu) / rho)
    cs = np.sqrt(mu / rho)
    two_pi = 2.0 * np.pi
    sp = np.sin(two_pi * (cp * t + x[0]))
    ss = np.sin(two_pi * (cs * t + x[0]))
    du1 = -two_pi * sp
    du23 = -two_pi * ss
    q = np.zeros((9,) + x.shape[1:])
    q[0] = cp * du1
    q[1] = cs * du23
    q[2] = cs * du23
    q[3] = (lam + 2.0 * mu) * du1
    q[4] = lam * du1
    q[5] = lam * du1
    q[7] = mu * du23
    q[8] = mu * du23
    return q


def energy_norm(q, material, mass):
    """sqrt of the quadrature energy of ``q``; ``mass`` = weights * J."""
    kinetic = np.sum(mass * material.rho * np.sum(q[:3] ** 2, axis=0))
    strain = np.sum(mass * voigt_contract(q[3:], compliance_apply(material, q[3:])))
    return float(np.sqrt(0.5 * (kinetic + strain)))


def l2_energy_error(q, exact, material, mass):
    """Energy norm of the nodal difference ``q - exact``."""
    if isinstance(q, State):
        q = q.q
    return energy_norm(q - exact, material, mass)


def conservation_components(q, q0, material, geometry, weights):
    """Normalized changes of the momentum and strain integrals.

    Returns ``(momentum, strain, unnormalized)`` where the first two hold
    |int(now - initial)| / |int initial| per component (strain in Voigt
    order) and ``unnormalized`` flags components whose initial integral
    vanished, which are reported raw.
    """
    mom, strain = energy_density_integrals(q, material, geometry, weights)
    mom0, strain0 = energy_density_integrals(q0, material, geometry, weights)
    diff = np.abs(np.concatenate([mom - mom0, strain - strain0]))
    ref = np.abs(np.concatenate([mom0, strain0]))
    flags = ref == 0.0
    out = np.where(flags, diff, diff / np.where(flags, 1.0, ref))
    return out[:3], out[3:], flags


def conservation_error(q, q0, material, geometry, weights):
    """Sum of the normalized changes over all nine tensor components."""
    mom, strain, _ = conservation_components(q, q0, material, geometry, weights)
    # off-diagonal strain components appear twice in the tensor sum
    return float(mom.sum() + np.dot(VOIGT_MULTIPLICITY, strain))


def convergence_rates(errors):
    """log2 ratios of successive errors under bisection refinement."""
    errors = np.asarray(errors, dtype=float)
    return np.log2(errors[:-1] / errors[1:])
