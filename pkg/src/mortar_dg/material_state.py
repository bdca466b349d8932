"""Isotropic materials, stress/strain maps, state container and energy.

Stress and strain are stored as six Voigt components in the order
(11, 22, 33, 23, 13, 12) and hold tensor components (no factor 2 on the
shear strains).  Full tensor contractions therefore count the last three
components twice.
"""

from dataclasses import dataclass

import numpy as np

__all__ = [
    "VOIGT_PAIRS",
    "VOIGT_INDEX",
    "VOIGT_MULTIPLICITY",
    "MaterialField",
    "State",
    "uniform_material",
    "random_material",
    "compliance_apply",
    "stiffness_apply",
    "voigt_contract",
    "traction",
    "discrete_energy",
    "energy_density_integrals",
]

VOIGT_PAIRS = ((0, 0), (1, 1), (2, 2), (1, 2), (0, 2), (0, 1))
VOIGT_INDEX = np.array([[0, 5, 4], [5, 1, 3], [4, 3, 2]])
VOIGT_MULTIPLICITY = np.array([1.0, 1.0, 1.0, 2.0, 2.0, 2.0])


@dataclass(frozen=True)
class MaterialField:
    rho: np.ndarray
    lam: np.ndarray
    mu: np.ndarray

    def __post_init__(self):
        if np.any(self.rho <= 0) or np.any(self.mu <= 0):
            raise ValueError("density and shear modulus must be positive")
        if np.any(self.lam + 2.0 * self.mu / 3.0 <= 0):
            raise ValueError("bulk modulus must be positive")

    @property
    def cp(self):
        return np.sqrt((self.lam + 2.0 * self.mu) / self.rho)

    @property
    def cs(self):
        return np.sqrt(self.mu / self.rho)

    @property
    def zp(self):
        return np.sqrt(self.rho * (self.lam + 2.0 * self.mu))

    @property
    def zs(self):
        return np.sqrt(self.rho * self.mu)

    def voigt_stiffness(self):
        """Nodal 6x6 stiffness acting on (tensor) Voigt strain, shape (6, 6, ...).

        Shear rows map tensor strain to stress, so the shear diagonal is 2 mu.
        """
        c = np.zeros((6, 6) + self.rho.shape)
        for a in range(3):
            for b in range(3):
                c[a, b] = self.lam
            c[a, a] = self.lam + 2.0 * self.mu
            c[a + 3, a + 3] = 2.0 * self.mu
        return c


def uniform_material(shape, rho, lam, mu):
    ones = np.ones(shape)
    return MaterialField(rho * ones, lam * ones, mu * ones)


def random_material(shape, seed, rho=(1.0, 3.0), cs=(np.sqrt(20.0), 6.5), cp=(7.2, 10.7)):
    """Nodal material with density and wave speeds drawn uniformly (Philox).

    The P-wave speed is drawn from ``[max(cp[0], 1.2 cs), cp[1]]`` so the
    bulk modulus stays positive.
    """
    rng = np.random.Generator(np.random.Philox(seed))
    r = rng.uniform(rho[0], rho[1], shape)
    s = rng.uniform(cs[0], cs[1], shape)
    lo = np.maximum(cp[0], 1.2 * s)
    p = lo + rng.uniform(0.0, 1.0, shape) * np.maximum(cp[1] - lo, 0.0)
    mu = r * s ** 2
    return MaterialField(r, r * p ** 2 - 2.0 * mu, mu)


def compliance_apply(material, sigma):
    """Strain from stress: sigma/(2 mu) - lam tr(sigma) / (2 mu (2 mu + 3 lam)) I."""
    lam, mu = material.lam, material.mu
    trace = sigma[0] + sigma[1] + sigma[2]
    vol = lam / (2.0 * mu * (2.0 * mu + 3.0 * lam)) * trace
    eps = sigma / (2.0 * mu)
    eps[:3] -= vol
    return eps


def stiffness_apply(material, eps):
    lam, mu = material.lam, material.mu
    trace = eps[0] + eps[1] + eps[2]
    sigma = 2.0 * mu * eps
    sigma[:3] += lam * trace
    return sigma


def voigt_contract(a, b):
    """Nodal full tensor contraction a_ij b_ij of two Voigt-stored tensors."""
    return np.einsum("i,i...->...", VOIGT_MULTIPLICITY, a * b)


def traction(sigma, normal):
    """t_i = sigma_ij n_j with ``normal`` of shape (3, ...)."""
    return np.stack([sum(sigma[VOIGT_INDEX[i, j]] * normal[j] for j in range(3))
                     for i in range(3)])


@dataclass
class State:
    """Nine nodal fields (v1, v2, v3, s11, s22, s33, s23, s13, s12) and time."""

    q: np.ndarray
    t: float = 0.0

    @property
    def velocity(self):
        return self.q[:3]

    @property
    def stress(self):
        return self.q[3:]

    @classmethod
    def zeros(cls, num_elements, n):
        return cls(np.zeros((9, num_elements, n, n, n)))

    @classmethod
    def constant(cls, num_elements, n, velocity, stress):
        q = np.empty((9, num_elements, n, n, n))
        q[:3] = np.reshape(velocity, (3, 1, 1, 1, 1))
        q[3:] = np.reshape(stress, (6, 1, 1, 1, 1))
        return cls(q)

    def copy(self):
        return State(self.q.copy(), self.t)

    def is_finite(self):
        return bool(np.all(np.isfinite(self.q)))


def _weighted_jacobian(geometry, weights):
    w = weights
    w3 = w[:, None, None] * w[None, :, None] * w[None, None, :]
    return w3 * geometry.jac


def discrete_energy(state, material, geometry, weights):
    """Quadrature energy sum of 1/2 rho v.v + 1/2 sigma:S:sigma."""
    wj = _weighted_jacobian(geometry, weights)
    q = state.q if isinstance(state, State) else state
    kinetic = material.rho * np.sum(q[:3] ** 2, axis=0)
    strain = voigt_contract(q[3:], compliance_apply(material, q[3:]))
    return 0.5 * float(np.sum(wj * (kinetic + strain)))


def energy_density_integrals(state, material, geometry, weights):
    """Integrals of rho v_i (3) and of S:sigma per Voigt component (6)."""
    wj = _weighted_jacobian(geometry, weights)
    q = state.q if isinstance(state, State) else state
    mom = np.array([np.sum(wj * material.rho * q[i]) for i in range(3)])
    eps = compliance_apply(material, q[3:])
    strain = np.array([np.sum(wj * eps[a]) for a in range(6)])
    return mom, strain
