"""Energy-stability analysis of the semi-discrete operator.

The semi-discrete system reads ``H dq/dt = B q`` where ``H`` is the
block-diagonal energy mass (density-weighted for velocity, compliance
weighted for stress) and ``B`` collects the volume and surface terms.  The
energy ``E = q^T H q / 2`` evolves as ``dE/dt = q^T K q`` with the
symmetrized operator ``K = (B + B^T) / 2``.  The volume part of ``B`` is
skew so ``K`` only involves surface terms.  The largest generalized
eigenvalue ``mu`` of ``K x = mu H x`` bounds the growth: ``dE/dt <= 2 mu E``.
"""

import logging

import numpy as np
from scipy.sparse.linalg import ArpackNoConvergence, LinearOperator, eigsh

from .material_state import VOIGT_MULTIPLICITY

__all__ = ["EnergyGrowth", "energy_operators", "max_energy_growth", "random_rate_survey"]

log = logging.getLogger(__name__)


class EnergyGrowth:
    """Result of a growth-direction search.

    Attributes
    ----------
    eigenvalue : float
        Largest generalized eigenvalue of ``(K, H)``.
    growth_rate : float
        ``2 * eigenvalue``, the bound on ``(dE/dt) / E``.
    witness : ndarray
        State (9, E, n, n, n) attaining the eigenvalue.
    witness_rate : float
        ``(dE/dt) / E`` of the witness recomputed through the full right-hand
        side, an independent check of ``growth_rate``.
    converged : bool
        Whether the Krylov iteration met its tolerance.
    shift : float
        Spectral shift used by the search (zero when not needed).
    """

    def __init__(self, eigenvalue, witness, witness_rate, converged, shift=0.0):
        self.shift = float(shift)
        self.eigenvalue = float(eigenvalue)
        self.growth_rate = 2.0 * float(eigenvalue)
        self.witness = witness
        self.witness_rate = float(witness_rate)
        self.converged = bool(converged)

    def as_dict(self):
        return {
            "eigenvalue": self.eigenvalue,
            "growth_rate": self.growth_rate,
            "witness_rate": self.witness_rate,
            "converged": self.converged,
            "shift": self.shift,
        }


def _component_weights(shape):
    weight = np.ones(shape)
    weight[3:] = VOIGT_MULTIPLICITY.reshape((6,) + (1,) * (len(shape) - 1))
    return weight


def energy_operators(op):
    """Euclidean-symmetric linear operators ``(K, H, H^{-1})`` for ``op``.

    Stress entries are weighted by their Voigt multiplicity so that the
    Euclidean product of flattened states equals the tensor contraction.
    """
    shape = (9, op.num_elements, op.n, op.n, op.n)
    size = int(np.prod(shape))
    weight = _component_weights(shape)
    inv_weight = 1.0 / weight

    def k_apply(x):
        q = np.asarray(x, dtype=float).reshape(shape)
        return (weight * op.symmetric_surface_dual(q)).ravel()

    def h_apply(x):
        q = np.asarray(x, dtype=float).reshape(shape)
        return (weight * op.apply_mass(q)).ravel()

    def h_solve(x):
        q = np.asarray(x, dtype=float).reshape(shape)
        return op.apply_inverse_mass(inv_weight * q).ravel()

    def wrap(fn):
        return LinearOperator((size, size), matvec=fn, dtype=float)

    return wrap(k_apply), wrap(h_apply), wrap(h_solve)


def max_energy_growth(op, seed=0, tol=1e-6, maxiter=3000):
    """Largest energy growth rate of ``op`` and a state attaining it.

    Uses implicitly restarted Lanczos on the shifted pencil
    ``(K + s H) x = (mu + s) H x``.  The shift ``s`` slightly exceeds the
    dominant magnitude of ``K``, which makes the sought eigenvalue the
    largest and positive so that a relative tolerance is meaningful even
    when the true maximum is zero.  The reported eigenvalue is the exact
    Rayleigh quotient of the best Ritz vector, a lower bound on the true
    maximum whose gap is controlled by ``tol`` times the shift.  The
    witness is checked against the ordinary right-hand side.
    """
    k_op, h_op, h_inv = energy_operators(op)
    size = k_op.shape[0]
    shape = (9, op.num_elements, op.n, op.n, op.n)
    rng = np.random.default_rng(seed)
    start = rng.standard_normal(size)
    probe = k_op.matvec(start)
    if np.linalg.norm(probe) <= 1e-14 * np.linalg.norm(h_op.matvec(start)):
        witness = start.reshape(shape)
        return EnergyGrowth(0.0, witness, _rate(op, witness), True)

    dominant = eigsh(k_op, k=1, M=h_op, Minv=h_inv, which="LM", v0=start,
                     tol=1e-3, return_eigenvectors=False)
    shift = 1.01 * float(np.max(np.abs(dominant)))
    shifted = LinearOperator((size, size), dtype=float,
                             matvec=lambda x: k_op.matvec(x) + shift * h_op.matvec(x))
    converged = True
    try:
        _, vecs = eigsh(shifted, k=1, M=h_op, Minv=h_inv, which="LA", v0=start,
                        tol=tol, maxiter=maxiter)
    except ArpackNoConvergence as exc:
        log.warning("Lanczos iteration did not converge; using best estimate")
        converged = False
        if len(exc.eigenvalues) == 0:
            raise
        vecs = exc.eigenvectors
    quotients = [float(v @ k_op.matvec(v)) / float(v @ h_op.matvec(v)) for v in vecs.T]
    best = int(np.argmax(quotients))
    witness = vecs[:, best].reshape(shape)
    return EnergyGrowth(quotients[best], witness, _rate(op, witness), converged, shift)


def _rate(op, q):
    energy = op.energy(q)
    return op.energy_rate(q) / energy if energy > 0 else 0.0


def random_rate_survey(op, num_states, seed=0):
    """Normalized energy rates ``(dE/dt) / E`` for random Gaussian states."""
    rng = np.random.default_rng(seed)
    shape = (9, op.num_elements, op.n, op.n, op.n)
    return np.array([_rate(op, rng.standard_normal(shape)) for _ in range(num_states)])
