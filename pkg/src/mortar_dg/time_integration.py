"""Five-stage, fourth-order low-storage Runge-Kutta and the time-step rule."""

from dataclasses import dataclass

import numpy as np

__all__ = ["LsrkScheme", "CARPENTER_KENNEDY_54", "lsrk54_step", "stable_dt",
           "integrate", "DivergenceError", "DEFAULT_CFL"]

# Chosen so that the planewave runs are stable with LSRK(5,4) and
# the planewave errors stay dominated by the spatial discretization.
DEFAULT_CFL = 0.2


class DivergenceError(RuntimeError):
    """Raised when the state stops being finite."""

    def __init__(self, time):
        super().__init__("non-finite state at t = %.6g" % time)
        self.time = time


@dataclass(frozen=True)
class LsrkScheme:
    a: tuple
    b: tuple
    c: tuple


# Carpenter & Kennedy (1994), (5,4) 2N-storage scheme, solution 3.
CARPENTER_KENNEDY_54 = LsrkScheme(
    a=(0.0,
       -567301805773.0 / 1357537059087.0,
       -2404267990393.0 / 2016746695238.0,
       -3550918686646.0 / 2091501179385.0,
       -1275806237668.0 / 842570457699.0),
    b=(1432997174477.0 / 9575080441755.0,
       5161836677717.0 / 13612068292357.0,
       1720146321549.0 / 2090206949498.0,
       3134564353537.0 / 4481467310338.0,
       2277821191437.0 / 14882151754819.0),
    c=(0.0,
       1432997174477.0 / 9575080441755.0,
       2526269341429.0 / 6820363962896.0,
       2006345519317.0 / 3224310063776.0,
       2802321613138.0 / 2924317926251.0),
)


def lsrk54_step(q, rhs, dt, t=0.0, scheme=CARPENTER_KENNEDY_54, work=None):
    """Advance ``q`` by one step, updating it in place and returning it.

    ``rhs(q, t)`` returns dq/dt.  ``work`` is an optional
    scratch array of the same shape (the second storage register).
    """
    if work is None:
        work = np.zeros_like(q)
    else:
        work[...] = 0.0
    scratch = np.empty_like(q)
    for a, b, c in zip(scheme.a, scheme.b, scheme.c):
        work *= a
        np.multiply(rhs(q, t + c * dt), dt, out=scratch)
        work += scratch
        np.multiply(work, b, out=scratch)
        q += scratch
    return q


def stable_dt(geometry, material, order, cfl=DEFAULT_CFL):
    """cfl times the smallest nodal beta_k = 1 / (N sqrt(c_p |grad r_k|^2))."""
    if cfl <= 0:
        raise ValueError("cfl must be positive")
    grad = geometry.jr / geometry.jac
    cp = material.cp
    beta = np.inf
    for k in range(3):
        g2 = np.sum(grad[k] ** 2, axis=0)
        beta = min(beta, float(np.min(1.0 / (order * np.sqrt(cp * g2)))))
    return cfl * beta


def integrate(q, rhs, dt, final_time, t0=0.0, callback=None, every=1, steps=None):
    """Step from ``t0`` to ``final_time`` with a uniform step <= ``dt``.

    The last step is not shortened: the step count is rounded up and dt
    reduced uniformly.  A given ``steps`` fixes the count instead.
    ``callback(step, t, q)`` runs every ``every`` steps and after the final
    step.  Raises :class:`DivergenceError` when the state becomes
    non-finite.
    """
    span = final_time - t0
    if steps is None:
        steps = max(1, int(np.ceil(span / dt - 1e-12)))
    if steps == 0:
        return q, t0, 0
    dt = span / steps
    work = np.zeros_like(q)
    t = t0
    for step in range(1, steps + 1):
        lsrk54_step(q, rhs, dt, t, work=work)
        t = t0 + step * dt
        if not np.isfinite(np.sum(q)):
            raise DivergenceError(t)
        if callback is not None and (step % every == 0 or step == steps):
            callback(step, t, q)
    return q, t, steps
