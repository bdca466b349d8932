"""Experiment drivers producing tables (CSV) and run metadata (JSON)."""

from dataclasses import asdict, dataclass, field
import csv
import json
import logging
import math
import os
import time

import numpy as np

from .config import ExperimentConfig
from .diagnostics import (CONSTANT_STRESS, CONSTANT_VELOCITY, conservation_components,
                          conservation_error, convergence_rates, energy_norm,
                          l2_energy_error, planewave_exact)
from .dg_operator import DGOperator
from .geometry_metrics import TransformSpec, build_geometry, check_discrete_divergence
from .material_state import State, random_material, uniform_material
from .mesh_topology import build_adapted_box, build_mortars, checkerboard, refine_uniform
from .stability import max_energy_growth, random_rate_survey
from .tensor_basis import diff_matrix, lgl_rule
from .time_integration import DivergenceError, integrate, stable_dt

__all__ = ["RunReport", "Setup", "build_setup", "default_final_time", "run_experiment",
           "random_state", "ENERGY_TOL", "CONSERVATION_TOL"]

log = logging.getLogger(__name__)

ENERGY_TOL = 1e-12
GROWTH_TOL = 1e-10
CONSERVATION_TOL = 1e-11
DIVERGENCE_TOL = 1e-12
LONGTIME_CENTRAL_TOL = 1e-5


@dataclass
class RunReport:
    """Outcome of one experiment.

    ``rows`` follow ``columns`` and form the CSV table.  ``violations``
    lists the invariants that failed; a non-empty list or a divergence makes
    the run unsuccessful.
    """

    experiment: str
    config: dict
    columns: list
    rows: list = field(default_factory=list)
    summary: dict = field(default_factory=dict)
    violations: list = field(default_factory=list)
    diverged_at: object = None
    seed: int = 0
    wall_time: float = 0.0

    @property
    def ok(self):
        return not self.violations and self.diverged_at is None

    def to_dict(self):
        out = asdict(self)
        out["ok"] = self.ok
        return out

    def write(self, out_dir):
        """Write ``<experiment>.csv`` and ``<experiment>.json`` into ``out_dir``."""
        os.makedirs(out_dir, exist_ok=True)
        csv_path = os.path.join(out_dir, self.experiment + ".csv")
        json_path = os.path.join(out_dir, self.experiment + ".json")
        with open(csv_path, "w", newline="", encoding="utf-8") as fh:
            writer = csv.writer(fh)
            writer.writerow(self.columns)
            writer.writerows(self.rows)
        with open(json_path, "w", encoding="utf-8") as fh:
            json.dump(self.to_dict(), fh, indent=2, sort_keys=True, default=_jsonable)
        return csv_path, json_path


def _jsonable(value):
    if isinstance(value, np.generic):
        return value.item()
    if isinstance(value, np.ndarray):
        return value.tolist()
    raise TypeError(f"cannot serialize {type(value).__name__}")


@dataclass
class Setup:
    """Mesh, geometry, material and operator for one refinement level."""

    mesh: object
    geometry: object
    material: object
    operator: object


def _refine_rule(mesh_cfg):
    if mesh_cfg.refine == "checkerboard":
        return checkerboard
    if mesh_cfg.refine == "none":
        return None
    return mesh_cfg.refine


def build_mesh(mesh_cfg, level=0):
    mesh = build_adapted_box(mesh_cfg.base, _refine_rule(mesh_cfg), mesh_cfg.periodic,
                             mesh_cfg.box)
    for _ in range(level):
        mesh = refine_uniform(mesh)
    return mesh


def build_transform(cfg):
    if cfg.transform.kind == "affine-box":
        return TransformSpec("affine-box")
    return TransformSpec("skew-rotation", amplitude=cfg.transform.amplitude)


def build_material(mat_cfg, shape):
    if mat_cfg.kind == "uniform":
        return uniform_material(shape, mat_cfg.rho, mat_cfg.lam, mat_cfg.mu)
    return random_material(shape, mat_cfg.seed, mat_cfg.rho_range, mat_cfg.cs_range,
                           mat_cfg.cp_range)


def build_setup(cfg, level=None):
    """Assemble everything needed to evaluate the right-hand side."""
    level = cfg.mesh.levels[0] if level is None else level
    mesh = build_mesh(cfg.mesh, level)
    geometry = build_geometry(mesh, cfg.order, build_transform(cfg), cfg.geometry)
    n = cfg.order + 1
    material = build_material(cfg.material, (mesh.num_elements, n, n, n))
    op = DGOperator(mesh, build_mortars(mesh, cfg.mortar), geometry, material,
                    cfg.scheme, cfg.alpha)
    return Setup(mesh, geometry, material, op)


def slowest_shear_speed(mat_cfg):
    if mat_cfg.kind == "uniform":
        return math.sqrt(mat_cfg.mu / mat_cfg.rho)
    return mat_cfg.cs_range[0]


def default_final_time(cfg):
    """Planewave: 20 shear transits of the unit period.  Others: 10 t0.

    ``t0`` is the longest box diagonal divided by the slowest shear speed.
    """
    if cfg.final_time is not None:
        return cfg.final_time
    cs = slowest_shear_speed(cfg.material)
    if cfg.experiment == "convergence":
        return 20.0 / cs
    lo, hi = np.array(cfg.mesh.box)
    return 10.0 * float(np.linalg.norm(hi - lo)) / cs


def random_state(num_elements, n, seed, distribution="normal"):
    """Random nodal state from a Philox stream.

    ``distribution`` is ``"normal"`` (standard normal, zero mean) or
    ``"uniform"`` (independent values in [0, 1), which carry a constant
    mean part alongside the fluctuations).
    """
    rng = np.random.Generator(np.random.Philox(seed))
    shape = (9, num_elements, n, n, n)
    if distribution == "normal":
        return rng.standard_normal(shape)
    if distribution == "uniform":
        return rng.random(shape)
    raise ValueError("distribution must be 'normal' or 'uniform'")


def _time_stepping(cfg, setup, final_time):
    dt = stable_dt(setup.geometry, setup.material, cfg.order, cfg.cfl)
    if cfg.steps is not None and cfg.final_time is None:
        return dt * cfg.steps, cfg.steps, dt
    return final_time, cfg.steps, dt


def _run_convergence(cfg, report):
    mat = cfg.material
    errors = []
    for level in cfg.mesh.levels:
        setup = build_setup(cfg, level)
        op = setup.operator
        final_time, steps, dt = _time_stepping(cfg, setup, default_final_time(cfg))
        q = planewave_exact(setup.geometry.coords, 0.0, mat.rho, mat.lam, mat.mu)
        start = time.perf_counter()
        q, t, taken = integrate(q, op.rhs, dt, final_time, steps=steps)
        exact = planewave_exact(setup.geometry.coords, t, mat.rho, mat.lam, mat.mu)
        err = l2_energy_error(q, exact, setup.material, op.mass)
        errors.append(err)
        rate = convergence_rates(errors)[-1] if len(errors) > 1 else float("nan")
        report.rows.append([level, setup.mesh.num_elements, cfg.order, final_time / taken,
                            taken, t, err, rate])
        log.info("level %d E=%d error %.3e (%.1fs)", level, setup.mesh.num_elements, err,
                 time.perf_counter() - start)
    report.summary["errors"] = errors
    report.summary["rates"] = list(convergence_rates(errors)) if len(errors) > 1 else []


def _run_stability(cfg, report):
    setup = build_setup(cfg)
    op = setup.operator
    rates = random_rate_survey(op, cfg.num_states, cfg.seed)
    for i, r in enumerate(rates):
        report.rows.append([i, r])
    growth = max_energy_growth(op, seed=cfg.seed)
    report.summary.update({
        "num_states": int(cfg.num_states),
        "rate_max": float(rates.max()) if rates.size else float("nan"),
        "rate_min": float(rates.min()) if rates.size else float("nan"),
        "rate_mean": float(rates.mean()) if rates.size else float("nan"),
        "growth": growth.as_dict(),
    })
    if cfg.scheme == "sfim":
        if cfg.alpha == 0.0 and rates.size and np.max(np.abs(rates)) > ENERGY_TOL:
            report.violations.append("central-flux energy rate is not zero")
        if rates.size and rates.max() > ENERGY_TOL:
            report.violations.append("positive energy rate for a random state")
        if growth.growth_rate > GROWTH_TOL:
            report.violations.append("energy growth direction found")


def _energy_trace_run(cfg, setup, q0, record, every=None):
    """Integrate from ``q0`` calling ``record(step, t, q)`` every few steps."""
    final_time, steps, dt = _time_stepping(cfg, setup, default_final_time(cfg))
    q = q0.copy()
    record(0, 0.0, q)
    return integrate(q, setup.operator.rhs, dt, final_time, callback=record,
                     every=every or cfg.snapshot_every, steps=steps)


def _run_longtime(cfg, report):
    setup = build_setup(cfg)
    op = setup.operator
    q0 = random_state(setup.mesh.num_elements, op.n, cfg.seed, "uniform")
    e0 = op.energy(q0)
    state = {"prev": e0, "monotone": True, "worst": 0.0}

    def every_step(step, t, q):
        e = op.energy(q)
        increase = e - state["prev"]
        state["worst"] = max(state["worst"], increase / e0)
        if increase > ENERGY_TOL * state["prev"]:
            state["monotone"] = False
        state["prev"] = e
        if step % cfg.snapshot_every == 0:
            report.rows.append([step, t, e, e / e0])

    _, t, taken = _energy_trace_run(cfg, setup, q0, every_step, every=1)
    if report.rows[-1][0] != taken:
        report.rows.append([taken, t, state["prev"], state["prev"] / e0])
    final = state["prev"] / e0
    report.summary.update({"initial_energy": e0, "final_relative_energy": final,
                           "dissipated_fraction": 1.0 - final,
                           "largest_step_increase": state["worst"],
                           "monotone": state["monotone"]})
    if cfg.scheme == "sfim" and cfg.alpha > 0 and not state["monotone"]:
        report.violations.append("upwind energy increased during a step")
    if cfg.scheme == "sfim" and cfg.alpha == 0.0 and abs(1.0 - final) > LONGTIME_CENTRAL_TOL:
        report.violations.append("central-flux energy drifted beyond tolerance")


def _run_conserve(cfg, report):
    setup = build_setup(cfg)
    op = setup.operator
    q0 = random_state(setup.mesh.num_elements, op.n, cfg.seed, "uniform")
    weights = lgl_rule(cfg.order).weights
    worst = {"total": 0.0, "momentum": 0.0, "strain": 0.0}

    def record(step, t, q):
        mom, strain, _ = conservation_components(q, q0, setup.material, setup.geometry, weights)
        total = conservation_error(q, q0, setup.material, setup.geometry, weights)
        worst["total"] = max(worst["total"], total)
        worst["momentum"] = max(worst["momentum"], float(mom.sum()))
        worst["strain"] = max(worst["strain"], float(strain.sum()))
        report.rows.append([step, t, total, float(mom.sum()), float(strain.sum())]
                           + list(mom) + list(strain))

    _energy_trace_run(cfg, setup, q0, record)
    report.summary.update({"max_conservation_error": worst["total"],
                           "max_momentum_error": worst["momentum"],
                           "max_strain_error": worst["strain"]})
    if cfg.scheme == "sfim" and worst["momentum"] > CONSERVATION_TOL:
        report.violations.append("momentum not conserved")
    if (cfg.scheme == "sfim" and cfg.geometry == "continuous-metric"
            and worst["total"] > CONSERVATION_TOL):
        report.violations.append("continuous-metric run not conservative")


def _run_constant(cfg, report):
    setup = build_setup(cfg)
    op = setup.operator
    q0 = State.constant(setup.mesh.num_elements, op.n, CONSTANT_VELOCITY, CONSTANT_STRESS).q
    norm0 = energy_norm(q0, setup.material, op.mass)
    worst = [0.0]

    def record(step, t, q):
        drift = energy_norm(q - q0, setup.material, op.mass) / norm0
        worst[0] = max(worst[0], drift)
        report.rows.append([step, t, drift])

    _energy_trace_run(cfg, setup, q0, record)
    report.summary["max_drift"] = worst[0]
    if (cfg.scheme == "sfim" and cfg.geometry == "continuous-metric"
            and worst[0] > CONSERVATION_TOL):
        report.violations.append("constant state not preserved")


def _run_divcheck(cfg, report):
    setup = build_setup(cfg)
    basis = diff_matrix(lgl_rule(cfg.order))
    res, scale = check_discrete_divergence(setup.geometry, setup.operator.mortars, basis)
    rel = res / scale[:, None]
    for e in range(res.shape[0]):
        report.rows.append([e] + list(res[e]) + [scale[e], float(rel[e].max())])
    report.summary.update({"max_residual": float(res.max()),
                           "max_relative_residual": float(rel.max())})
    if cfg.geometry == "continuous-metric" and rel.max() > DIVERGENCE_TOL:
        report.violations.append("discrete divergence theorem violated")


_COLUMNS = {
    "convergence": ["level", "elements", "order", "dt", "steps", "time", "error", "rate"],
    "stability": ["state", "rate_over_energy"],
    "longtime": ["step", "time", "energy", "relative_energy"],
    "conserve": ["step", "time", "conservation_error", "momentum_error", "strain_error",
                 "e_v1", "e_v2", "e_v3", "e_11", "e_22", "e_33", "e_23", "e_13", "e_12"],
    "constant": ["step", "time", "drift"],
    "divcheck": ["element", "residual_1", "residual_2", "residual_3", "scale",
                 "relative_residual"],
}

_RUNNERS = {
    "convergence": _run_convergence,
    "stability": _run_stability,
    "longtime": _run_longtime,
    "conserve": _run_conserve,
    "constant": _run_constant,
    "divcheck": _run_divcheck,
}


def run_experiment(cfg, out_dir=None):
    """Run the experiment described by ``cfg`` and optionally write outputs.

    Divergence is caught and recorded in the report; all other errors
    propagate.
    """
    if isinstance(cfg, dict):
        cfg = ExperimentConfig.from_dict(cfg)
    report = RunReport(cfg.experiment, cfg.to_dict(), list(_COLUMNS[cfg.experiment]),
                       seed=cfg.seed)
    start = time.perf_counter()
    try:
        _RUNNERS[cfg.experiment](cfg, report)
    except DivergenceError as exc:
        report.diverged_at = exc.time
        log.error("diverged at t = %g", exc.time)
    report.wall_time = time.perf_counter() - start
    if out_dir is not None:
        report.write(out_dir)
    return report
