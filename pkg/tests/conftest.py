"""Shared builders for small meshes and operators."""

import functools

import numpy as np
import pytest

from mortar_dg.config import ExperimentConfig
from mortar_dg.experiments import build_setup


def make_config(**overrides):
    """Experiment config with a small default mesh; nested dicts are merged."""
    data = {
        "experiment": "stability",
        "mesh": {"base": [2, 2, 2], "refine": "checkerboard",
                 "periodic": [True, True, True],
                 "box": [[0, 0, 0], [1, 1, 1]], "levels": [0]},
        "transform": {"kind": "affine-box"},
        "material": {"kind": "uniform", "rho": 2.0, "lam": 4.0, "mu": 3.0},
        "order": 3,
    }
    for key, value in overrides.items():
        if isinstance(value, dict) and isinstance(data.get(key), dict):
            data[key] = {**data[key], **value}
        else:
            data[key] = value
    return ExperimentConfig.from_dict(data)


SKEW = {
    "mesh": {"box": [[-1, -1, -1], [1, 1, 1]]},
    "transform": {"kind": "skew-rotation"},
    "material": {"kind": "random", "seed": 5},
}


@functools.lru_cache(maxsize=None)
def _cached_setup(key):
    return build_setup(make_config(**_thaw(key)))


def _freeze(value):
    if isinstance(value, dict):
        return tuple(sorted((k, _freeze(v)) for k, v in value.items()))
    if isinstance(value, list):
        return ("__list__",) + tuple(_freeze(v) for v in value)
    return value


def _thaw(value):
    if isinstance(value, tuple):
        if value and value[0] == "__list__":
            return [_thaw(v) for v in value[1:]]
        return {k: _thaw(v) for k, v in value}
    return value


def setup_for(**overrides):
    """Cached :class:`Setup` for the given config overrides."""
    return _cached_setup(_freeze(overrides))


def skew(**overrides):
    """Overrides for the 36-element skew random-material box."""
    merged = {k: dict(v) for k, v in SKEW.items()}
    for key, value in overrides.items():
        if isinstance(value, dict) and key in merged:
            merged[key].update(value)
        else:
            merged[key] = value
    return merged


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


ACCEPTANCE_LINES = []


def record_acceptance(number, passed, detail):
    """Store one criterion verdict and return it for the assertion."""
    ACCEPTANCE_LINES.append((number, "PASS" if passed else "FAIL", detail))
    return passed


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_LINES:
        return
    terminalreporter.section("acceptance criteria")
    for number, verdict, detail in sorted(ACCEPTANCE_LINES, key=lambda x: x[0]):
        terminalreporter.write_line(f"criterion {number}: {verdict}  {detail}")
