"""Experiment configuration: validated dataclasses with JSON round-trip.

A configuration file is a JSON object, for example::

    {
      "experiment": "convergence",
      "mesh": {"base": [2, 2, 2], "refine": "checkerboard",
               "periodic": [true, true, true],
               "box": [[0, 0, 0], [1, 1, 1]], "levels": [0, 1]},
      "transform": {"kind": "affine-box"},
      "geometry": "continuous-metric",
      "scheme": "sfim", "mortar": "full", "alpha": 1.0, "order": 3,
      "material": {"kind": "uniform", "rho": 2.0, "lam": 4.0, "mu": 3.0},
      "cfl": 0.2, "final_time": null, "steps": null, "seed": 0
    }

Unknown keys are rejected.  Omitted keys take the defaults below.
"""

from dataclasses import asdict, dataclass, field, fields
import json
import math

__all__ = [
    "EXPERIMENTS",
    "SCHEMES",
    "MORTAR_KINDS",
    "TREATMENTS",
    "TRANSFORM_KINDS",
    "ConfigError",
    "MeshConfig",
    "TransformConfig",
    "MaterialConfig",
    "ExperimentConfig",
    "load_config",
]

EXPERIMENTS = ("convergence", "stability", "longtime", "conserve", "constant", "divcheck")
SCHEMES = ("sfim", "afim")
MORTAR_KINDS = ("full", "split")
TREATMENTS = ("interpolated", "watertight", "continuous-metric")
TRANSFORM_KINDS = ("affine-box", "skew-rotation")
MATERIAL_KINDS = ("uniform", "random")


class ConfigError(ValueError):
    """Raised for malformed or inconsistent configuration values."""


def _choice(name, value, allowed):
    if value not in allowed:
        raise ConfigError(f"{name} must be one of {list(allowed)}, got {value!r}")


def _from_mapping(cls, data, where):
    if not isinstance(data, dict):
        raise ConfigError(f"{where} must be an object")
    known = {f.name for f in fields(cls)}
    unknown = sorted(set(data) - known)
    if unknown:
        raise ConfigError(f"unknown keys in {where}: {unknown}")
    return cls(**data)


@dataclass
class MeshConfig:
    """Adapted box mesh.

    ``refine`` is ``"checkerboard"``, ``"none"`` or a list of base cell
    indices to split once.  ``levels`` lists how many uniform bisections to
    apply; convergence runs loop over it and other experiments use the first
    entry.
    """

    base: list = field(default_factory=lambda: [2, 2, 2])
    refine: object = "checkerboard"
    periodic: list = field(default_factory=lambda: [True, True, True])
    box: list = field(default_factory=lambda: [[0.0, 0.0, 0.0], [1.0, 1.0, 1.0]])
    levels: list = field(default_factory=lambda: [0])

    def __post_init__(self):
        if len(self.base) != 3 or any(int(b) < 1 for b in self.base):
            raise ConfigError("mesh.base must hold three positive integers")
        self.base = [int(b) for b in self.base]
        if isinstance(self.refine, str):
            _choice("mesh.refine", self.refine, ("checkerboard", "none"))
        else:
            cells = [list(map(int, c)) for c in self.refine]
            for c in cells:
                if len(c) != 3 or any(not 0 <= c[a] < self.base[a] for a in range(3)):
                    raise ConfigError(f"refined cell {c} outside the base grid")
            self.refine = cells
        if len(self.periodic) != 3:
            raise ConfigError("mesh.periodic needs three booleans")
        self.periodic = [bool(p) for p in self.periodic]
        if len(self.box) != 2 or any(len(c) != 3 for c in self.box):
            raise ConfigError("mesh.box must be [[x0, y0, z0], [x1, y1, z1]]")
        self.box = [[float(v) for v in c] for c in self.box]
        if any(hi <= lo for lo, hi in zip(*self.box)):
            raise ConfigError("mesh.box upper corner must exceed the lower corner")
        if not self.levels or any(int(v) < 0 for v in self.levels):
            raise ConfigError("mesh.levels must be a non-empty list of integers >= 0")
        self.levels = [int(v) for v in self.levels]


@dataclass
class TransformConfig:
    """Global coordinate map applied to the box."""

    kind: str = "affine-box"
    amplitude: float = math.pi / 4.0

    def __post_init__(self):
        _choice("transform.kind", self.kind, TRANSFORM_KINDS)
        self.amplitude = float(self.amplitude)


@dataclass
class MaterialConfig:
    """Uniform (rho, lam, mu) or seeded random nodal material."""

    kind: str = "uniform"
    rho: float = 2.0
    lam: float = 4.0
    mu: float = 3.0
    seed: int = 0
    rho_range: list = field(default_factory=lambda: [1.0, 3.0])
    cs_range: list = field(default_factory=lambda: [math.sqrt(20.0), 6.5])
    cp_range: list = field(default_factory=lambda: [7.2, 10.7])

    def __post_init__(self):
        _choice("material.kind", self.kind, MATERIAL_KINDS)
        self.rho, self.lam, self.mu = float(self.rho), float(self.lam), float(self.mu)
        self.seed = int(self.seed)
        if self.kind == "uniform":
            if self.rho <= 0 or self.mu <= 0 or self.lam + 2.0 * self.mu / 3.0 <= 0:
                raise ConfigError("uniform material needs rho > 0, mu > 0 and positive bulk modulus")
        for name in ("rho_range", "cs_range", "cp_range"):
            lo, hi = (float(v) for v in getattr(self, name))
            if not 0 < lo <= hi:
                raise ConfigError(f"material.{name} must satisfy 0 < lo <= hi")
            setattr(self, name, [lo, hi])


@dataclass
class ExperimentConfig:
    """Complete description of one experiment run."""

    experiment: str = "convergence"
    mesh: MeshConfig = field(default_factory=MeshConfig)
    transform: TransformConfig = field(default_factory=TransformConfig)
    material: MaterialConfig = field(default_factory=MaterialConfig)
    geometry: str = "continuous-metric"
    scheme: str = "sfim"
    mortar: str = "full"
    alpha: float = 1.0
    order: int = 4
    cfl: float = 0.2
    final_time: object = None
    steps: object = None
    seed: int = 0
    num_states: int = 100
    snapshot_every: int = 10
    output: str = "out"

    def __post_init__(self):
        if isinstance(self.mesh, dict):
            self.mesh = _from_mapping(MeshConfig, self.mesh, "mesh")
        if isinstance(self.transform, dict):
            self.transform = _from_mapping(TransformConfig, self.transform, "transform")
        if isinstance(self.material, dict):
            self.material = _from_mapping(MaterialConfig, self.material, "material")
        _choice("experiment", self.experiment, EXPERIMENTS)
        _choice("geometry", self.geometry, TREATMENTS)
        _choice("scheme", self.scheme, SCHEMES)
        _choice("mortar", self.mortar, MORTAR_KINDS)
        self.alpha = float(self.alpha)
        if not 0.0 <= self.alpha <= 1.0:
            raise ConfigError("alpha must lie in [0, 1]")
        self.order = int(self.order)
        if self.order < 1:
            raise ConfigError("order must be >= 1")
        self.cfl = float(self.cfl)
        if not self.cfl > 0:
            raise ConfigError("cfl must be positive")
        if self.final_time is not None:
            self.final_time = float(self.final_time)
            if self.final_time < 0:
                raise ConfigError("final_time must be >= 0")
        if self.steps is not None:
            self.steps = int(self.steps)
            if self.steps < 0:
                raise ConfigError("steps must be >= 0")
        self.seed = int(self.seed)
        self.num_states = int(self.num_states)
        self.snapshot_every = max(1, int(self.snapshot_every))
        if self.experiment == "convergence" and self.material.kind != "uniform":
            raise ConfigError("the planewave convergence study needs a uniform material")

    def to_dict(self):
        return asdict(self)

    def to_json(self):
        return json.dumps(self.to_dict(), indent=2, sort_keys=True)

    @classmethod
    def from_dict(cls, data):
        return _from_mapping(cls, dict(data), "config")

    @classmethod
    def from_json(cls, text):
        try:
            data = json.loads(text)
        except json.JSONDecodeError as exc:
            raise ConfigError(f"invalid JSON: {exc}") from exc
        return cls.from_dict(data)


def load_config(path, experiment=None):
    """Read a JSON config file; ``experiment`` overrides the file's kind."""
    with open(path, encoding="utf-8") as fh:
        data = json.load(fh)
    if experiment is not None:
        data["experiment"] = experiment
    return ExperimentConfig.from_dict(data)
