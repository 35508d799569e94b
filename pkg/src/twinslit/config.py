"""Run configuration: physical parameters, numerics, and JSON (de)serialization.

Default parameter values are engineering choices for a convenient desk-scale
scenario (natural units hbar = m = 1); they are not measured physical inputs.
"""

import json
from dataclasses import dataclass, field, asdict

from .errors import ParseError, ValidationError

EXCHANGE_SIGNS = ("boson", "fermion")
SOURCE_MODES = ("constrained_com", "unconstrained_qeh")
THEORIES = ("bqm", "sqm")
INTEGRATOR_METHODS = ("rk45_adaptive", "rk4_fixed")


@dataclass(frozen=True)
class PhysicalConfig:
    """Geometry and physical constants of the two-double-slit setup.

    Slits sit at (+-d, +-Y) with half-width sigma0; detection screens sit at
    x = +-(D + d).  Longitudinal motion is ballistic at speed hbar*kx/m, so
    the detection time is t0 = m*D/(hbar*kx).
    """

    hbar: float = 1.0
    mass: float = 1.0
    sigma0: float = 1.0
    Y: float = 5.0
    d: float = 10.0
    D: float = 50.0
    kx: float = 5.0
    ky: float = 0.0
    deltaQ: float = 0.5
    exchange_sign: str = "boson"
    seed: int = 20240915

    def validate(self):
        for name in ("hbar", "mass", "sigma0", "D", "kx", "deltaQ"):
            if getattr(self, name) <= 0:
                raise ValidationError(f"{name} must be > 0, got {getattr(self, name)}")
        if self.Y < 0:
            raise ValidationError(f"Y must be >= 0, got {self.Y}")
        if self.d <= 0:
            raise ValidationError(f"d must be > 0, got {self.d}")
        if self.exchange_sign not in EXCHANGE_SIGNS:
            raise ValidationError(
                f"exchange_sign must be one of {EXCHANGE_SIGNS}, got {self.exchange_sign!r}"
            )
        if not isinstance(self.seed, int):
            raise ValidationError(f"seed must be an integer, got {self.seed!r}")
        return self

    @property
    def detection_time(self):
        """t0 = m*D/(hbar*kx): flight time from slit plane to screen."""
        return self.mass * self.D / (self.hbar * self.kx)


@dataclass(frozen=True)
class IntegratorSettings:
    """Trajectory integrator controls.

    rk45_adaptive uses per-trajectory Dormand-Prince 5(4) stepping; rk4_fixed
    is retained for convergence studies.  node_epsilon is relative to the
    local magnitude scale of the wavefunction (sum of term moduli).
    """

    method: str = "rk45_adaptive"
    dt: float = 1e-3
    rel_tol: float = 1e-9
    abs_tol_factor: float = 1e-12  # absolute tolerance = abs_tol_factor * sigma0
    node_epsilon: float = 1e-12
    max_steps: int = 1_000_000
    n_samples: int = 200

    def validate(self):
        if self.method not in INTEGRATOR_METHODS:
            raise ValidationError(
                f"method must be one of {INTEGRATOR_METHODS}, got {self.method!r}"
            )
        for name in ("dt", "rel_tol", "abs_tol_factor", "node_epsilon"):
            if getattr(self, name) <= 0:
                raise ValidationError(f"{name} must be > 0, got {getattr(self, name)}")
        if self.max_steps <= 0:
            raise ValidationError(f"max_steps must be > 0, got {self.max_steps}")
        if self.n_samples < 2:
            raise ValidationError(f"n_samples must be >= 2, got {self.n_samples}")
        return self


@dataclass(frozen=True)
class GridSpec:
    """Evaluation grid for quadrature cross-checks and envelope calibration.

    The working domain auto-extends to cover at least `coverage` * |sigma_t|
    beyond each packet center, whichever is wider.
    """

    y_min: float = -20.0
    y_max: float = 20.0
    n_points: int = 256
    coverage: float = 6.0

    def validate(self):
        if self.y_max <= self.y_min:
            raise ValidationError(f"y_max must exceed y_min, got [{self.y_min}, {self.y_max}]")
        if self.n_points < 16:
            raise ValidationError(f"n_points must be >= 16, got {self.n_points}")
        if self.coverage <= 0:
            raise ValidationError(f"coverage must be > 0, got {self.coverage}")
        return self


@dataclass(frozen=True)
class EnsembleSettings:
    """Ensemble size, source mode, theory tag, and RNG seed."""

    n: int = 100_000
    mode: str = "constrained_com"
    theory: str = "bqm"
    seed: int | None = None  # falls back to PhysicalConfig.seed

    def validate(self):
        if self.n < 1:
            raise ValidationError(f"n must be >= 1, got {self.n}")
        if self.mode not in SOURCE_MODES:
            raise ValidationError(f"mode must be one of {SOURCE_MODES}, got {self.mode!r}")
        if self.theory not in THEORIES:
            raise ValidationError(f"theory must be one of {THEORIES}, got {self.theory!r}")
        if self.seed is not None and not isinstance(self.seed, int):
            raise ValidationError(f"seed must be an integer, got {self.seed!r}")
        return self


@dataclass(frozen=True)
class RunConfig:
    physical: PhysicalConfig = field(default_factory=PhysicalConfig)
    integrator: IntegratorSettings = field(default_factory=IntegratorSettings)
    ensemble: EnsembleSettings = field(default_factory=EnsembleSettings)
    grid: GridSpec = field(default_factory=GridSpec)
    output_dir: str = "out"

    def validate(self):
        self.physical.validate()
        self.integrator.validate()
        self.ensemble.validate()
        self.grid.validate()
        if not self.output_dir:
            raise ValidationError("output_dir must be a non-empty path")
        return self

    @property
    def ensemble_seed(self):
        return self.physical.seed if self.ensemble.seed is None else self.ensemble.seed


_SECTIONS = {
    "physical": PhysicalConfig,
    "integrator": IntegratorSettings,
    "ensemble": EnsembleSettings,
    "grid": GridSpec,
}


def _build_section(cls, data, section):
    if not isinstance(data, dict):
        raise ParseError(f"section {section!r} must be an object")
    known = {f for f in cls.__dataclass_fields__}
    unknown = set(data) - known
    if unknown:
        raise ParseError(f"unknown keys in {section!r}: {sorted(unknown)}")
    return cls(**data)


def config_from_dict(doc: dict) -> RunConfig:
    """Build a validated RunConfig from a plain dict; unknown keys are errors."""
    if not isinstance(doc, dict):
        raise ParseError("config document must be a JSON object")
    unknown = set(doc) - set(_SECTIONS) - {"output_dir"}
    if unknown:
        raise ParseError(f"unknown top-level keys: {sorted(unknown)}")
    kwargs = {}
    for name, cls in _SECTIONS.items():
        if name in doc:
            kwargs[name] = _build_section(cls, doc[name], name)
    if "output_dir" in doc:
        kwargs["output_dir"] = doc["output_dir"]
    return RunConfig(**kwargs).validate()


def parse_config(text: str) -> RunConfig:
    """Parse a JSON config document into a validated RunConfig."""
    try:
        doc = json.loads(text) if text.strip() else {}
    except json.JSONDecodeError as e:
        raise ParseError(f"malformed JSON config: {e}") from e
    return config_from_dict(doc)


def serialize_config(cfg: RunConfig) -> str:
    """Serialize a RunConfig to round-trippable JSON."""
    return json.dumps(asdict(cfg), indent=2, sort_keys=True)
