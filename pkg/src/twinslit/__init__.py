"""Two-double-slit EPR simulator.

Born-rule joint detection statistics and deterministic pilot-wave
trajectories for a pair of entangled particles emerging from two facing
double slits, under both a center-of-mass-constrained source and an
unconstrained quantum-equilibrium source.
"""

__version__ = "0.1.0"

from .config import (  # noqa: F401
    EnsembleSettings,
    GridSpec,
    IntegratorSettings,
    PhysicalConfig,
    RunConfig,
    config_from_dict,
    parse_config,
    serialize_config,
)
from .state import EffectiveState, commutator_residual  # noqa: F401
