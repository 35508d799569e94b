"""Exception types shared across the simulator."""


class TwinslitError(Exception):
    """Base class for all simulator errors."""


class ValidationError(TwinslitError):
    """A configuration invariant was violated; message names the field."""


class ParseError(TwinslitError):
    """Config document is malformed or contains unknown keys."""


class NodeError(TwinslitError):
    """Wavefunction node: the log-gradient quotient is undefined here."""

    def __init__(self, y1, y2, t):
        super().__init__(f"wavefunction node at (y1={y1}, y2={y2}, t={t})")
        self.y1, self.y2, self.t = y1, y2, t


class IncompleteTrajectory(TwinslitError):
    """Arrival positions requested from a trajectory that did not complete."""


class StepLimitExceeded(TwinslitError):
    """ODE integration exceeded the configured step budget."""


class QuadratureFailure(TwinslitError):
    """Adaptive quadrature did not meet its tolerance within budget."""


class EnvelopeTooTight(TwinslitError):
    """Rejection-sampling acceptance rate collapsed; envelope mis-sized."""


class IoError(TwinslitError):
    """Output files could not be written."""
