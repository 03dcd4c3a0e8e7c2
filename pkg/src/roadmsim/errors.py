"""Exception types shared across the simulator.

All inherit from ValueError so callers that only care about "bad input"
can catch one base class.
"""


class SimulationError(ValueError):
    """Base class for simulator-specific errors."""


class ConfigError(SimulationError):
    """Run configuration is missing or malformed; message carries the key path."""


class GridMismatchError(SimulationError):
    """Two fields or waveforms do not share sample rate, length, or center frequency."""


class AliasingError(SimulationError):
    """Requested shift or band would fall outside the Nyquist range."""


class InsufficientRecordError(SimulationError):
    """Record too short (or resolution too coarse) for the requested analysis."""


class ExcessiveDelayError(SimulationError):
    """Delay exceeds the allowed fraction of the record duration."""


class IncoherentDrivesError(SimulationError):
    """Comb generator drives do not share a single frequency."""


class CombLineAbsentError(SimulationError):
    """No comb line found at a required frequency offset."""


class RateMismatchError(SimulationError):
    """Bit rate and sampling grid are incompatible."""


class AlignmentError(SimulationError):
    """Alignment failed: no credible bit alignment, or interferometer feedback
    could not reach a useful cancellation residual."""


class DegenerateClassesError(SimulationError):
    """Decision samples contain only one bit class."""


class GuardBandError(SimulationError):
    """No signal-free guard band available for noise estimation."""


class SignalPowerError(SimulationError):
    """Signal power in the measurement band is not positive."""
