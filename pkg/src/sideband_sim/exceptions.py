"""Exception types shared across the package."""


class SimulationError(Exception):
    """Base class for runtime failures of the simulator."""


class StepSizeError(SimulationError):
    """Integrator step size violates the resolution rule."""


class NonFiniteStateError(SimulationError):
    """The integrator state became NaN or Inf; carries diagnostics."""


class TruncationError(SimulationError):
    """Fock-space truncation is too small for the requested state."""


class RestTimeError(SimulationError):
    """The emitter has not relaxed back to its pre-pulse state in time."""


class ConfigError(Exception):
    """Invalid run configuration (bad file, unknown key, bad value)."""
