"""Exception hierarchy shared by every app of the benchmark."""


class BenchError(Exception):
    """Root of all benchmark errors."""


class ConfigurationError(BenchError, ValueError):
    """Invalid argument, parameter file or campaign configuration."""


class PathConstructionError(ConfigurationError):
    """Segment chain cannot form a tangent-continuous path."""


class DegenerateSpeedError(BenchError, ValueError):
    """Speed too low for slip angles or the linearized model."""


class IntegrationError(BenchError, ArithmeticError):
    """The derivative evaluated to a non-finite value."""


class SimulationDivergedError(BenchError, RuntimeError):
    """The plant state became non-finite."""


class SolverError(BenchError, RuntimeError):
    """An iterative solver did not converge within its budget."""


class EndOfPathError(BenchError):
    """The vehicle projects beyond the end of the path."""


class EmptySpectrogramError(BenchError, ValueError):
    """Signal shorter than one STFT section."""


class SelectionError(BenchError, ValueError):
    """Not enough archive entries to select setups from."""


class EmptyPlotError(BenchError, ValueError):
    """Nothing to draw for the requested figure."""
