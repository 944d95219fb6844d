"""Exception hierarchy shared across the simulator.

Exit-code mapping used by the CLI lives with the exceptions so library
users and the command line agree on failure classes.
"""


class DickeSimError(Exception):
    """Base class for all simulator errors."""

    exit_code = 1


class ConfigError(DickeSimError):
    """Invalid or incomplete run configuration."""

    exit_code = 2


class ConvergenceError(DickeSimError):
    """An iterative solver failed to converge (eigensolver or stepper)."""

    exit_code = 3


class StiffnessError(ConvergenceError):
    """Adaptive step size underflowed; the problem is too stiff for the
    requested tolerance."""


class TruncationError(DickeSimError):
    """State population escaped past the retained Fock levels."""

    exit_code = 4


class SnapshotError(DickeSimError):
    """Corrupt, truncated, or incompatible snapshot file."""
