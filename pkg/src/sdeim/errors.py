"""Exception types shared across the package.

The CLI maps these onto exit codes: configuration/usage problems,
numerical failures, and rank-assumption violations are kept distinct so
scripts can react to them.
"""


class SdeimError(Exception):
    """Base class for every error raised by this package."""


class InvalidInputError(SdeimError, ValueError):
    """An argument violates a documented precondition."""


class ConfigError(SdeimError, ValueError):
    """An experiment configuration is inconsistent or incomplete."""


class SnapshotFormatError(SdeimError, ValueError):
    """A snapshot file failed to parse.

    ``offset`` is the byte offset (binary files) or line number (CSV
    files) where parsing stopped, when known.
    """

    def __init__(self, message, offset=None):
        if offset is not None:
            message = f"{message} (at offset {offset})"
        super().__init__(message)
        self.offset = offset


class DivergenceError(SdeimError, ArithmeticError):
    """Time integration produced non-finite values.

    ``time_reached`` is the last time at which the state was finite.
    """

    def __init__(self, message, time_reached=None):
        super().__init__(message)
        self.time_reached = time_reached


class NumericalConsistencyError(SdeimError, ArithmeticError):
    """A numerical self-check failed (e.g. spectral symmetry residue)."""


class RankDeficiencyError(SdeimError, ValueError):
    """More modes were requested than the data supports."""

    def __init__(self, message, usable_rank=None):
        super().__init__(message)
        self.usable_rank = usable_rank


class AssumptionViolationError(SdeimError, ValueError):
    """The sensor/mode combination lost full row rank."""


class RegimeError(SdeimError, ValueError):
    """Operation requested outside the underdetermined regime r < m."""


class DegenerateInputError(SdeimError, ValueError):
    """Inputs make the requested quantity ill-defined (zero denominator)."""


class UntrainedNetworkError(SdeimError, RuntimeError):
    """Prediction was requested from a reservoir without a trained readout."""


class ReservoirInitError(SdeimError, ValueError):
    """Reservoir construction failed (undersized or degenerate sparsity)."""


class StaleArtifactError(SdeimError, RuntimeError):
    """Artifacts on disk were built from a different configuration."""
