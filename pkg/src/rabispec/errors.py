"""Exception types shared across the package.

Each class carries an ``exit_code`` used by the command line front end, so
scripted callers can distinguish failure modes without parsing messages.
"""


class RabispecError(Exception):
    """Base class for all package errors."""

    exit_code = 1


class UsageError(RabispecError):
    """Bad command line usage or malformed config file."""

    exit_code = 2


class DegenerateInput(RabispecError):
    """Input coincides with a zero set the algorithm must avoid."""

    exit_code = 3


class InsufficientNodes(RabispecError):
    """Quadrature rule too short for exact integration of the integrand."""

    exit_code = 4


class PrecisionError(RabispecError):
    """Requested combination exceeds the supported precision envelope."""

    exit_code = 5


class CoverageError(RabispecError):
    """Spectrum does not reliably cover the requested analysis window."""

    exit_code = 6


class ModelSpecError(RabispecError):
    """Model description is inconsistent or violates a family constraint."""

    exit_code = 7


class NumericError(RabispecError):
    """A numerical routine failed to meet its own accuracy contract."""

    exit_code = 8
