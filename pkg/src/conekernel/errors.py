"""Exception hierarchy. Every numerical failure surfaces as one of these."""

from __future__ import annotations


class ConeKernelError(Exception):
    """Base class for all package errors."""


class NonConvergence(ConeKernelError):
    """A quadrature or iteration did not reach its tolerance.

    Attributes
    ----------
    error_estimate : float
        The best error estimate achieved before giving up.
    """

    def __init__(self, message: str, error_estimate: float = float("nan")):
        super().__init__(f"{message} (error estimate {error_estimate:.3e})")
        self.error_estimate = error_estimate


class BesselOverflow(ConeKernelError, OverflowError):
    """A value exceeds the floating-point range; callers should use the log form."""

    def __init__(self, message: str, log_value: float):
        super().__init__(message)
        self.log_value = log_value


class TruncationFailure(ConeKernelError):
    """The mode cap was reached before the tail certificate held."""

    def __init__(self, message: str, tail_bound: float, point=None):
        super().__init__(f"{message}; achieved tail bound {tail_bound:.3e} at {point}")
        self.tail_bound = tail_bound
        self.point = point


class IndexOutOfRange(ConeKernelError, IndexError):
    """Mode index beyond what the section can provide."""


class NotSymmetric(ConeKernelError, ValueError):
    """Matrix fails the symmetry check."""


class NonPositiveSpectrum(ConeKernelError, ValueError):
    """Lowest eigenvalue is not strictly positive."""


class BadWeights(ConeKernelError, ValueError):
    """Quadrature weights are non-positive, mis-sized, or degenerate."""


class InvalidPoint(ConeKernelError, ValueError):
    """A point is not valid for its section or lies at the cone tip."""


class SpectralFileError(ConeKernelError, ValueError):
    """Malformed spectral-data file."""

    def __init__(self, message: str, line: int | None = None):
        prefix = f"line {line}: " if line is not None else ""
        super().__init__(prefix + message)
        self.line = line


class TailTooLarge(ConeKernelError):
    """Integrand at the radial cut exceeds the tolerance."""


class GridTooCoarse(ConeKernelError):
    """FD grid cannot resolve the requested evolution."""
