"""
Error handling for sparsemask.

This module provides the exception hierarchy shared by every codec,
format reader and mask generator, plus the handler the CLI uses to
turn an exception into a one-line diagnostic.
"""

import logging
import traceback
from typing import Any, Callable, Dict, Optional, Type


class SparseMaskError(Exception):
    """Base class for sparsemask errors."""

    def __init__(
        self,
        message: str,
        code: str = "unknown_error",
        details: Optional[Dict[str, Any]] = None,
    ):
        """
        Initialize a new sparsemask error.

        Args:
            message: Error message
            code: Stable error code
            details: Additional error details
        """
        super().__init__(message)
        self.message = message
        self.code = code
        self.details = details or {}

    def to_dict(self) -> Dict[str, Any]:
        """
        Convert the error to a dictionary.

        Returns:
            A dictionary representation of the error
        """
        return {
            "error": {
                "code": self.code,
                "message": self.message,
                "details": self.details,
            }
        }


class ConfigError(SparseMaskError):
    """Error raised when a configuration value is invalid."""

    def __init__(self, message: str, details: Optional[Dict[str, Any]] = None):
        """Initialize a new configuration error."""
        super().__init__(message, "config_error", details)


class MalformedHeaderError(SparseMaskError):
    """Error raised when a PGM/PBM header cannot be parsed."""

    def __init__(self, message: str, details: Optional[Dict[str, Any]] = None):
        super().__init__(message, "malformed_header", details)


class TruncatedDataError(SparseMaskError):
    """Error raised when raster data ends before width x height samples."""

    def __init__(self, message: str, details: Optional[Dict[str, Any]] = None):
        super().__init__(message, "truncated_data", details)


class UnsupportedMaxvalError(SparseMaskError):
    """Error raised for PGM files with maxval above 255."""

    def __init__(self, message: str, details: Optional[Dict[str, Any]] = None):
        super().__init__(message, "unsupported_maxval", details)


class InvalidPixelError(SparseMaskError):
    """Error raised when a sample is outside the declared range."""

    def __init__(self, message: str, details: Optional[Dict[str, Any]] = None):
        super().__init__(message, "invalid_pixel", details)


class BadMagicError(SparseMaskError):
    """Error raised when a container does not start with the SBM1 magic."""

    def __init__(self, message: str = "bad magic", details: Optional[Dict[str, Any]] = None):
        super().__init__(message, "bad_magic", details)


class LengthMismatchError(SparseMaskError):
    """Error raised when a declared length disagrees with the data."""

    def __init__(self, message: str, details: Optional[Dict[str, Any]] = None):
        super().__init__(message, "length_mismatch", details)


class UnknownCodecError(SparseMaskError):
    """Error raised when a codec name or codec_id is not registered."""

    def __init__(self, message: str, details: Optional[Dict[str, Any]] = None):
        super().__init__(message, "unknown_codec", details)


class CorruptStreamError(SparseMaskError):
    """Error raised when a payload decodes to something inconsistent with its header."""

    def __init__(self, message: str, details: Optional[Dict[str, Any]] = None):
        super().__init__(message, "corrupt_stream", details)


class DecodePastEndError(CorruptStreamError):
    """Error raised when a decoder needs more bits than the payload holds."""

    def __init__(self, message: str = "decode past end of stream", details: Optional[Dict[str, Any]] = None):
        super().__init__(message, details)
        self.code = "decode_past_end"


class RepresentationError(SparseMaskError):
    """Error raised when a sparse representation cannot describe a valid mask."""

    def __init__(self, message: str, details: Optional[Dict[str, Any]] = None):
        super().__init__(message, "invalid_representation", details)


class EmptyMaskError(SparseMaskError):
    """Error raised when an operation needs at least one mask point."""

    def __init__(self, message: str = "mask has no set bits", details: Optional[Dict[str, Any]] = None):
        super().__init__(message, "empty_mask", details)


class DimensionMismatchError(SparseMaskError):
    """Error raised when two rasters that must agree in size do not."""

    def __init__(self, message: str, details: Optional[Dict[str, Any]] = None):
        super().__init__(message, "dimension_mismatch", details)


class SolverError(SparseMaskError):
    """Error raised when the diffusion solver does not reach its tolerance."""

    def __init__(self, message: str, residual: float, max_iterations: int):
        super().__init__(
            message,
            "solver_not_converged",
            {"residual": residual, "max_iterations": max_iterations},
        )
        self.residual = residual
        self.max_iterations = max_iterations


class EmptyHistogramError(SparseMaskError):
    """Error raised when entropy is requested for an empty histogram."""

    def __init__(self, message: str = "histogram is empty", details: Optional[Dict[str, Any]] = None):
        super().__init__(message, "empty_histogram", details)


class RoundTripError(SparseMaskError):
    """Error raised when a codec fails to reproduce its input mask."""

    def __init__(self, message: str, details: Optional[Dict[str, Any]] = None):
        super().__init__(message, "round_trip_failure", details)


class ErrorHandler:
    """
    Error handler for sparsemask.

    Maps exceptions to dictionaries so front-ends can report them uniformly.
    """

    def __init__(self, log_level: str = "INFO"):
        """
        Initialize a new error handler.

        Args:
            log_level: Logging level
        """
        self.logger = logging.getLogger("sparsemask.errors")
        self.logger.setLevel(getattr(logging, log_level))
        self.handlers: Dict[Type[Exception], Callable] = {}

        self.register(SparseMaskError, self._handle_sparsemask_error)
        self.register(OSError, self._handle_os_error)
        self.register(Exception, self._handle_generic_error)

    def register(self, exception_type: Type[Exception], handler: Callable) -> None:
        """
        Register an error handler.

        Args:
            exception_type: Type of exception to handle
            handler: Function to handle the exception
        """
        self.handlers[exception_type] = handler

    def handle(self, exception: Exception) -> Dict[str, Any]:
        """
        Handle an exception.

        Args:
            exception: The exception to handle

        Returns:
            A dictionary representation of the error
        """
        for exc_type, handler in self.handlers.items():
            if isinstance(exception, exc_type):
                return handler(exception)

        return self._handle_generic_error(exception)

    def _handle_sparsemask_error(self, error: SparseMaskError) -> Dict[str, Any]:
        self.logger.debug(f"sparsemask error: {error.code} - {error.message}")
        return error.to_dict()

    def _handle_os_error(self, error: OSError) -> Dict[str, Any]:
        self.logger.debug(f"I/O error: {error}")
        return {
            "error": {
                "code": "io_error",
                "message": f"{error.strerror or error}: {error.filename}" if error.filename else str(error),
                "details": {"errno": error.errno},
            }
        }

    def _handle_generic_error(self, error: Exception) -> Dict[str, Any]:
        """
        Handle a generic error.

        Args:
            error: The exception

        Returns:
            A dictionary representation of the error
        """
        self.logger.error(f"Unexpected error: {str(error)}")
        self.logger.debug(traceback.format_exc())

        return {
            "error": {
                "code": "internal_error",
                "message": f"{error.__class__.__name__}: {error}",
                "details": {
                    "error_type": error.__class__.__name__,
                    "error_message": str(error),
                },
            }
        }


def format_diagnostic(error_dict: Dict[str, Any]) -> str:
    """Render an error dictionary as a single line."""
    error = error_dict.get("error", {})
    message = " ".join(str(error.get("message", "")).split())
    return f"sparsemask: {error.get('code', 'unknown_error')}: {message}"
