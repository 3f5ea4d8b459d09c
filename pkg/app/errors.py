"""
Error types shared across the toolkit.
The command line maps each family to an exit code (see app.config.EXIT_CODES).
"""


class PnPIError(Exception):
    """Base class for every error raised by the toolkit."""


class DimensionError(PnPIError, ValueError):
    """Shapes do not fit together (kernel larger than image, scale not dividing, ...)."""


class ConstructionError(PnPIError, ValueError):
    """A denoiser, kernel, fidelity term or schedule was built with invalid parameters."""


class DomainError(PnPIError, ValueError):
    """A function was evaluated outside its domain (e.g. log of a non-positive pixel)."""


class PoleError(PnPIError, ValueError):
    """The holomorphic map z/(z-2) was evaluated at its pole."""


class NotSymmetricError(PnPIError, ValueError):
    """A symmetric-only routine received a non-symmetric matrix."""


class CapabilityError(PnPIError):
    """The requested probe needs a capability the denoiser does not provide."""


class CertificateError(PnPIError):
    """A spectral certificate is internally inconsistent."""


class ConfigError(PnPIError):
    """Invalid run configuration. ``line`` is 1-based when the error comes from a file."""

    def __init__(self, message, line=None, source=None):
        self.line = line
        self.source = source
        if line is not None:
            where = f"{source}:{line}" if source else f"line {line}"
            message = f"{where}: {message}"
        super().__init__(message)


class DivergenceError(PnPIError):
    """An iterate became non-finite. ``trace`` holds the records up to the failure."""

    def __init__(self, message, trace=None):
        self.trace = trace
        super().__init__(message)
