"""Exception types shared across the package."""


class CaspiError(Exception):
    """Base class for all package errors."""


class DimensionMismatch(CaspiError):
    """Array shapes or counts disagree with the declared geometry."""


class NonFinite(CaspiError):
    """A value that must be finite is NaN or infinite."""


class FormatError(CaspiError):
    """A byte stream does not parse as the expected file format."""


class HeaderError(CaspiError):
    """A file header is syntactically valid but internally inconsistent."""


class OutOfBounds(CaspiError):
    """A pixel index or window lies outside the image."""


class NonPositiveWavelength(CaspiError):
    """Wavelengths must be strictly positive."""


class VirtualImage(CaspiError):
    """Object inside the focal length: no real image is formed."""


class KernelTooLarge(CaspiError):
    """Kernel support does not fit the image plane."""


class NormalizationError(CaspiError):
    """A blur kernel has non-positive mass or negative entries."""


class BadDensity(CaspiError):
    """Mask density outside (0, 1]."""


class TooLarge(CaspiError):
    """Problem size exceeds the dense-matrix guard."""


class BadDimensions(CaspiError):
    """Image dimensions incompatible with the requested transform."""


class NegativeThreshold(CaspiError):
    """Soft-threshold level must be nonnegative."""


class Unsupported(CaspiError):
    """Requested feature is outside the supported configuration space."""


class ConfigError(CaspiError):
    """Experiment configuration is missing or inconsistent."""


class CgStagnation(Warning):
    """Conjugate gradient failed to reach tolerance; best iterate was kept."""
