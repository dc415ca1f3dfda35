"""Exception hierarchy shared across the package.

The CLI maps each branch of this hierarchy to a distinct exit code, so new
error types should subclass one of these rather than raising bare Exception.
"""


class FaceFuseError(Exception):
    """Base class for all errors raised by this package."""


class ConfigError(FaceFuseError):
    """Invalid configuration value or combination."""


class ShapeMismatchError(FaceFuseError):
    """Two operands that must share a shape do not."""


class PgmError(FaceFuseError):
    """Base class for PGM read/write failures."""


class PgmHeaderError(PgmError):
    """Malformed PGM header (bad magic, missing tokens, bad dimensions)."""


class PgmMaxvalError(PgmError):
    """PGM maxval is zero or exceeds the 16-bit limit."""


class PgmDataError(PgmError):
    """Pixel data truncated or otherwise inconsistent with the header."""


class ManifestError(FaceFuseError):
    """Dataset manifest failed to parse or validate."""


class TrainingError(FaceFuseError):
    """Classifier training failed (divergence, singular system, bad data)."""
