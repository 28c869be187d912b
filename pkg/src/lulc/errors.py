"""Exception hierarchy shared by every lulc module.

Everything the library raises on bad input derives from ``LulcError``; file
problems additionally derive from ``OSError`` so the CLI can map them to the
I/O exit code.
"""


class LulcError(Exception):
    """Base class for all library errors."""


class ValidationError(LulcError, ValueError):
    """Input violates a documented precondition or type invariant."""


class ConfigurationError(ValidationError):
    """Invalid parameters (singular geotransform, even k, ...)."""


class FormatError(ValidationError):
    """A file parsed but its content is malformed."""


class CorruptionError(FormatError):
    """A raster data file does not match its header."""


class TrainingError(LulcError):
    pass


class SamplingError(LulcError):
    pass


class MetricError(LulcError, ArithmeticError):
    pass


class RasterIOError(LulcError, OSError):
    """Reading or writing a file failed; carries the offending path."""

    def __init__(self, path, reason):
        self.path = str(path)
        self.reason = str(reason)
        super().__init__(f"{self.path}: {self.reason}")
