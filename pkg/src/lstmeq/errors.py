"""Exception hierarchy shared by every module of the package."""


class EqualizerError(Exception):
    """Base class for all errors raised by :mod:`lstmeq`."""


class ConfigError(EqualizerError, ValueError):
    """Invalid parameter or configuration value."""


class ShapeError(EqualizerError, ValueError):
    """Array dimensions do not agree."""


class DataError(EqualizerError, ValueError):
    """Input data is empty, too short or otherwise unusable."""


class ParseError(EqualizerError, ValueError):
    """A text file could not be parsed.

    ``line`` is the 1-based line number of the offending input, when known.
    """

    def __init__(self, message, line=None, source=None):
        self.line = line
        self.source = source
        where = ""
        if source is not None:
            where += f"{source}:"
        if line is not None:
            where += f"{line}:"
        super().__init__(f"{where} {message}" if where else message)


class UnsupportedVersionError(ParseError):
    """A model file declares a format version this code cannot read."""


class FitError(EqualizerError, RuntimeError):
    """Tap fitting failed (singular system or too short a pulse)."""


class TrainingError(EqualizerError, RuntimeError):
    """Training diverged, e.g. the loss became NaN."""
