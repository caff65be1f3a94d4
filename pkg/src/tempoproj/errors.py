"""Exception types shared across the package."""


class TempoprojError(Exception):
    """Base class for every error raised by this package."""


class FormatError(TempoprojError):
    """Malformed input file (ragged rows, bad layout, non-finite values)."""


class ParseError(FormatError):
    """A cell could not be parsed as a finite number."""


class EmptyDatasetError(FormatError):
    """Input contained no samples."""


class LabelError(TempoprojError):
    """Missing or inconsistent label information."""


class ShapeError(TempoprojError):
    """Operands have incompatible shapes or lengths."""


class ParameterError(TempoprojError):
    """A parameter value is outside its legal range."""


class ConfigError(TempoprojError):
    """An invalid configuration was supplied."""


class UnsupportedInputError(TempoprojError):
    """Input is legal in general but not supported by this operation."""


class DegenerateInputError(TempoprojError):
    """Input is degenerate for the requested operation (e.g. an all-zero
    series under SBD, or identical points under spectral clustering)."""


class NumericalError(TempoprojError):
    """An iterative numerical routine failed to converge."""


class DivergenceError(TempoprojError):
    """Training produced a non-finite loss."""

    def __init__(self, message, epoch=None):
        super().__init__(message)
        self.epoch = epoch
