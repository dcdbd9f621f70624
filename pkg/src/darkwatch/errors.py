"""Exception hierarchy.

Every error raised by the toolkit derives from :class:`DarkwatchError`. The
three intermediate classes decide the CLI exit code: parameter problems map to
1, bad input data to 2 and numeric divergence to 3.
"""


class DarkwatchError(Exception):
    exit_code = 2


class ParameterError(DarkwatchError, ValueError):
    """An argument is outside its allowed range."""

    exit_code = 1


class DataError(DarkwatchError, ValueError):
    """Input data is missing, malformed or inconsistent."""

    exit_code = 2


class DivergenceDetected(DarkwatchError, ArithmeticError):
    """A training loss became non-finite."""

    exit_code = 3


# dataset
class EmptyInput(DataError):
    pass


class MissingColumn(DataError):
    pass


class MalformedRow(DataError):
    pass


class EmptyTable(DataError):
    pass


class NullValues(DataError):
    pass


class TooFewRows(DataError):
    pass


class BadRatio(ParameterError):
    pass


# eda
class BadBinCount(ParameterError):
    pass


# linear models / metrics
class DimensionMismatch(DataError):
    pass


class NonBinaryLabel(DataError):
    pass


class EmptyData(DataError):
    pass


class LengthMismatch(DataError):
    pass


class EmptyMatrix(DataError):
    pass


class TooFewModels(DataError):
    pass


# imaging
class BadMagic(DataError):
    pass


class TruncatedData(DataError):
    pass


class MaxvalUnsupported(DataError):
    pass


class BadRadius(ParameterError):
    pass


class BadSigma(ParameterError):
    pass


class ImageTooSmall(DataError):
    pass


# cnn
class ShapeMismatch(DataError):
    pass


class BadLabel(DataError):
    pass


class EmptyDataset(DataError):
    pass


class UntrainedModel(DataError):
    pass
