"""Pipeline related exceptions."""

from typing import Optional, Sequence

from .typedefs import Diagnostics

__all__ = (
    'UrbanVideoError',

    'UsageError', 'ConfigError',

    'DataError', 'MalformedInputError', 'EmptyObjectDayError',
    'CalibrationRateError', 'VideoTooShortError', 'TooFewSamplesError',
    'NoMatchingFrameError', 'ShapeMismatchError', 'MissingBranchError',

    'NumericalError', 'NonFiniteError', 'DivergenceError',
    'GradientCheckError',

    'GraphStateError',
)


class UrbanVideoError(Exception):
    """Base class for every error raised by the pipeline.

    exit_code: process exit status the command line maps the error to.
    message: human readable description.
    """

    exit_code = 1
    message = ''

    def __init__(self, message: str='') -> None:
        if message:
            self.message = message
        super().__init__(self.message)

    def __str__(self) -> str:
        return self.message

    def __repr__(self) -> str:
        return "<%s: exit_code=%d, message=%r>" % (
            self.__class__.__name__, self.exit_code, self.message)


class UsageError(UrbanVideoError):
    """Bad flags or arguments."""

    exit_code = 1
    message = 'Usage error'


class ConfigError(UsageError):
    """Experiment config file is missing, unreadable or invalid."""

    message = 'Invalid configuration'


class DataError(UrbanVideoError):
    """Input data cannot be processed."""

    exit_code = 2
    message = 'Data error'


class MalformedInputError(DataError):
    """Input stream is unreadable or not in the expected format."""

    def __init__(self, message: str, *,
                 line: Optional[int]=None) -> None:
        if line is not None:
            message = 'line %d: %s' % (line, message)
        super().__init__(message)
        self.line = line


class EmptyObjectDayError(DataError):

    message = 'empty object-day'


class CalibrationRateError(DataError):
    """Sampling interval does not divide the day or the frame interval."""


class VideoTooShortError(DataError):

    def __init__(self, length: int, minimum: int) -> None:
        super().__init__(
            'video has %d frames, at least %d are required' % (
                length, minimum))
        self.length = length
        self.minimum = minimum


class TooFewSamplesError(DataError):

    def __init__(self, count: int, minimum: int) -> None:
        super().__init__(
            'got %d samples, at least %d are required' % (count, minimum))
        self.count = count
        self.minimum = minimum


class NoMatchingFrameError(DataError):
    """No frame satisfies a calendar or index query."""


class ShapeMismatchError(DataError):

    def __init__(self, what: str,
                 expected: Sequence[object],
                 actual: Sequence[object]) -> None:
        super().__init__('%s: expected shape %s, got %s' % (
            what, tuple(expected), tuple(actual)))
        self.expected = tuple(expected)
        self.actual = tuple(actual)


class MissingBranchError(DataError):
    """A model input branch was not supplied."""


class NumericalError(UrbanVideoError):

    exit_code = 3
    message = 'Numerical failure'


class NonFiniteError(NumericalError):

    def __init__(self, where: str,
                 diagnostics: Optional[Diagnostics]=None) -> None:
        super().__init__('non-finite values in %s' % where)
        self.where = where
        self.diagnostics = diagnostics or {}


class DivergenceError(NumericalError):

    def __init__(self, epoch: int, step: int, loss: float) -> None:
        super().__init__('training diverged at epoch %d step %d '
                         '(loss=%r)' % (epoch, step, loss))
        self.epoch = epoch
        self.step = step
        self.loss = loss


class GradientCheckError(NumericalError):

    def __init__(self, failures: Sequence[str]) -> None:
        super().__init__('gradient check failed for: %s' % ', '.join(
            failures))
        self.failures = tuple(failures)


class GraphStateError(RuntimeError):
    """Backward pass requested without a recorded forward pass."""
