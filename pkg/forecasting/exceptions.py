"""
Exception hierarchy for the forecasting app.

Every error carries an ``exit_code`` so management commands can map
failures onto distinct process exit codes.
"""


class ForecastingError(Exception):
    """Base class for all forecasting errors."""

    exit_code = 1


class MissingInputError(ForecastingError):
    """A required file (dataset, checkpoint, config) does not exist."""

    exit_code = 2


class ConfigurationError(ForecastingError):
    """A run or model configuration violates its contract."""

    exit_code = 3

    def __init__(self, message, errors=None):
        super().__init__(message)
        self.errors = errors or {}


class CheckpointMismatchError(ForecastingError):
    """A checkpoint does not fit the configuration or dataset it is used with."""

    exit_code = 4


class TrainingDivergedError(ForecastingError):
    """Training produced a non-finite loss and was aborted."""

    exit_code = 5

    def __init__(self, message, step=None, checkpoint_path=None):
        super().__init__(message)
        self.step = step
        self.checkpoint_path = checkpoint_path


class PanelParseError(ForecastingError):
    """A speed panel file is malformed."""

    exit_code = 6

    def __init__(self, message, line=None, path=None):
        if line is not None:
            message = f'{message} (line {line})'
        super().__init__(message)
        self.line = line
        self.path = path


class TensorError(ForecastingError):
    """Base class for tensor engine errors."""

    exit_code = 7


class ShapeError(TensorError):
    """Operand shapes do not conform for a primitive."""

    def __init__(self, primitive, *shapes, detail=''):
        shape_text = ' vs '.join(str(tuple(shape)) for shape in shapes)
        message = f'{primitive}: incompatible shapes {shape_text}'
        if detail:
            message = f'{message} ({detail})'
        super().__init__(message)
        self.primitive = primitive
        self.shapes = tuple(tuple(shape) for shape in shapes)


class NonFiniteError(TensorError):
    """A primitive produced a non-finite value."""

    def __init__(self, primitive, detail=''):
        message = f'{primitive}: non-finite result'
        if detail:
            message = f'{message} ({detail})'
        super().__init__(message)
        self.primitive = primitive


class GraphError(TensorError):
    """Misuse of the computation graph (empty graph, replay, non-scalar loss)."""


class GradientCheckError(TensorError):
    """Finite-difference probing hit a non-finite evaluation."""

    def __init__(self, coordinate, value):
        super().__init__(f'non-finite function value {value!r} at coordinate {coordinate}')
        self.coordinate = coordinate
        self.value = value
