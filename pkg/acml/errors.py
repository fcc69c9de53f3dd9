"""Exception hierarchy for acml."""
from typing import Iterable, Optional, Sequence


class AcmlError(Exception):
    """Base class for every error raised by the library."""


class ExpressionError(AcmlError):
    """A scalar-field expression could not be parsed."""

    def __init__(self, message: str, offset: int):
        super().__init__(f'{message} (at offset {offset})')
        self.offset = offset


class ExpressionSyntaxError(ExpressionError):
    def __init__(self, offset: int, expected: Iterable[str] = ()):
        self.expected = sorted(set(expected))
        message = 'syntax error'
        if self.expected:
            message += ', expected one of: ' + ', '.join(self.expected)
        super().__init__(message, offset)


class UnknownSymbolError(ExpressionError):
    def __init__(self, name: str, offset: int):
        super().__init__(f'unknown symbol {name!r}', offset)
        self.name = name


class CoordinateRangeError(ExpressionError):
    def __init__(self, index: int, dim: int, offset: int):
        super().__init__(f'coordinate index out of range: x{index} in dimension {dim}', offset)
        self.index = index
        self.dim = dim


class DomainError(AcmlError):
    """Evaluation left the domain of an operation (division by zero, sqrt of a negative)."""

    def __init__(self, message: str, subexpression: str = '', point: Optional[Sequence[float]] = None):
        detail = message
        if subexpression:
            detail += f' in {subexpression!r}'
        if point is not None:
            detail += f' at {list(map(float, point))}'
        super().__init__(detail)
        self.subexpression = subexpression
        self.point = None if point is None else [float(v) for v in point]


class ChartError(AcmlError):
    """The adapted chart is malformed or breaks the standing assumption d_n Gamma^n_a = 0."""


class StructureError(AcmlError):
    """An almost contact metric structure failed validation."""

    def __init__(self, message: str, diagnostics: Sequence = ()):
        super().__init__(message)
        self.diagnostics = list(diagnostics)


class MetricError(AcmlError):
    """A metric is singular or not positive definite."""

    def __init__(self, message: str, point: Optional[Sequence[float]] = None):
        if point is not None:
            message += f' at {list(map(float, point))}'
        super().__init__(message)
        self.point = None if point is None else [float(v) for v in point]


class UnsupportedDegreeError(AcmlError):
    pass


class ScenarioError(AcmlError):
    """A scenario file is malformed; carries the offending line number."""

    def __init__(self, message: str, line: Optional[int] = None):
        if line is not None:
            message = f'line {line}: {message}'
        super().__init__(message)
        self.line = line
