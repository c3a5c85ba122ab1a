"""Exception types. The CLI maps each family to a fixed exit code."""


class MaglapError(Exception):
    """Base class for all package errors."""


class ParseError(MaglapError, ValueError):
    """Malformed input text. Carries the offending 1-based line number."""

    def __init__(self, message, line=None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


class GraphError(MaglapError, ValueError):
    """Structurally invalid graph or vertex reference."""


class NormalizationError(MaglapError, ValueError):
    """Zero-degree vertex encountered while normalizing an operator."""

    def __init__(self, vertex):
        self.vertex = vertex
        super().__init__(f"vertex {vertex} has zero degree; cannot normalize")


class NumericalError(MaglapError, ArithmeticError):
    """An eigensolver or numerical invariant check failed."""


class SizeMismatchError(MaglapError, ValueError):
    """Two objects that must agree in size (graphs, spectra, grids) do not."""
