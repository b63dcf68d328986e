"""
Exception hierarchy for the analyzer.
"""

from typing import Dict, List, Optional


class AnalyzerError(Exception):
    """Base class for all analyzer errors."""


class ProgramSyntaxError(AnalyzerError, ValueError):
    """Raised when program or cost-expression text cannot be parsed."""

    def __init__(self, message: str, line: Optional[int] = None, column: Optional[int] = None):
        self.message = message
        self.line = line
        self.column = column
        location = f" at line {line}, column {column}" if line is not None else ""
        super().__init__(f"{message}{location}")


class UnboundCoefficientError(AnalyzerError, KeyError):
    """Raised when a cost expression mentions a coefficient with no value."""

    def __str__(self) -> str:
        return f"unbound coefficient symbol: {self.args[0]}"


class UnsupportedCaseError(AnalyzerError):
    """Raised for constraints outside the supported fragment (nonlinear atoms, degree > 2)."""


class SolverInfeasibleError(AnalyzerError):
    """Raised when a linear system has no nonnegative solution."""

    def __init__(self, message: str, labels: Optional[List[str]] = None):
        self.labels = labels or []
        super().__init__(message)


class LoopAnalysisError(AnalyzerError):
    """Raised when no strategy yields a bound for a loop."""

    def __init__(self, loop: str, message: str, reasons: Optional[Dict[str, str]] = None):
        self.loop = loop
        self.reasons = reasons or {}
        super().__init__(f"{loop}: {message}")


class NoNormsError(LoopAnalysisError):
    """Raised when norm selection finds nothing to build a template from."""


class ConcavityViolationError(LoopAnalysisError):
    """Raised when a decomposition template is not concave and monotone."""


class StateSpaceLimitError(AnalyzerError):
    """Raised when oracle exploration exceeds its configuration budget."""


class InvariantFileError(AnalyzerError, ValueError):
    """Raised for malformed invariant files or unknown loop labels."""
