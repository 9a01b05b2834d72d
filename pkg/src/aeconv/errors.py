"""Exception types.  Each carries a stable ``code`` used in CLI reports."""
from __future__ import annotations


class DiagnosticError(ValueError):
    code = "ERROR"

    def __init__(self, message: str = "", **details):
        super().__init__(message or self.code)
        self.details = details


class NonPositiveMass(DiagnosticError):
    code = "NON_POSITIVE_MASS"


class EmptyPartition(DiagnosticError):
    code = "EMPTY_PARTITION"


class DegenerateInterval(DiagnosticError):
    code = "DEGENERATE_INTERVAL"


class NonFiniteIntegrand(DiagnosticError):
    code = "NON_FINITE_INTEGRAND"


class EmptyGrid(DiagnosticError):
    code = "EMPTY_GRID"


class UnsortedGrid(DiagnosticError):
    code = "UNSORTED_GRID"


class ZeroDenominator(DiagnosticError):
    code = "ZERO_DENOMINATOR"


class WindowEmpty(DiagnosticError):
    code = "WINDOW_EMPTY"


class BadThresholds(DiagnosticError):
    code = "BAD_THRESHOLDS"


class BadDegrees(DiagnosticError):
    code = "BAD_DEGREES"


class NumericOverflow(DiagnosticError):
    code = "OVERFLOW"


class ConfigInvalid(DiagnosticError):
    code = "CONFIG_INVALID"


class InputNotFound(DiagnosticError):
    code = "INPUT_NOT_FOUND"
