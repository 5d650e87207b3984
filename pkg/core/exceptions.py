# Copyright © 2025 SRF Development, Inc. All rights reserved.
# SPDX-License-Identifier: MIT

"""Exception hierarchy. Every error knows the CLI exit code it maps to."""

from typing import Optional

from core import constants


class PolarityFlowError(Exception):
    exit_code = constants.EXIT_INTERNAL


class ConfigError(PolarityFlowError):
    """Invalid or incomplete run configuration."""

    exit_code = constants.EXIT_CONFIG

    def __init__(self, message: str, field: Optional[str] = None):
        self.field = field
        super().__init__(f"{field}: {message}" if field else message)


# --- Data errors (exit 3) ---

class DataError(PolarityFlowError):
    exit_code = constants.EXIT_DATA


class ParseError(DataError):
    def __init__(self, message: str, line: Optional[int] = None, path: Optional[str] = None):
        self.line = line
        self.path = path
        where = f"{path}:{line}" if path and line else (f"line {line}" if line else path or "")
        super().__init__(f"{where}: {message}" if where else message)


class NonPositivePrice(DataError):
    pass


class DuplicateDate(DataError):
    pass


class UnknownKeyword(DataError):
    pass


class EmptyCalendar(DataError):
    pass


class AllSeriesDropped(DataError):
    pass


class NoLexiconHit(DataError):
    pass


class DegenerateSeries(DataError):
    pass


class ZeroVariance(DataError):
    def __init__(self, label: str):
        self.label = label
        super().__init__(f"Series '{label}' has zero variance")


class WindowTooLong(DataError):
    pass


class ShapeMismatch(DataError):
    pass


class CalendarMismatch(DataError):
    pass


class SeriesTooShort(DataError):
    pass


class InvalidRatio(DataError):
    pass


class InvalidInput(DataError):
    pass


class NotNormalized(DataError):
    pass


class NotPSD(DataError):
    pass


class DegenerateRange(DataError):
    pass


class DegenerateBaseline(DataError):
    pass


class MissingArtifact(DataError):
    """An earlier stage's output is not in the output directory."""


class FetchError(DataError):
    pass


class AuthError(FetchError):
    pass


class RateLimited(FetchError):
    pass


class NetworkError(FetchError):
    pass


# --- Numeric failures (exit 4) ---

class NumericError(PolarityFlowError):
    exit_code = constants.EXIT_NUMERIC


class ConvergenceFailure(NumericError):
    pass


class FitDiverged(NumericError):
    """The optimum sits on a search boundary. `value` holds the boundary estimate."""

    def __init__(self, value: float, bound: float):
        self.value = value
        self.bound = bound
        super().__init__(f"Fit reached search boundary {bound} (estimate {value:.4f})")


class AllSamplesSkipped(NumericError):
    pass
