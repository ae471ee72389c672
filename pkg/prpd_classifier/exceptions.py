"""Exceptions raised by the PRPD classifier."""

from __future__ import annotations

from typing import Any


class PrpdError(Exception):
    """Base exception for PRPD classifier errors."""


class DataValidationError(PrpdError):
    """Input data does not satisfy its contract."""


class SignalValidationError(DataValidationError):
    """A PRPD matrix violates a signal invariant."""

    def __init__(
        self, message: str, *, phase: int | None = None, cycle: int | None = None
    ) -> None:
        """Initialize with the offending entry, when there is one."""
        super().__init__(message)
        self.phase = phase
        self.cycle = cycle


class DatasetFormatError(DataValidationError):
    """A dataset or feature file is malformed."""


class FeatureWidthError(DataValidationError):
    """A feature matrix does not have the width a fitted model expects."""


class ModelFormatError(DataValidationError):
    """A persisted model document cannot be read."""


class ConfigError(PrpdError):
    """A configuration, profile or hyperparameter set is invalid."""


class NumericalError(PrpdError):
    """A numerical routine failed."""


class ConvergenceError(NumericalError):
    """An iterative solver exhausted its iteration budget."""

    def __init__(
        self,
        message: str,
        *,
        iterations: int,
        gap: float,
        best_iterate: Any = None,
    ) -> None:
        """Initialize with diagnostics of the last iterate."""
        super().__init__(message)
        self.iterations = iterations
        self.gap = gap
        self.best_iterate = best_iterate
