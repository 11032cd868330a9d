"""Exception hierarchy shared by every engine."""

from __future__ import annotations


class HccnError(Exception):
    """Base class for all package errors."""


class ParameterError(HccnError, ValueError):
    """Invalid network parameters or out-of-domain arguments."""

    def __init__(self, violations):
        if isinstance(violations, str):
            violations = [violations]
        self.violations = list(violations)
        super().__init__("; ".join(self.violations))


class NumericError(HccnError, ArithmeticError):
    """A numerical kernel failed to reach its accuracy target.

    ``module`` names the engine that raised it so front ends can report it.
    """

    module = "mathkit"

    def __init__(self, message, *, estimate=None, error=None, module=None):
        super().__init__(message)
        self.estimate = estimate
        self.error = error
        if module is not None:
            self.module = module


class QuadratureError(NumericError):
    pass


class InversionError(NumericError):
    pass


class DegenerateDistributionError(NumericError):
    module = "moments"


class IllConditionedError(NumericError):
    module = "coverage"


class NoServingBSError(HccnError):
    """A sampled deployment contains no base station."""
