"""Exception and warning types shared across the package."""

from __future__ import annotations


class StandbyLabError(Exception):
    """Base class for all errors raised by this package."""


class NegativeTime(StandbyLabError):
    """A time argument was negative."""


class OutOfRange(StandbyLabError):
    """A probability or parameter fell outside its admissible range."""


class DeadAtAge(StandbyLabError):
    """Residual law requested at an age the distribution cannot survive to."""


class DegenerateGrid(StandbyLabError):
    """An evaluation grid has too few usable points for the requested check."""


class NumericalUnderflow(StandbyLabError):
    """A ratio check lost its entire grid to 0/0 underflow regions."""


class InvalidModelFunction(StandbyLabError):
    """A model-function map left the admissible band 0 <= value <= t."""


class QuadratureFailure(StandbyLabError):
    """Adaptive quadrature exhausted its depth budget before reaching tolerance."""


class ArityMismatch(StandbyLabError):
    """Component/standby counts do not fit the requested allocation model."""


class RegistryMismatch(StandbyLabError):
    """Two systems that must share a component registry do not."""


class InvalidSystemPattern(StandbyLabError):
    """A system pair does not have the structure an operation requires."""


class ModelFunctionMismatch(StandbyLabError):
    """An operation requiring omega == gamma was given a model function without it."""


class ConstraintViolation(StandbyLabError):
    """A reproduction config violates one of the example's stated inequalities."""

    def __init__(self, inequality: str, detail: str = ""):
        self.inequality = inequality
        msg = f"constraint violated: {inequality}"
        if detail:
            msg += f" ({detail})"
        super().__init__(msg)


class UnknownHypothesis(StandbyLabError):
    """Probe was asked to violate a hypothesis name it does not know."""


class ConfigError(StandbyLabError):
    """Malformed or inconsistent experiment configuration."""


class TruncationWarning(UserWarning):
    """An improper integral's tail remainder bound exceeded tolerance."""
