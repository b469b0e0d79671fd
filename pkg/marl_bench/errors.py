"""
Exception hierarchy for marl-bench.

Every input-domain failure derives from ValidationError so the command-line
front end can map it to exit code 2.
"""

from typing import Optional, Sequence


class MarlBenchError(Exception):
    """Base class for all marl-bench errors."""


class ValidationError(MarlBenchError, ValueError):
    """An input is outside its documented domain."""

    def __init__(self, message: str, field: Optional[str] = None):
        super().__init__(message)
        self.field = field


class VacuousBoundError(ValidationError):
    """A logarithm inside a bound has an argument <= 1."""

    def __init__(self, constraint: str, argument: float):
        super().__init__(
            f"vacuous bound: {constraint} must exceed 1 (got {argument!r})",
            field=constraint,
        )
        self.constraint = constraint
        self.argument = argument


class AlignmentInfeasibleError(ValidationError):
    """The misaligned bound requires epsilon > 2 * alpha."""

    def __init__(self, epsilon: float, alpha: float):
        super().__init__(
            f"alignment infeasible: epsilon must exceed 2*alpha "
            f"(epsilon={epsilon!r}, alpha={alpha!r}, "
            f"epsilon must be > {2.0 * alpha!r})",
            field="epsilon",
        )
        self.epsilon = epsilon
        self.alpha = alpha
        self.min_epsilon = 2.0 * alpha


class RegimeMismatchError(ValidationError):
    """A regime was given inputs that belong to a different regime."""


class ModeMismatchError(ValidationError):
    """A task mode or model arrangement does not match the operation."""


class TrainingDivergedError(MarlBenchError, RuntimeError):
    """Gradient descent produced a non-finite or increasing objective."""

    def __init__(self, learning_rates: Sequence[float], stage: int = 0):
        rates = ", ".join(repr(float(lr)) for lr in learning_rates)
        super().__init__(f"training diverged at stage {stage} for learning rate(s): {rates}")
        self.learning_rates = tuple(float(lr) for lr in learning_rates)
        self.stage = stage


class AscentError(MarlBenchError, RuntimeError):
    """The discrepancy became non-finite during gradient ascent."""

    def __init__(self, restart: int, value: float):
        super().__init__(f"non-finite discrepancy {value!r} in ascent restart {restart}")
        self.restart = restart
        self.value = value
