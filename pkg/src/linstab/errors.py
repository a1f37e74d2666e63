"""Exception hierarchy.

Everything raised for a computational reason derives from
:class:`ComputationError`; the CLI maps it to exit code 3.
"""


class ComputationError(Exception):
    """Base class for failures of a well-posed computation."""


class AmbiguousBracket(ComputationError):
    pass


class ResonanceDetected(ComputationError):
    pass


class PrecisionExhausted(ComputationError):
    pass


class OutOfRange(ComputationError):
    pass


class BudgetExceeded(ComputationError):
    pass


class SmallDivisorBreach(ComputationError):
    pass


class SeriesDivergence(ComputationError):
    pass


class StepBudget(ComputationError):
    pass


class DenominatorTooSmall(ComputationError):
    pass


class NotResonant(ComputationError):
    pass


# the resonant counterexample uses the adjective form
NonResonant = NotResonant


class NotSeparable(ComputationError):
    pass


class NormBudgetExceeded(ComputationError):
    pass


class DeltaOutOfWindow(ComputationError):
    pass


class ProfileRangeExceeded(OutOfRange):
    pass


class ConfigError(ValueError):
    """Invalid run configuration; the CLI maps it to exit code 2."""
