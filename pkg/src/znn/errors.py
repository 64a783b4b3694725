"""Exception hierarchy.

Two families matter to callers: :class:`ConfigError` (bad input, CLI exit
code 2) and :class:`NumericalError` (the computation could not proceed,
CLI exit code 3).
"""


class ZnnError(Exception):
    """Base class. ``step`` is filled in by the harness when known."""

    step = None

    def __str__(self):
        msg = super().__str__()
        if self.step is not None:
            return f"step {self.step}: {msg}"
        return msg


class ConfigError(ZnnError, ValueError):
    pass


class NumericalError(ZnnError, ArithmeticError):
    pass


class ShapeMismatch(ConfigError):
    pass


class UnknownFormula(ConfigError):
    pass


class UnknownProblem(ConfigError):
    pass


class NotOneStepAhead(ConfigError):
    pass


class Inconsistent(ConfigError):
    """Stencil fails the zeroth/first moment conditions."""


class HistoryUnderflow(ZnnError, RuntimeError):
    pass


class RealTimeViolation(ZnnError, RuntimeError):
    """A sample later than the current instant was requested during a step."""


class SingularMatrix(NumericalError):
    pass


class RankDeficient(NumericalError):
    pass


class ZeroPolynomial(NumericalError):
    pass


class Divergence(NumericalError):
    """Iterates left the finite range."""


class DegenerateResidual(NumericalError):
    pass
