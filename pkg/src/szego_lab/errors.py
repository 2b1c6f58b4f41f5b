"""Exception hierarchy shared by all modules."""


class SzegoLabError(Exception):
    """Base class for every error raised by the package."""


class ContractError(SzegoLabError, ValueError):
    """An operation was called outside its stated precondition."""


class PreconditionError(ContractError):
    pass


class InternalConsistencyError(SzegoLabError, ArithmeticError):
    """A numerical self-check failed (e.g. a real quantity came out complex)."""


class BlowUpError(SzegoLabError, FloatingPointError):
    """The time stepper produced non-finite values or crossed the norm ceiling.

    ``t`` is the last time reached, ``trajectory`` the partial record (may be None).
    """

    def __init__(self, message, t=None, trajectory=None):
        super().__init__(message)
        self.t = t
        self.trajectory = trajectory


class FlowDivergenceError(SzegoLabError):
    """The adaptive integrator for an auxiliary flow could not reach sigma."""


class FrameDegenerateError(SzegoLabError):
    """|u_m| came too close to zero for the plane-wave frame to be defined."""


class SmallDivisorError(SzegoLabError, ZeroDivisionError):
    def __init__(self, message, report=None):
        super().__init__(message)
        self.report = report


class ConvergenceError(SzegoLabError):
    pass


class InfeasibleWindowError(SzegoLabError):
    """A requested simulation window exceeds the step budget."""

    def __init__(self, message, required_steps=None, budget=None):
        super().__init__(message)
        self.required_steps = required_steps
        self.budget = budget
