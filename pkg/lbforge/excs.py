class LBForgeError(Exception):
    pass


class ValidationError(LBForgeError):
    """
    Raised when the validate flag is set true and a value breaks one of its invariants
    """

    pass


class InfeasibleParametersError(ValidationError):
    """
    Raised by the instance builders when a feasibility inequality fails.

    ``inequality`` is the human readable form of the failed check, e.g. ``"A < 1/(4n^2)"``.
    """

    def __init__(self, msg, inequality=None):
        self.inequality = inequality
        super().__init__(msg)


class DescriptorError(ValidationError):
    """
    Raised when an instance descriptor or a sample file can't be parsed
    """

    pass


class BudgetExceededError(LBForgeError):
    def __init__(self, msg, size=None, budget=None):
        self.size = size
        self.budget = budget
        super().__init__(msg)


class HypothesisViolationError(LBForgeError):
    def __init__(self, msg, index=None):
        self.index = index
        super().__init__(msg)


class SolverError(LBForgeError):
    def __init__(self, msg, status=None):
        self.status = status
        super().__init__(msg)


class DegenerateLikelihoodError(LBForgeError):
    pass


class HypothesisWarning(UserWarning):
    """
    Emitted when a bound is evaluated outside the hypotheses it was proven under
    """

    pass
