"""Exception hierarchy shared by all solver stages."""


class ChebcertError(Exception):
    """Base class for every error raised by the package."""


class NonConvergence(ChebcertError):
    pass


class MaxIterations(NonConvergence):
    pass


class SingularJacobian(ChebcertError):
    pass


class SingularNewtonJacobian(SingularJacobian):
    pass


class NumericalFailure(ChebcertError):
    """The LP solver could not reach an optimal vertex."""

    def __init__(self, message, condition=None):
        super().__init__(message)
        self.condition = condition


class KernelDimensionTooHigh(ChebcertError):
    def __init__(self, message, dimension):
        super().__init__(message)
        self.dimension = dimension


class SignFlip(ChebcertError):
    """An error sign frozen at initialization changed during Newton iterations."""

    def __init__(self, message, extreme_index=None, component=None):
        super().__init__(message)
        self.extreme_index = extreme_index
        self.component = component


class DomainError(ChebcertError):
    pass


class SchemaError(ChebcertError):
    pass


class NotApplicable(ChebcertError):
    pass
