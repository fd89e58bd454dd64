class KdvCritError(Exception):
    """Base class for numerical failures raised by this package."""


class ConvergenceFailure(KdvCritError):
    pass


class QuadratureFailure(KdvCritError):
    pass


class DegenerateRoots(KdvCritError):
    pass


class DegenerateDenominator(KdvCritError):
    pass


class SingularStep(KdvCritError):
    def __init__(self, message, step=None):
        super().__init__(message)
        self.step = step


class InstabilityError(KdvCritError):
    pass
