"""Exception hierarchy shared by all zbtest modules."""


class ZBTestError(Exception):
    """Base class for every error raised by zbtest."""


class InvalidArgumentError(ZBTestError, ValueError):
    pass


class SampleTooSmallError(ZBTestError, ValueError):
    pass


class DegenerateSampleError(ZBTestError, ValueError):
    pass


class InvalidModelError(ZBTestError, ValueError):
    pass


class IllPosedRequestError(ZBTestError, ValueError):
    pass


class InvalidPlanError(ZBTestError, ValueError):
    pass


class QuadratureError(ZBTestError, ArithmeticError):
    """Adaptive quadrature did not reach the requested tolerance.

    The best available estimate and its error bound are kept on the
    exception so callers can decide whether to accept them.
    """

    def __init__(self, message, estimate, error_bound):
        super().__init__(f"{message} (estimate={estimate!r}, error bound={error_bound!r})")
        self.estimate = estimate
        self.error_bound = error_bound


class MissingCriticalValueError(ZBTestError, LookupError):
    def __init__(self, message, closest=None):
        super().__init__(message)
        self.closest = closest
