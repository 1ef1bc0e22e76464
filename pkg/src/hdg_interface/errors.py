"""Exception types raised by the solver stack."""


class HDGError(Exception):
    """Base class for all errors raised by this package."""


class InvalidParam(HDGError, ValueError):
    pass


class AlignmentError(HDGError):
    """The interface cannot be resolved by mesh edges at the requested resolution."""


class UnknownPreset(HDGError, KeyError):
    pass


class MissingExact(HDGError):
    """Exact solution data was requested from a problem that has none."""


class NotInterfaceEdge(HDGError, ValueError):
    pass


class SingularLocalBlock(HDGError):
    def __init__(self, element, message=None):
        self.element = int(element)
        super().__init__(message or f"element-interior block of element {element} is singular")


class NotPositiveDefinite(HDGError):
    pass


class NoConvergence(HDGError):
    def __init__(self, iterations, residual):
        self.iterations = iterations
        self.residual = residual
        super().__init__(f"CG stopped after {iterations} iterations, relative residual {residual:.3e}")


class NotNested(HDGError):
    pass


class BadSequence(HDGError, ValueError):
    pass


class NoSignChange(HDGError):
    pass
