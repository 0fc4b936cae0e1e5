"""Exception hierarchy shared by every module of the package."""


class OpFrameError(Exception):
    """Base class for all package errors."""


class MalformedElementError(OpFrameError, ValueError):
    pass


class ShapeMismatchError(OpFrameError, ValueError):
    pass


class NotPositiveError(OpFrameError, ValueError):
    def __init__(self, message, min_eigenvalue):
        super().__init__(message)
        self.min_eigenvalue = min_eigenvalue


class EmptyFamilyError(OpFrameError, ValueError):
    pass


class PreconditionError(OpFrameError, ValueError):
    pass


class NotInjectiveError(PreconditionError):
    def __init__(self, message, near_kernel):
        super().__init__(message)
        self.near_kernel = near_kernel


class HypothesisGateError(PreconditionError):
    """A theorem's scalar precondition fails; ``value`` is the offending quantity."""

    def __init__(self, message, value):
        super().__init__(message)
        self.value = value


class NotAFrameError(PreconditionError):
    pass


class RangeViolationError(OpFrameError):
    pass


class EmptyRatioError(OpFrameError):
    pass


class SchemaError(OpFrameError, ValueError):
    def __init__(self, message, path=""):
        super().__init__(f"{path}: {message}" if path else message)
        self.path = path
