"""Exception hierarchy shared by every module in the package."""


class PolicyPathError(Exception):
    """Base class for all errors raised by policypath."""


class InvalidMatrix(PolicyPathError, ValueError):
    pass


class ConvergenceFailure(PolicyPathError, ArithmeticError):
    pass


class InvalidRank(PolicyPathError, ValueError):
    pass


class OracleTooLarge(PolicyPathError, ValueError):
    pass


class PathTooShort(PolicyPathError, ValueError):
    pass


class ShapeMismatch(PolicyPathError, ValueError):
    pass


class EmptyInput(PolicyPathError, ValueError):
    pass


class UnknownLayer(PolicyPathError, KeyError):
    pass


class DegenerateSpectrum(PolicyPathError, ValueError):
    pass


class OutOfOrderSnapshot(PolicyPathError, ValueError):
    pass


class InvalidConfig(PolicyPathError, ValueError):
    pass


class StaleCache(PolicyPathError, RuntimeError):
    pass


class InsufficientData(PolicyPathError, ValueError):
    pass


class DegenerateBaseline(PolicyPathError, ZeroDivisionError):
    pass


class MalformedArchive(PolicyPathError, ValueError):
    pass
