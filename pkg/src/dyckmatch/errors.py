"""Exception hierarchy shared by every module."""


class DyckMatchError(ValueError):
    """Base class; the CLI maps every subclass to exit status 1."""


class DuplicateCoordinate(DyckMatchError):
    pass


class NotABridge(DyckMatchError):
    pass


class SizeMismatch(DyckMatchError):
    pass


class IndexOutOfRange(DyckMatchError, IndexError):
    pass


class TooLarge(DyckMatchError):
    pass


class UnsupportedOrder(DyckMatchError):
    pass


class QuadratureNonConvergence(DyckMatchError, ArithmeticError):
    pass
