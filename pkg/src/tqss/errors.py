"""Exception types raised across the package."""


class QSSError(Exception):
    """Base class for all errors raised by tqss."""


class InvalidArgument(QSSError, ValueError):
    pass


class ZeroInverseError(QSSError, ZeroDivisionError):
    pass


class ModulusMismatch(QSSError, ValueError):
    pass


class ShareError(QSSError, ValueError):
    """Duplicate/zero x-values, too many participants, or a share outside the subset."""


class StateCapExceeded(QSSError, MemoryError):
    pass


class NormalizationError(QSSError, ArithmeticError):
    pass


class CardinalityError(QSSError, ValueError):
    pass


class ConfigError(QSSError, ValueError):
    pass
