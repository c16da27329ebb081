class CpdetectError(Exception):
    """Base class of all errors raised by cpdetect"""


class InvalidInputError(CpdetectError, ValueError):
    """Malformed series, configuration or CSV input"""


class SingularityError(CpdetectError, ArithmeticError):
    """An intensity diverges at the requested time (t = 0)"""


class DomainError(CpdetectError, ValueError):
    """A parameter lies outside the domain of a density or transform"""


class UsageError(CpdetectError):
    """Bad command line flags or environment settings"""
