"""Exception hierarchy. Each class maps onto one CLI exit code."""


class EquivgenError(Exception):
    exit_code = 4


class InputError(EquivgenError):
    """Malformed or inconsistent user input (exit code 4)."""


class ParseError(InputError):
    pass


class ProblemError(InputError):
    pass


class ZeroDenominatorError(EquivgenError, ZeroDivisionError):
    pass


class ConsequenceBoundError(InputError):
    pass


class NonPolynomialError(EquivgenError):
    pass


class ContradictionError(EquivgenError):
    """The determining system admits only the zero solution or is inconsistent."""

    exit_code = 3


class SingularityError(InputError):
    pass


class VerificationError(InputError):
    pass
