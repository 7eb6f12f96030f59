"""Exception hierarchy shared by every module."""


class BWVError(Exception):
    """Base class for all errors raised by bwvnet."""


class InvalidInputError(BWVError, ValueError):
    """Arguments violate a documented precondition (shape, range, emptiness)."""


class NumericError(BWVError, ArithmeticError):
    """A computation produced or received a non-finite value."""

    def __init__(self, message, *, parameter=None, iteration=None):
        super().__init__(message)
        self.parameter = parameter
        self.iteration = iteration


class FormatError(BWVError, ValueError):
    """A serialized file is malformed. ``field`` names the offending part."""

    def __init__(self, message, *, field=None):
        super().__init__(message)
        self.field = field


class DataError(BWVError):
    """Dataset level problem: unreadable files, bad labels, infeasible splits.

    ``problems`` carries the itemized list when several issues are found at once.
    """

    def __init__(self, message, problems=None):
        self.problems = list(problems or [])
        if self.problems:
            message = message + "\n" + "\n".join(f"  - {p}" for p in self.problems)
        super().__init__(message)
