"""Exception types raised across the package.

Every error derives from :class:`GestureError`. The ``exit_code`` class
attribute is what the command line reports when the error escapes a verb.
"""


class GestureError(Exception):
    exit_code = 2


class InvalidInputError(GestureError, ValueError):
    """Argument outside its documented domain."""


class EmptyInputError(InvalidInputError):
    pass


class InvalidLengthError(InvalidInputError):
    pass


class InvalidDimensionsError(InvalidInputError):
    pass


class AlphabetMismatchError(InvalidInputError):
    pass


class TooLargeError(InvalidInputError):
    pass


class EmptyDatasetError(InvalidInputError):
    pass


class DuplicateLabelError(InvalidInputError):
    pass


class EmptyRegistryError(InvalidInputError):
    pass


class MissingClassError(InvalidInputError):
    pass


class EmptyTemplateSetError(InvalidInputError):
    pass


class NonMonotonicTimestampsError(InvalidInputError):
    pass


class InvalidSpecError(InvalidInputError):
    pass


class InsufficientDataError(InvalidInputError):
    pass


class DegenerateSequenceError(GestureError, ArithmeticError):
    """All hidden paths have zero probability under the given parameters."""

    exit_code = 3


class ParseError(GestureError):
    """Malformed file. ``line`` and ``field`` locate the problem when known."""

    def __init__(self, message, *, path=None, line=None, field=None):
        self.path = path
        self.line = line
        self.field = field
        where = []
        if path is not None:
            where.append(str(path))
        if line is not None:
            where.append(f"line {line}")
        if field is not None:
            where.append(f"field {field!r}")
        prefix = ", ".join(where)
        super().__init__(f"{prefix}: {message}" if prefix else message)


class DimensionMismatchError(ParseError):
    pass
