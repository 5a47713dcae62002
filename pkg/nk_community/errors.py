"""
Error hierarchy. Every error carries the exit code the CLI uses for it, so library code
can raise freely and only the command line translates errors into process status.
"""


class NkCommunityError(Exception):
    exit_code = 4


class ParameterError(NkCommunityError, ValueError):
    "a parameter is out of range or inconsistent with the model"

    exit_code = 2


class ParseError(NkCommunityError):
    exit_code = 2

    def __init__(self, message: str, *, line: int | None = None):
        self.line = line

        if line is not None:
            message = f"line {line}: {message}"

        super().__init__(message)


class InsufficientDataError(NkCommunityError):
    exit_code = 2


class CapacityError(NkCommunityError):
    "the requested problem is larger than the configured exhaustive cap"

    exit_code = 3

    def __init__(self, message: str, *, cap: int):
        self.cap = cap
        super().__init__(f"{message} (cap is {cap})")


class InvariantViolation(NkCommunityError, AssertionError):
    exit_code = 4
