from fastapi import status


class OrderFlowError(Exception):
    """Base class for every error raised by the toolkit.

    `status_code` is what the HTTP layer answers with, `exit_code` what the CLI
    exits with.
    """

    status_code: int = status.HTTP_400_BAD_REQUEST
    exit_code: int = 1

    def __init__(self, message: str):
        super().__init__(message)
        self.message = message


class ParameterError(OrderFlowError):
    status_code = status.HTTP_422_UNPROCESSABLE_ENTITY
    exit_code = 2


class ParseError(OrderFlowError):
    exit_code = 3

    def __init__(self, message: str, line: int | None = None):
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)
        self.line = line


class EmptyLogError(OrderFlowError):
    exit_code = 4


class LagRangeError(OrderFlowError):
    exit_code = 5


class CapacityError(OrderFlowError):
    status_code = status.HTTP_413_REQUEST_ENTITY_TOO_LARGE
    exit_code = 6


class MissingDataError(OrderFlowError):
    exit_code = 7


class FeasibilityError(OrderFlowError):
    status_code = status.HTTP_422_UNPROCESSABLE_ENTITY
    exit_code = 8


class MappingError(OrderFlowError):
    exit_code = 9


class ResolutionError(OrderFlowError):
    exit_code = 10


class InsufficientDataError(OrderFlowError):
    status_code = status.HTTP_422_UNPROCESSABLE_ENTITY
    exit_code = 11
