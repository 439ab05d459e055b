"""Exception types shared across the package."""

from __future__ import annotations


class WsflError(Exception):
    """Base class for every error raised by this package."""


class InvalidInputError(WsflError):
    """An argument or in-memory value violates an operation's contract."""


class DegenerateModelError(WsflError):
    """A model fit found no usable signal (for example zero descriptor variance)."""


class ParseError(WsflError):
    """A file on disk is malformed.

    Carries the file path plus a byte offset (binary formats) or a line
    number (line-oriented text formats) when the location is known.
    """

    def __init__(
        self,
        message: str,
        *,
        path: object = None,
        offset: int | None = None,
        line: int | None = None,
    ) -> None:
        where = []
        if offset is not None:
            where.append(f"byte offset {offset}")
        if line is not None:
            where.append(f"line {line}")
        if where:
            message = f"{message} ({', '.join(where)})"
        if path is not None:
            message = f"{path}: {message}"
        super().__init__(message)
        self.path = str(path) if path is not None else None
        self.offset = offset
        self.line = line
