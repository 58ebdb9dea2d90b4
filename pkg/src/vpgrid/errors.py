"""Exception types raised across the package."""


class VPGridError(Exception):
    """Base class for all package errors."""


class DomainError(VPGridError, ValueError):
    """An argument lies outside the domain an operation accepts."""


class ParseError(VPGridError, ValueError):
    """A binary or text file could not be decoded.

    Attributes:
        offset: Byte offset (or line number for text formats) where decoding failed.
    """

    def __init__(self, message: str, offset: int):
        super().__init__(f"{message} (at offset {offset})")
        self.offset = offset
