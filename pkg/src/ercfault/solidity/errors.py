from __future__ import annotations


class SolidityError(Exception):
    """Base class for frontend failures."""


class ParseError(SolidityError):
    def __init__(self, message: str, line: int, column: int, expected: tuple[str, ...] = ()):
        self.message = message
        self.line = line
        self.column = column
        self.expected = tuple(expected)
        detail = f"{line}:{column}: {message}"
        if self.expected:
            detail += f" (expected one of: {', '.join(self.expected)})"
        super().__init__(detail)


class UnsupportedConstruct(SolidityError):
    def __init__(self, construct: str, line: int, column: int):
        self.construct = construct
        self.line = line
        self.column = column
        super().__init__(f"{line}:{column}: unsupported construct: {construct}")
