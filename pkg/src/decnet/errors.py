"""Exception hierarchy shared by the library and the CLI."""


class DecnetError(Exception):
    """Base class for every error raised by decnet."""


class StructureError(DecnetError, ValueError):
    """A network or diagram is structurally unusable (cycle, bad reference, ...)."""


class EvidenceError(DecnetError, ValueError):
    """Evidence names an unknown node or an invalid state."""


class ImpossibleEvidenceError(DecnetError):
    """The evidence has probability zero under the network."""


class UsageError(DecnetError, ValueError):
    """A call was made outside an operation's preconditions."""


class NoAcceptedSamplesError(DecnetError):
    """Logic sampling rejected every draw."""

    def __init__(self, drawn: int, message: str | None = None):
        self.drawn = drawn
        super().__init__(message or f"no accepted samples after {drawn} draws")


class ParseError(DecnetError):
    """Syntax or semantic error in a document, with a source position."""

    def __init__(self, message: str, line: int = 0, column: int = 0):
        self.message = message
        self.line = line
        self.column = column
        where = f"line {line}, column {column}: " if line else ""
        super().__init__(where + message)
