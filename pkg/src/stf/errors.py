"""Exception hierarchy shared by the library and the command line."""


class StfError(Exception):
    """Base class for every error raised by this package."""


class BudgetExceeded(StfError):
    """A construction would exceed the configured node budget."""


class ParseError(StfError):
    """Malformed text input; ``offset`` points at the offending character."""

    def __init__(self, message: str, offset: int | None = None, line: int | None = None):
        self.message = message
        self.offset = offset
        self.line = line
        where = []
        if line is not None:
            where.append(f"line {line}")
        if offset is not None:
            where.append(f"offset {offset}")
        super().__init__(f"{message} at {', '.join(where)}" if where else message)
