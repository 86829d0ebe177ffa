class CfolError(Exception):
    """Base class for domain-level failures (CLI exit status 1)."""


class DomainError(CfolError, ValueError):
    """An argument lies outside the mathematical domain of an operation."""


class InputError(CfolError, ValueError):
    """Ill-formed or ill-sorted input (bad maps, missing assignments, ...)."""


class ParseError(CfolError, ValueError):
    def __init__(self, message: str, position: int | None = None, text: str | None = None):
        self.position = position
        self.text = text
        if position is not None:
            message = f"{message} at position {position}"
            if text is not None:
                message += f"\n  {text}\n  {' ' * position}^"
        super().__init__(message)
