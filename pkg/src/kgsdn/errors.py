"""Exception hierarchy shared by every layer.

The CLI reports failures by class name, so the names below are part of the
user-facing contract.
"""


class KgsdnError(Exception):
    """Base class for all domain errors."""

    @property
    def name(self) -> str:
        return type(self).__name__


class InvalidSpec(KgsdnError):
    pass


class NoSuchSwitch(KgsdnError):
    pass


class NoSuchHost(KgsdnError):
    pass


class NoSuchPort(KgsdnError):
    pass


class MissingToPort(KgsdnError):
    pass


class NoPath(KgsdnError):
    pass


class DisconnectedTopology(KgsdnError):
    pass


class InvalidRequest(KgsdnError):
    """A management call whose arguments violate its preconditions."""


class UnknownPrefix(KgsdnError):
    pass


class ParseError(KgsdnError):
    """Malformed N-Triples input."""

    def __init__(self, line: int, reason: str):
        super().__init__(f"line {line}: {reason}")
        self.line = line
        self.reason = reason


class QuerySyntaxError(KgsdnError):
    def __init__(self, position: int, expected: str):
        super().__init__(f"at offset {position}: expected {expected}")
        self.position = position
        self.expected = expected
