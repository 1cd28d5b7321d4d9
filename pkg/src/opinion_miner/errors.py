"""Exception types shared across the package."""


class OpinionMinerError(Exception):
    """Base class for errors raised by this package."""


class InputError(OpinionMinerError):
    """Bad or missing input data; maps to exit code 3 at the CLI."""


class CorpusParseError(InputError):
    """A record line could not be parsed."""

    def __init__(self, line_no: int, reason: str):
        self.line_no = line_no
        self.reason = reason
        super().__init__(f"line {line_no}: {reason}")
