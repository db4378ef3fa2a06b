"""Exception hierarchy, kept small and aligned with the CLI exit codes."""


class SolveRankError(Exception):
    """Base class for package errors."""


class DataError(SolveRankError):
    """Invalid or unreadable input data (CLI exit code 2)."""


class ClientError(SolveRankError):
    """Text-completion client failure after retries (CLI exit code 3)."""


class ReplyFormatError(ClientError):
    """A client reply violated the expected format.

    Retryable once by callers; carries the raw reply for diagnosis.
    """

    def __init__(self, message: str, raw_reply: str = ""):
        super().__init__(message)
        self.raw_reply = raw_reply


class RunnerError(SolveRankError):
    """Candidate-program runner misconfiguration (CLI exit code 3)."""
