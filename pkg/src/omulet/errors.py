"""Exception types shared across the engine."""

from __future__ import annotations


class OmuletError(Exception):
    """Base class for all engine errors."""


class CatalogLoadError(OmuletError):
    """A catalog input file is missing or ill-formed."""


class ValidationError(OmuletError):
    """An argument or data record violates a documented contract."""


class NotFoundError(OmuletError):
    """A referenced item id does not exist in the catalog."""


class IntentParseError(OmuletError):
    """The model output contained no parseable intent object."""

    def __init__(self, message: str, raw_output: str = ""):
        super().__init__(message)
        self.raw_output = raw_output


class PlanError(OmuletError):
    """A tool plan failed to parse or validate."""

    def __init__(self, message: str, line: int | None = None):
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)
        self.line = line


class TransportError(OmuletError):
    """A remote backend could not be reached after retries."""

    def __init__(self, message: str, stage: str | None = None):
        if stage:
            message = f"[{stage}] {message}"
        super().__init__(message)
        self.stage = stage


class ScriptedMissError(OmuletError):
    """A scripted backend had no rule for the prompt."""
