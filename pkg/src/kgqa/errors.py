"""Exception types shared across the package."""


class KgqaError(Exception):
    """Base class for package errors."""


class LoadError(KgqaError):
    """A fixture, dataset, or script file could not be parsed."""


class TransportError(KgqaError):
    """A remote backend could not be reached or kept failing."""


class ScoringError(KgqaError):
    """A scorer backend returned unusable values."""


class TemplateError(KgqaError):
    """A prompt template could not be rendered."""


class ReplyParseError(KgqaError):
    """An LLM reply could not be parsed, even after the allowed re-ask."""

    def __init__(self, message: str, raw_text: str = ""):
        super().__init__(message)
        self.raw_text = raw_text


class MockMissError(KgqaError):
    """The mock LLM has no scripted reply for a prompt hash."""
