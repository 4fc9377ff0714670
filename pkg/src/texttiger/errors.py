"""Exception types shared across the toolchain."""


class TextTigerError(Exception):
    """Base class for all toolchain errors."""


class ParseError(TextTigerError):
    """A source file or record could not be parsed."""

    def __init__(self, message, line=None):
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)
        self.line = line


class VersionError(TextTigerError):
    """A persisted file declares an unsupported format version."""


class FetchError(TextTigerError):
    """An HTTP fetch failed."""

    def __init__(self, message, status=None):
        super().__init__(message)
        self.status = status


class NotFound(FetchError):
    """The requested article does not exist."""


class EmptyDescription(FetchError):
    """The article exists but its extract is empty."""


class EmptyDataset(TextTigerError):
    """No valid instances survived dataset construction."""


class MissingTokenCount(TextTigerError):
    """A length-aware prompt was requested without the current token count."""


class MissingDescription(TextTigerError):
    """A prompt method that needs a description was given none."""


class MalformedSummary(TextTigerError):
    """Model output lacks the required end marker."""


class SummaryError(TextTigerError):
    """Every summarization round produced malformed output."""

    def __init__(self, message, raw_outputs=()):
        super().__init__(message)
        self.raw_outputs = list(raw_outputs)


class LlmError(TextTigerError):
    """The completion service returned a failure."""

    def __init__(self, message, status=None):
        super().__init__(message)
        self.status = status


class LlmTimeout(LlmError):
    """The completion service timed out."""


class GenError(TextTigerError):
    """The image-generation backend returned a failure."""

    def __init__(self, message, status=None):
        super().__init__(message)
        self.status = status


class GenTimeout(GenError):
    """The image-generation backend timed out."""


class InvalidDistribution(TextTigerError):
    """A label-distribution row is not a probability distribution."""

    def __init__(self, message, row=None):
        super().__init__(message)
        self.row = row


class InsufficientSamples(TextTigerError):
    """Too few samples to estimate the statistic."""


class DimensionError(TextTigerError):
    """Operands have incompatible shapes."""


class NumericError(TextTigerError):
    """Non-finite values reached a numeric routine."""


class ZeroVector(TextTigerError):
    """Cosine similarity is undefined for zero-norm vectors."""


class EmptyAudit(TextTigerError):
    """No prompts were supplied to audit."""
