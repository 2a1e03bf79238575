"""Exception hierarchy shared across the toolkit.

Every error raised on a user-facing path derives from PipelineError so the
CLI can map it to an exit code: MissingInputError -> 2, ValidationError and
its subclasses -> 3, ConfigError -> 4.
"""


class PipelineError(Exception):
    """Base class for all toolkit errors."""


class ValidationError(PipelineError):
    """A value violates a documented invariant (names the offending field)."""


class FormatError(ValidationError):
    """A serialized artifact is structurally broken (bad magic, truncation)."""


class InfeasibleAlignmentError(ValidationError):
    """The target sequence cannot fit into the available frames."""


class ConfigError(PipelineError):
    """Configuration is missing or inconsistent."""


class MissingInputError(PipelineError):
    """A prerequisite file for a pipeline stage does not exist."""


class TransportError(PipelineError):
    """An external service could not be reached after retries."""


class ProtocolError(PipelineError):
    """An external service answered with an unparseable payload."""

    def __init__(self, message: str, raw: str = ""):
        super().__init__(message)
        self.raw = raw
