"""Exception types shared across the agent runtime.

Action-level failures are surfaced to the planner as observation text, so
every exception here must carry a human-readable message.
"""


class RcaError(Exception):
    """Base class for all errors raised by this package."""


class SandboxViolation(RcaError):
    """A path escaped the workspace root."""


class WorkspaceValidationError(RcaError):
    """The workspace manifest or its mandatory files are invalid."""


class MissingFileError(RcaError):
    """A referenced file or directory does not exist."""


class InvalidRangeError(RcaError):
    """A line range is malformed or exceeds the inspection window."""


class NothingToUndoError(RcaError):
    """Undo was requested for a script with no recorded edits."""


class PerformanceExtractionError(RcaError):
    """The performance pattern matched zero or multiple values."""


class ActionLookupError(RcaError):
    """No registered action matches the requested name."""


class ActionInputError(RcaError):
    """The Action Input block does not satisfy the action's schema."""


class ResponseFormatError(RcaError):
    """A planner response does not follow the six-section format."""


class GatewayError(RcaError):
    """A model call failed after exhausting its retry budget."""


class CassetteError(GatewayError):
    """Cassette replay diverged from the recorded transcript."""


class WorkerError(RcaError):
    """An LLM-backed worker could not produce a usable result."""


class ValidationError(RcaError):
    """An operation received arguments that fail its preconditions."""


class EvaluationError(RcaError):
    """Metric computation received inconsistent inputs."""


class UsageError(RcaError):
    """Command-line arguments or configuration are unusable (exit code 2)."""
