"""Exception hierarchy shared across the framework."""

from __future__ import annotations


class AgentPlantError(Exception):
    """Base class for all errors raised by this package."""


class ConfigError(AgentPlantError):
    """A configuration document failed validation.

    ``path`` points at the offending element, e.g. ``modules[0].tracks[1].sensors[2].position``.
    """

    def __init__(self, path: str, message: str):
        self.path = path
        self.message = message
        super().__init__(f"{path}: {message}")


class SimError(AgentPlantError):
    """Base class for simulator-level failures. ``cause`` is a stable machine-readable tag."""

    cause = "sim_error"


class UnknownFunctionError(SimError):
    cause = "unknown_function"


class ArityMismatchError(SimError):
    cause = "arity_mismatch"


class BadArgumentError(SimError):
    cause = "bad_argument"


class DeviceBusyError(SimError):
    cause = "device_busy"


class InvalidStateError(SimError):
    """Operation is well-formed but impossible in the current plant state."""

    cause = "invalid_state"


class DisturbanceError(SimError):
    cause = "bad_disturbance"


class OutputParseError(AgentPlantError):
    """Base class for agent-output rejections; ``cause`` feeds the rejection event text."""

    cause = "rejected"


class MalformedOutputError(OutputParseError):
    cause = "malformed output"


class BadCommandSyntaxError(OutputParseError):
    cause = "bad command syntax"


class BackendError(AgentPlantError):
    """An LLM backend failed to produce a completion."""


class DatasetError(AgentPlantError):
    """Dataset file or content violates the dataset schema."""


class RecordingError(AgentPlantError):
    """Recording attempted in a configuration that cannot yield human-provenance commands."""
