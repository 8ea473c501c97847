"""Exception hierarchy shared by all modules.

Each class maps to one CLI exit code (see cli.EXIT_CODES): configuration
problems exit 2, infeasible constructions exit 3, violated runtime
invariants exit 4.
"""


class MistakeLabError(Exception):
    """Base class for all library errors."""


class DomainError(MistakeLabError, ValueError):
    """A point is not part of the declared domain."""


class ConfigError(MistakeLabError, ValueError):
    """Invalid configuration value or malformed config/CLI input."""


class SizeError(ConfigError):
    """A configured cap was exceeded; carries the cap value."""

    def __init__(self, message, cap):
        super().__init__(f"{message} (cap={cap})")
        self.cap = cap


class InfeasibleError(MistakeLabError, RuntimeError):
    """The requested construction does not exist at this scale."""


class StateError(MistakeLabError, RuntimeError):
    """Operation invoked on an object in the wrong state."""


class RealizabilityError(StateError):
    """An observed label is inconsistent with every hypothesis."""


class InvariantError(MistakeLabError, RuntimeError):
    """A runtime invariant check failed during a trial."""


class EndOfStream(MistakeLabError, RuntimeError):
    """A deterministic sequence has no further continuation."""
