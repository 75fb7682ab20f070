"""Exception types shared across the package."""


class ImbStreamError(Exception):
    """Base class; ``kind`` is used for the CLI's machine-readable error line."""

    kind = "error"


class ConfigError(ImbStreamError, ValueError):
    kind = "config"


class EmptyStateError(ImbStreamError, RuntimeError):
    kind = "empty-state"


class InputError(ImbStreamError, ValueError):
    kind = "input"


class DatasetIOError(ImbStreamError, OSError):
    kind = "io"


class RunFailedError(ImbStreamError, RuntimeError):
    """One run of an experiment matrix failed; the message names the run."""

    kind = "run"
