"""Exception types shared across the package."""


class ConfigError(ValueError):
    """A scenario configuration failed validation; message names the key."""


class NumericalError(RuntimeError):
    """A computation blew up or an iteration failed to converge.

    Carries enough context (mode, step, change history) to diagnose the
    failing run without rerunning it.
    """

    def __init__(self, message, history=None):
        super().__init__(message)
        self.history = list(history) if history is not None else None


class InvariantViolation(RuntimeError):
    """A structural property that must hold numerically was violated."""
