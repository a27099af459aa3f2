"""Shared exception types.

Plain ValueError is used for ordinary bad arguments; the classes here mark
failure modes callers may want to catch specifically.
"""


class ConfigError(ValueError):
    """An experiment configuration file or dict is malformed."""


class PreconditionError(ValueError):
    """A documented precondition of a closed-form expression was violated."""


class InvalidStateError(RuntimeError):
    """Operation is not legal for the current state, e.g. stepping past the horizon."""


class DataExhaustedError(ValueError):
    """A data stream ended before the schedule horizon was reached."""


class NumericalFailureError(ArithmeticError):
    """A numerical sanity check failed (quadrature drift, trace blow-up, ...).

    Carries a diagnostics dict so callers can report what was measured.
    """

    def __init__(self, message: str, **diagnostics):
        super().__init__(message)
        self.diagnostics = dict(diagnostics)

    def __str__(self):
        base = super().__str__()
        if self.diagnostics:
            detail = ", ".join(f"{k}={v!r}" for k, v in sorted(self.diagnostics.items()))
            return f"{base} [{detail}]"
        return base
