"""Shared exception types."""


class RejectedInput(ValueError):
    """An argument violates a documented precondition."""


class UnsupportedOperation(RuntimeError):
    """The operation is not defined for this objective family."""
