"""Exception types shared across the toolkit."""


class InvalidParameterError(ValueError):
    """A constructor or operation received an out-of-domain parameter."""


class InvalidStateError(RuntimeError):
    """Stateful processing hit an inconsistency (e.g. frame size change mid-stream)."""
