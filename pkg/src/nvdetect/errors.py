"""Exception types shared across the package."""


class PreconditionError(ValueError):
    """An operation was called outside its contract (bad shape, invalid regime)."""


class NumericalInvariantError(RuntimeError):
    """A self-check failed: positivity breach, trace drift, or formula mismatch."""


class ConfigError(ValueError):
    """A run configuration file is malformed; the message carries the key path."""
