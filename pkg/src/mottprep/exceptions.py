"""Shared exception types."""


class ContractError(ValueError):
    """An operation was called with arguments violating its contract."""


class CapabilityError(ValueError):
    """A request exceeds a configured capability limit (e.g. vibrational cap)."""


class NumericError(ArithmeticError):
    """A numerical routine failed to reach its required accuracy."""


class ConfigError(ValueError):
    """A run configuration file is malformed or contains unknown keys."""
