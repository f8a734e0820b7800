"""Exception hierarchy. Each class carries the CLI exit code it maps to."""


class DreamError(Exception):
    exit_code = 1


class ConfigError(DreamError, ValueError):
    """Bad hyperparameter, unknown variant, malformed config file."""

    exit_code = 2


class DataError(DreamError, ValueError):
    """Input graph or label data violates a structural requirement."""

    exit_code = 3


class EmptyGraphError(DataError):
    pass


class NumericError(DreamError, ArithmeticError):
    """Non-finite values in a forward pass, gradient, or loss."""

    exit_code = 4


class InvariantError(DreamError, RuntimeError):
    exit_code = 4
