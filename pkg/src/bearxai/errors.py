"""Exception hierarchy.

Each exception carries the process exit code the CLI maps it to.
"""


class BearXAIError(Exception):
    exit_code = 1


class UsageError(BearXAIError, ValueError):
    """Bad arguments or configuration."""

    exit_code = 1


class FormatError(BearXAIError):
    """Corrupt, truncated or mismatched data/model/library file."""

    exit_code = 2


class FingerprintMismatch(FormatError):
    """Library was built against a different model."""


class NumericError(BearXAIError, ArithmeticError):
    """Divergence, NaNs, or degenerate (all-zero) activation vectors."""

    exit_code = 3
