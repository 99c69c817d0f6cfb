"""Exception types shared across the package.

The CLI maps these onto exit codes: ConfigError -> 1, DataError -> 2,
NumericError (and anything else) -> 3.
"""


class ConfigError(Exception):
    """Invalid or inconsistent configuration / usage."""


class DataError(Exception):
    """Malformed or contract-violating input data."""


class NumericError(Exception):
    """Non-finite values or other numeric failures at runtime."""
