"""Shared exception types."""


class ConfigError(ValueError):
    """Raised for invalid run configuration (maps to CLI exit code 2)."""
