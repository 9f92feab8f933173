"""Shared exception types."""


class ValidationError(ValueError):
    """Bad input data or configuration; messages name the offending field."""
