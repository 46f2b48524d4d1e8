"""Messaging layer exceptions."""

from __future__ import annotations


class SchemaError(ValueError):
    """Invalid schema definition or declaration text."""


class SerializationError(ValueError):
    """Value does not conform to its schema field."""


class FramingError(ValueError):
    """Truncated, oversized, or trailing bytes in a payload or frame."""


class ProtocolError(ValueError):
    """Bad magic, version, or malformed control traffic."""


class TypeMismatchError(ValueError):
    """Schema hash in the header does not match the expected schema."""

    def __init__(self, expected_hash: int, actual_hash: int):
        super().__init__(
            f"schema hash mismatch: expected 0x{expected_hash:016x}, got 0x{actual_hash:016x}"
        )
        self.expected_hash = expected_hash
        self.actual_hash = actual_hash
