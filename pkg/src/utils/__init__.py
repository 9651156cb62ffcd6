"""Constants, exceptions and file helpers."""
