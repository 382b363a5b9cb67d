"""Shared formatting for file exports: fixed format, byte-stable output."""

from __future__ import annotations


def fmt(value: float | None) -> str:
    """Render a float for a table cell; missing values print as nan."""
    return "nan" if value is None else f"{value:.10e}"
