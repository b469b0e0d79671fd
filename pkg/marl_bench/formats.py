"""
Plain-text encodings shared by the CSV and key-value outputs.

Floats are written with repr() so every file round-trips exactly and repeated
runs produce identical bytes.
"""

import math
from typing import Dict, Iterable, Mapping, Tuple


def format_float(value: float) -> str:
    """Render a float exactly (repr), with a stable spelling for nan/inf."""
    value = float(value)
    if math.isnan(value):
        return "nan"
    if math.isinf(value):
        return "inf" if value > 0 else "-inf"
    return repr(value)


def format_value(value) -> str:
    if isinstance(value, bool):
        return "true" if value else "false"
    if value is None:
        return "none"
    if isinstance(value, float):
        return format_float(value)
    if isinstance(value, (list, tuple)):
        return " ".join(format_value(item) for item in value)
    return str(value)


def keyvalue_block(items: Iterable[Tuple[str, object]]) -> str:
    """Render (key, value) pairs as a `key: value` text block."""
    return "".join(f"{key}: {format_value(value)}\n" for key, value in items)


def parse_keyvalue_block(text: str) -> Dict[str, str]:
    """Parse a block written by keyvalue_block; values stay strings."""
    result = {}
    for line in text.splitlines():
        if not line.strip():
            continue
        key, _sep, value = line.partition(":")
        result[key.strip()] = value.strip()
    return result


def canonical_line(items: Mapping[str, object]) -> str:
    """One-line `key=value` rendering with keys in the given order."""
    return " ".join(f"{key}={format_value(value)}" for key, value in items.items())
