"""Length parsing at the user boundary; everything inside is SI meters."""

from __future__ import annotations

import math
import re

from .errors import ConfigError

_LENGTH = re.compile(r"^\s*([-+]?(?:\d+\.?\d*|\.\d+)(?:[eE][-+]?\d+)?)\s*(m|km)?\s*$")


def parse_length(value) -> float:
    """Meters from a number (meters) or a string with an optional m/km suffix."""
    if isinstance(value, bool):
        raise ConfigError(f"not a length: {value!r}")
    if isinstance(value, (int, float)):
        out = float(value)
    elif isinstance(value, str):
        m = _LENGTH.match(value)
        if not m:
            raise ConfigError(f"cannot parse length {value!r}; use a number with optional m or km suffix")
        out = float(m.group(1)) * (1000.0 if m.group(2) == "km" else 1.0)
    else:
        raise ConfigError(f"not a length: {value!r}")
    if not math.isfinite(out):
        raise ConfigError(f"length must be finite, got {value!r}")
    return out


def parse_nonneg_length(value) -> float:
    out = parse_length(value)
    if out < 0:
        raise ConfigError(f"length must be >= 0, got {value!r}")
    return out
