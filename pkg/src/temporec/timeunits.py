"""Duration parsing against a dataset's native time unit.

Timestamps are integers in dataset-native units (days for daily-resolution
data, minutes for minute-resolution data, bare steps for synthetic logs).
Human-readable durations like "1d" or "6h" are converted to native units and
must land on a whole number of them.
"""

from __future__ import annotations

from .errors import ConfigurationError

# minutes per unit; "step" is unitless and admits only bare integers
UNIT_MINUTES = {"minute": 1, "hour": 60, "day": 1440}
_SUFFIXES = {"m": "minute", "h": "hour", "d": "day"}

KNOWN_UNITS = ("step",) + tuple(UNIT_MINUTES)


def parse_duration(text: str | int, time_unit: str) -> int:
    """Resolve a duration such as ``"1d"``, ``"6h"`` or ``20`` to native units.

    Bare integers are taken as already-native. Suffixed values are converted
    via minutes and must divide evenly into the dataset unit.
    """
    if isinstance(text, int):
        value = text
    else:
        text = text.strip()
        if text and text[-1].lower() in _SUFFIXES:
            if time_unit not in UNIT_MINUTES:
                raise ConfigurationError(
                    f"duration {text!r} has a calendar suffix but the dataset "
                    f"time unit is {time_unit!r}; use a bare integer"
                )
            try:
                count = int(text[:-1])
            except ValueError:
                raise ConfigurationError(f"bad duration: {text!r}") from None
            minutes = count * UNIT_MINUTES[_SUFFIXES[text[-1].lower()]]
            unit_minutes = UNIT_MINUTES[time_unit]
            if minutes % unit_minutes:
                raise ConfigurationError(
                    f"duration {text!r} is not a whole number of {time_unit}s"
                )
            value = minutes // unit_minutes
        else:
            try:
                value = int(text)
            except ValueError:
                raise ConfigurationError(f"bad duration: {text!r}") from None
    if value <= 0:
        raise ConfigurationError(f"duration must be positive, got {value}")
    return value
