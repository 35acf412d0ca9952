"""UTC timestamp helpers.

All timestamps in the system are timezone-aware UTC at whole-second
resolution; RFC3339 is the wire format.
"""
from __future__ import annotations

from datetime import datetime, timedelta, timezone

from .errors import ValidationError

UTC = timezone.utc


def ensure_utc(value: datetime) -> datetime:
    """Normalize a datetime to aware UTC, truncated to whole seconds."""
    if not isinstance(value, datetime):
        raise ValidationError(f"expected datetime, got {type(value).__name__}")
    if value.tzinfo is None:
        raise ValidationError(f"naive datetime not allowed: {value.isoformat()}")
    value = value.astimezone(UTC)
    return value.replace(microsecond=0)


def parse_rfc3339(text: str) -> datetime:
    """Parse an RFC3339 timestamp ('2025-03-10T04:00:00Z') into aware UTC."""
    if not isinstance(text, str) or not text:
        raise ValidationError(f"invalid timestamp: {text!r}")
    raw = text.strip()
    if raw.endswith(("Z", "z")):
        raw = raw[:-1] + "+00:00"
    try:
        value = datetime.fromisoformat(raw)
    except ValueError:
        raise ValidationError(f"invalid RFC3339 timestamp: {text!r}") from None
    if value.tzinfo is None:
        raise ValidationError(f"timestamp missing UTC offset: {text!r}")
    return ensure_utc(value)


def to_rfc3339(value: datetime) -> str:
    """Format an aware datetime as RFC3339 with a Z suffix."""
    return ensure_utc(value).strftime("%Y-%m-%dT%H:%M:%SZ")


def parse_day_offset(text: str) -> int:
    """Parse 'HH:MM' or 'HH:MM:SS' into seconds from midnight; '24:00' allowed."""
    parts = text.split(":")
    if len(parts) not in (2, 3) or not all(p.isdigit() for p in parts):
        raise ValidationError(f"invalid time of day: {text!r}")
    hours, minutes = int(parts[0]), int(parts[1])
    seconds = int(parts[2]) if len(parts) == 3 else 0
    offset = hours * 3600 + minutes * 60 + seconds
    if minutes > 59 or seconds > 59 or offset > 86400:
        raise ValidationError(f"time of day out of range: {text!r}")
    return offset


def minutes(value: float) -> timedelta:
    return timedelta(minutes=value)
