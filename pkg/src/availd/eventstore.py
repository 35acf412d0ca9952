"""Append-only event log.

Every state change in the service is a fact event appended here before it
is applied, so the current state is always replay(log) by construction.
The on-disk format is NDJSON: one JSON object per line with a contiguous
1-based ``seq``, ``at`` (RFC 3339 UTC), ``actor``, ``kind``, and a
``payload`` object. Appends are flushed and fsynced before the command
that caused them returns.

Recovery rules: a truncated final line (interrupted write) is cut off and
reported; a malformed line or a sequence gap anywhere else is corruption
and replay refuses to continue past it.
"""
from __future__ import annotations

import io
import json
import logging
import os
from dataclasses import dataclass
from datetime import datetime
from pathlib import Path
from typing import Callable, Iterable, Iterator

from .errors import AppendError, ReplayError, ValidationError
from .timeutil import ensure_utc, parse_rfc3339, to_rfc3339

log = logging.getLogger(__name__)


SCHEMA_VERSION = 1


@dataclass(frozen=True)
class StoredEvent:
    seq: int
    at: datetime
    actor: str
    kind: str
    entity_id: str
    payload: dict
    schema_version: int = SCHEMA_VERSION

    def to_json(self) -> str:
        record = {
            "seq": self.seq,
            "at": to_rfc3339(self.at),
            "actor": self.actor,
            "kind": self.kind,
            "entity_id": self.entity_id,
            "payload": self.payload,
            "schema_version": self.schema_version,
        }
        return json.dumps(record, sort_keys=True, separators=(",", ":"))


def _parse_line(line: str, seq_expected: int, line_no: int) -> StoredEvent:
    try:
        record = json.loads(line)
    except json.JSONDecodeError as exc:
        raise ReplayError(
            f"line {line_no}: malformed event record: {exc.msg}",
            seq=seq_expected,
        ) from exc
    if not isinstance(record, dict):
        raise ReplayError(f"line {line_no}: event is not an object", seq=seq_expected)
    missing = [
        k
        for k in ("seq", "at", "actor", "kind", "entity_id", "payload")
        if k not in record
    ]
    if missing:
        raise ReplayError(
            f"line {line_no}: missing fields: {', '.join(missing)}",
            seq=seq_expected,
        )
    seq = record["seq"]
    if seq != seq_expected:
        raise ReplayError(
            f"line {line_no}: expected seq {seq_expected}, found {seq}",
            seq=seq_expected,
        )
    try:
        at = parse_rfc3339(record["at"])
    except ValidationError as exc:
        raise ReplayError(f"line {line_no}: {exc}", seq=seq_expected) from exc
    if not isinstance(record["payload"], dict):
        raise ReplayError(f"line {line_no}: payload is not an object", seq=seq_expected)
    return StoredEvent(
        seq=seq,
        at=at,
        actor=str(record["actor"]),
        kind=str(record["kind"]),
        entity_id=str(record["entity_id"]),
        payload=record["payload"],
        schema_version=int(record.get("schema_version", SCHEMA_VERSION)),
    )


class EventLog:
    """NDJSON-backed event log. ``path=None`` keeps everything in memory,
    which tests use to exercise the same code path without a filesystem."""

    def __init__(self, path: Path | str | None):
        self._path = Path(path) if path is not None else None
        self._events: list[StoredEvent] = []
        self._handle: io.TextIOWrapper | None = None
        if self._path is not None:
            self._load()
            self._handle = open(self._path, "a", encoding="utf-8")

    def _load(self) -> None:
        assert self._path is not None
        if not self._path.exists():
            self._path.parent.mkdir(parents=True, exist_ok=True)
            self._path.touch()
            return
        raw = self._path.read_text(encoding="utf-8")
        if raw and not raw.endswith("\n"):
            # Interrupted append: drop the partial tail line and persist the
            # truncation so the next writer starts from a clean boundary.
            keep, _, partial = raw.rpartition("\n")
            log.warning(
                "event log %s: dropping truncated tail (%d bytes)",
                self._path,
                len(partial),
            )
            raw = keep + "\n" if keep else ""
            self._path.write_text(raw, encoding="utf-8")
        for line_no, line in enumerate(raw.splitlines(), start=1):
            if not line.strip():
                raise ReplayError(
                    f"line {line_no}: blank line inside event log",
                    seq=len(self._events) + 1,
                )
            event = _parse_line(line, len(self._events) + 1, line_no)
            self._events.append(event)

    @property
    def last_seq(self) -> int:
        return self._events[-1].seq if self._events else 0

    def __len__(self) -> int:
        return len(self._events)

    def __iter__(self) -> Iterator[StoredEvent]:
        return iter(self._events)

    def events(self, since: int = 0) -> list[StoredEvent]:
        """Events with seq > since, in order."""
        if since <= 0:
            return list(self._events)
        return [event for event in self._events if event.seq > since]

    def append(
        self, at: datetime, actor: str, kind: str, entity_id: str, payload: dict
    ) -> StoredEvent:
        event = StoredEvent(
            seq=self.last_seq + 1,
            at=ensure_utc(at),
            actor=actor,
            kind=kind,
            entity_id=entity_id,
            payload=payload,
        )
        line = event.to_json()
        if self._handle is not None:
            try:
                self._handle.write(line + "\n")
                self._handle.flush()
                os.fsync(self._handle.fileno())
            except OSError as exc:
                raise AppendError(f"cannot append to event log: {exc}") from exc
        self._events.append(event)
        return event

    def close(self) -> None:
        if self._handle is not None:
            self._handle.close()
            self._handle = None

    # -- portability ----------------------------------------------------

    def export_events(self, since: int = 0) -> str:
        """NDJSON text of events with seq > since."""
        lines = [event.to_json() for event in self.events(since)]
        return "\n".join(lines) + ("\n" if lines else "")

    def import_events(self, text: str) -> tuple[int, int]:
        """Merge an exported stream. Returns (appended, skipped).

        Events at sequences we already hold must match ours exactly (they
        are skipped); the first new event must continue our sequence, and
        the stream itself must be contiguous. Anything else is a conflict.
        """
        incoming = []
        for line_no, line in enumerate(text.splitlines(), start=1):
            if not line.strip():
                continue
            expected = (incoming[-1].seq + 1) if incoming else None
            event = _parse_line(line, expected if expected is not None else _peek_seq(line, line_no), line_no)
            incoming.append(event)
        appended = 0
        skipped = 0
        for event in incoming:
            if event.seq <= self.last_seq:
                ours = self._events[event.seq - 1]
                if ours.to_json() != event.to_json():
                    raise ReplayError(
                        f"import conflicts with existing event {event.seq}",
                        seq=event.seq,
                    )
                skipped += 1
                continue
            if event.seq != self.last_seq + 1:
                raise ReplayError(
                    f"import leaves a gap: have {self.last_seq}, next import "
                    f"event is {event.seq}",
                    seq=self.last_seq + 1,
                )
            self.append(event.at, event.actor, event.kind, event.entity_id, event.payload)
            appended += 1
        return appended, skipped


def _peek_seq(line: str, line_no: int) -> int:
    """First event of an import stream sets its own starting seq."""
    try:
        record = json.loads(line)
        return int(record["seq"])
    except (json.JSONDecodeError, KeyError, TypeError, ValueError):
        raise ReplayError(f"line {line_no}: malformed event record", seq=0) from None


def replay(events: Iterable[StoredEvent], apply: Callable[[object, StoredEvent], object], initial: object) -> object:
    """Fold ``apply`` over events starting from ``initial``."""
    state = initial
    for event in events:
        state = apply(state, event)
    return state
