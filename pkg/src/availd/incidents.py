"""ITIL incident lifecycle: state machine, lifecycle timestamps, audit trail.

Incidents are immutable values; every operation returns a new incident
with an audit entry appended. Replaying the audit trail from the opening
entry reconstructs the incident exactly.
"""
from __future__ import annotations

from dataclasses import dataclass, replace
from datetime import datetime
from enum import Enum
from typing import Any, Iterable, Mapping, Sequence

from .errors import StateMachineError, ValidationError
from .metrics import TimeInterval
from .timeutil import ensure_utc, parse_rfc3339, to_rfc3339


class Severity(str, Enum):
    SEV1 = "Sev1"
    SEV2 = "Sev2"
    SEV3 = "Sev3"
    SEV4 = "Sev4"


class IncidentState(str, Enum):
    NEW = "New"
    CLASSIFIED = "Classified"
    IN_PROGRESS = "InProgress"
    RESOLVED = "Resolved"
    CLOSED = "Closed"


class IncidentSource(str, Enum):
    ALERT = "alert"
    MANUAL = "manual"


DEFAULT_SIGNIFICANT = frozenset({Severity.SEV1, Severity.SEV2})

# Lifecycle timestamps in their required chronological order.
LIFECYCLE_FIELDS = (
    "occurred_at",
    "detected_at",
    "diagnosed_at",
    "repaired_at",
    "recovered_at",
    "restored_at",
)

# Incident fields that may be updated through transition(...) fields.
_EDITABLE_FIELDS = LIFECYCLE_FIELDS + ("severity", "causes_outage", "product_ids")


@dataclass(frozen=True)
class AuditEntry:
    at: datetime
    actor: str
    event: str
    details: tuple[tuple[str, Any], ...] = ()

    def detail_dict(self) -> dict:
        return dict(self.details)


@dataclass(frozen=True)
class TransitionRule:
    from_state: IncidentState
    to_state: IncidentState
    # Lifecycle fields that must be present after the transition when the
    # incident causes an outage.
    required_outage_fields: tuple[str, ...] = ()

    @property
    def name(self) -> str:
        return f"{self.from_state.value}->{self.to_state.value}"


TRANSITION_TABLE = (
    TransitionRule(IncidentState.NEW, IncidentState.CLASSIFIED),
    TransitionRule(IncidentState.CLASSIFIED, IncidentState.IN_PROGRESS),
    TransitionRule(
        IncidentState.IN_PROGRESS,
        IncidentState.RESOLVED,
        required_outage_fields=("repaired_at", "recovered_at", "restored_at"),
    ),
    TransitionRule(IncidentState.RESOLVED, IncidentState.CLOSED),
    # Reopen paths; operationally necessary, fully audited.
    TransitionRule(IncidentState.RESOLVED, IncidentState.IN_PROGRESS),
    TransitionRule(IncidentState.CLOSED, IncidentState.IN_PROGRESS),
)


def find_rule(
    from_state: IncidentState, to_state: IncidentState
) -> TransitionRule | None:
    for rule in TRANSITION_TABLE:
        if rule.from_state == from_state and rule.to_state == to_state:
            return rule
    return None


@dataclass(frozen=True)
class Incident:
    id: str
    product_ids: tuple[str, ...]
    severity: Severity
    state: IncidentState
    causes_outage: bool
    source: IncidentSource
    title: str
    description: str
    occurred_at: datetime | None = None
    detected_at: datetime | None = None
    diagnosed_at: datetime | None = None
    repaired_at: datetime | None = None
    recovered_at: datetime | None = None
    restored_at: datetime | None = None
    audit_trail: tuple[AuditEntry, ...] = ()

    def lifecycle_values(self) -> list[tuple[str, datetime]]:
        present = []
        for field in LIFECYCLE_FIELDS:
            value = getattr(self, field)
            if value is not None:
                present.append((field, value))
        return present


@dataclass(frozen=True)
class OutageRecordDraft:
    """Workflow emission: seed facts for an availability record."""

    incident_id: str
    product_ids: tuple[str, ...]
    outage: TimeInterval


def _check_lifecycle_order(incident: Incident) -> None:
    present = incident.lifecycle_values()
    for (earlier_name, earlier), (later_name, later) in zip(present, present[1:]):
        if later < earlier:
            raise ValidationError(
                f"lifecycle timestamps out of order: {later_name} "
                f"({later.isoformat()}) precedes {earlier_name} "
                f"({earlier.isoformat()})"
            )


def _audit(at: datetime, actor: str, event: str, details: Mapping[str, Any]) -> AuditEntry:
    return AuditEntry(
        at=ensure_utc(at),
        actor=actor,
        event=event,
        details=tuple(sorted(details.items())),
    )


def open_incident(
    incident_id: str,
    product_ids: Sequence[str],
    severity: Severity,
    title: str,
    now: datetime,
    actor: str,
    description: str = "",
    source: IncidentSource = IncidentSource.MANUAL,
    causes_outage: bool = False,
    occurred_at: datetime | None = None,
) -> Incident:
    """Detection and recording: a New incident with detected_at = now.

    occurred_at defaults to detected_at; a failure may predate detection
    but detection never predates the failure.
    """
    if not product_ids:
        raise ValidationError("incident must name at least one product")
    if not title or not title.strip():
        raise ValidationError("incident title must not be empty")
    detected = ensure_utc(now)
    occurred = ensure_utc(occurred_at) if occurred_at is not None else detected
    if occurred > detected:
        raise ValidationError("occurred_at must not follow detected_at")
    incident = Incident(
        id=incident_id,
        product_ids=tuple(product_ids),
        severity=Severity(severity),
        state=IncidentState.NEW,
        causes_outage=bool(causes_outage),
        source=IncidentSource(source),
        title=title,
        description=description,
        occurred_at=occurred,
        detected_at=detected,
        audit_trail=(
            _audit(
                detected,
                actor,
                "opened",
                {
                    "id": incident_id,
                    "product_ids": list(product_ids),
                    "severity": Severity(severity).value,
                    "title": title,
                    "description": description,
                    "source": IncidentSource(source).value,
                    "causes_outage": bool(causes_outage),
                    "occurred_at": to_rfc3339(occurred),
                },
            ),
        ),
    )
    _check_lifecycle_order(incident)
    return incident


def transition(
    incident: Incident,
    to_state: IncidentState,
    fields: Mapping[str, Any] | None,
    actor: str,
    now: datetime,
) -> Incident:
    """Move the incident along the transition table, applying field edits.

    ``fields`` may set lifecycle timestamps, severity, causes_outage, and
    (before closure) the product list. Illegal transitions name the
    violated rule; timestamp ordering violations are validation errors.
    """
    to_state = IncidentState(to_state)
    rule = find_rule(incident.state, to_state)
    if rule is None:
        raise StateMachineError(
            f"incident {incident.id}: no transition "
            f"{incident.state.value}->{to_state.value}",
            rule=f"{incident.state.value}->{to_state.value} not in transition table",
        )
    updates = _coerce_fields(fields or {})
    if "product_ids" in updates and to_state == IncidentState.CLOSED:
        raise ValidationError("product list may not change at closure")
    candidate = replace(incident, state=to_state, **updates)
    _check_lifecycle_order(candidate)
    if candidate.causes_outage:
        missing = [
            name
            for name in rule.required_outage_fields
            if getattr(candidate, name) is None
        ]
        if missing:
            raise ValidationError(
                f"transition {rule.name} requires {', '.join(missing)} "
                "for outage incidents"
            )
    if to_state == IncidentState.CLOSED and candidate.causes_outage:
        if candidate.restored_at is None:
            raise ValidationError("closing an outage incident requires restored_at")
    details: dict[str, Any] = {"to_state": to_state.value}
    if fields:
        details["fields"] = {k: _encode_field(k, v) for k, v in fields.items()}
    entry = _audit(now, actor, "transitioned", details)
    return replace(candidate, audit_trail=incident.audit_trail + (entry,))


def close_incident(
    incident: Incident,
    actor: str,
    now: datetime,
    significant: frozenset[Severity] = DEFAULT_SIGNIFICANT,
) -> tuple[Incident, OutageRecordDraft | None, bool]:
    """Close a Resolved incident and report its workflow emissions.

    Returns (closed incident, outage-record draft or None, problem-ticket
    trigger flag). High-severity outage incidents seed an availability
    record; any significant incident triggers root-cause analysis. The
    caller is responsible for per-incident-id idempotency of both.
    """
    if incident.state != IncidentState.RESOLVED:
        raise StateMachineError(
            f"incident {incident.id}: close requires Resolved, is "
            f"{incident.state.value}",
            rule="close requires state Resolved",
        )
    closed = transition(incident, IncidentState.CLOSED, None, actor, now)
    draft = None
    if closed.causes_outage and closed.severity in significant:
        draft = OutageRecordDraft(
            incident_id=closed.id,
            product_ids=closed.product_ids,
            outage=TimeInterval(closed.occurred_at, closed.restored_at),
        )
    problem_trigger = closed.severity in significant
    return closed, draft, problem_trigger


def attach_alert(
    incident: Incident,
    monitor_id: str,
    fired_at: datetime,
    value: float,
    actor: str = "monitor",
) -> Incident:
    """Record a deduplicated monitor firing on an open incident."""
    if incident.state == IncidentState.CLOSED:
        raise StateMachineError(
            f"incident {incident.id} is closed",
            rule="alerts attach to open incidents only",
        )
    entry = _audit(
        fired_at,
        actor,
        "alert_attached",
        {"monitor_id": monitor_id, "fired_at": to_rfc3339(fired_at), "value": value},
    )
    return replace(incident, audit_trail=incident.audit_trail + (entry,))


def replay_audit(trail: Sequence[AuditEntry]) -> Incident:
    """Rebuild an incident by replaying its audit trail from the start."""
    if not trail or trail[0].event != "opened":
        raise ValidationError("audit trail must start with an 'opened' entry")
    first = trail[0].detail_dict()
    incident = open_incident(
        incident_id=first["id"],
        product_ids=tuple(first["product_ids"]),
        severity=Severity(first["severity"]),
        title=first["title"],
        now=trail[0].at,
        actor=trail[0].actor,
        description=first["description"],
        source=IncidentSource(first["source"]),
        causes_outage=first["causes_outage"],
        occurred_at=parse_rfc3339(first["occurred_at"]),
    )
    for entry in trail[1:]:
        details = entry.detail_dict()
        if entry.event == "transitioned":
            incident = transition(
                incident,
                IncidentState(details["to_state"]),
                details.get("fields"),
                entry.actor,
                entry.at,
            )
        elif entry.event == "alert_attached":
            incident = attach_alert(
                incident,
                details["monitor_id"],
                parse_rfc3339(details["fired_at"]),
                details["value"],
                actor=entry.actor,
            )
        else:
            raise ValidationError(f"unknown audit event: {entry.event}")
    return incident


def _coerce_fields(fields: Mapping[str, Any]) -> dict[str, Any]:
    updates: dict[str, Any] = {}
    for key, value in fields.items():
        if key not in _EDITABLE_FIELDS:
            raise ValidationError(f"field not editable on transition: {key}")
        if key in LIFECYCLE_FIELDS:
            updates[key] = parse_rfc3339(value) if isinstance(value, str) else ensure_utc(value)
        elif key == "severity":
            updates[key] = Severity(value)
        elif key == "causes_outage":
            if not isinstance(value, bool):
                raise ValidationError("causes_outage must be a boolean")
            updates[key] = value
        elif key == "product_ids":
            if not value:
                raise ValidationError("product list must not be empty")
            updates[key] = tuple(value)
    return updates


def _encode_field(key: str, value: Any) -> Any:
    if key in LIFECYCLE_FIELDS and isinstance(value, datetime):
        return to_rfc3339(value)
    if isinstance(value, Enum):
        return value.value
    if isinstance(value, (list, tuple)):
        return list(value)
    return value


@dataclass(frozen=True)
class IncidentStatistics:
    total: int
    by_severity: dict[str, int]
    by_source: dict[str, int]
    by_product: dict[str, int]
    outage_durations_minutes: list[float]
    mean_duration_minutes: float | None


def incident_statistics(
    incidents: Iterable[Incident], period: TimeInterval
) -> IncidentStatistics:
    """Volumes and outage durations for incidents detected within the period."""
    in_period = [
        inc
        for inc in incidents
        if inc.detected_at is not None and period.contains(inc.detected_at)
    ]
    by_severity: dict[str, int] = {}
    by_source: dict[str, int] = {}
    by_product: dict[str, int] = {}
    durations: list[float] = []
    for inc in in_period:
        by_severity[inc.severity.value] = by_severity.get(inc.severity.value, 0) + 1
        by_source[inc.source.value] = by_source.get(inc.source.value, 0) + 1
        for product in inc.product_ids:
            by_product[product] = by_product.get(product, 0) + 1
        if inc.causes_outage and inc.occurred_at and inc.restored_at:
            durations.append((inc.restored_at - inc.occurred_at).total_seconds() / 60.0)
    return IncidentStatistics(
        total=len(in_period),
        by_severity=by_severity,
        by_source=by_source,
        by_product=by_product,
        outage_durations_minutes=durations,
        mean_duration_minutes=sum(durations) / len(durations) if durations else None,
    )
