"""The service store: commands in, fact events out, state by replay.

Every mutation follows the same shape. The command handler validates
against current state and builds one or more fact events; the events are
appended to the log; then the same reducer that powers replay applies
them to the in-memory state. Handlers never touch state directly, so
``replay(log) == live state`` holds by construction after every command.

Workflow emissions ride the same rails: closing a significant outage
incident appends ``record.drafted`` (id ``OR-<incident id>``) and
``problem.spawned`` (id ``PR-<incident id>``) alongside ``incident.closed``.
The derived ids make the at-most-once rules checkable by key lookup, so
duplicate close deliveries are absorbed without a second emission.
"""
from __future__ import annotations

import json
import logging
import re
import threading
from dataclasses import dataclass, field
from datetime import datetime, timezone
from pathlib import Path
from typing import Any, Mapping, Sequence

from . import incidents as inc_mod
from . import problems as prob_mod
from . import records as rec_mod
from .alerts import AlertDecision, AlertDisposition, AlertEvent, decide_alert, violates
from .changes import (
    ChangeCategory,
    ChangeLayer,
    ChangeRequest,
    ChangeState,
    ChecklistItem,
    ChecklistStatus,
    Release,
    daily_review_queue,
    change_incident_correlation,
)
from .changes import (
    approve_change as _approve_change,
    approve_release as _approve_release,
    cancel_release as _cancel_release,
    deploy_release as _deploy_release,
    execute_change as _execute_change,
    new_change,
    new_release,
    reject_change as _reject_change,
    run_prr as _run_prr,
    verify_change as _verify_change,
)
from .config import ProductConfig, ServiceConfig
from .errors import (
    NotFoundError,
    UnknownMonitorError,
    ValidationError,
)
from .eventstore import EventLog, StoredEvent
from .incidents import (
    Incident,
    IncidentSource,
    IncidentState,
    Severity,
)
from .metrics import (
    AvailabilityResult,
    TimeInterval,
    compute_availability,
    evaluate_sla,
    expand_schedule,
)
from .problems import ProblemTicket, RcaDecision, rca_from_dict, rca_to_dict
from .records import OutageRecord, RecordState, ReviewDecision
from .timeutil import ensure_utc, parse_rfc3339, to_rfc3339

log = logging.getLogger(__name__)

_ID_NUMBER = re.compile(r"-(\d+)$")


@dataclass
class MonitorThread:
    """Per-monitor alert thread: the incident it last fed and when."""

    incident_id: str
    last_fired_at: datetime


@dataclass
class ServiceState:
    """Everything replay rebuilds. Mutated only by ``ServiceStore._apply``."""

    incidents: dict[str, Incident] = field(default_factory=dict)
    records: dict[str, OutageRecord] = field(default_factory=dict)
    problems: dict[str, ProblemTicket] = field(default_factory=dict)
    releases: dict[str, Release] = field(default_factory=dict)
    changes: dict[str, ChangeRequest] = field(default_factory=dict)
    alert_counters: dict[str, int] = field(
        default_factory=lambda: {d.value: 0 for d in AlertDisposition}
    )
    monitor_threads: dict[str, MonitorThread] = field(default_factory=dict)
    seen_alerts: dict[tuple[str, str], str] = field(default_factory=dict)
    incident_seq: int = 0
    release_seq: int = 0
    change_seq: int = 0


@dataclass(frozen=True)
class DashboardRow:
    product_id: str
    product_name: str
    sla_target_percent: float
    planned_minutes: float
    downtime_minutes: float
    allowed_downtime_minutes: float
    availability_percent: float | None
    met: bool | None
    note: str | None = None

    def to_dict(self) -> dict:
        return {
            "product_id": self.product_id,
            "product_name": self.product_name,
            "sla_target_percent": self.sla_target_percent,
            "planned_minutes": self.planned_minutes,
            "downtime_minutes": self.downtime_minutes,
            "allowed_downtime_minutes": self.allowed_downtime_minutes,
            "availability_percent": self.availability_percent,
            "met": self.met,
            "note": self.note,
        }


@dataclass(frozen=True)
class DashboardSnapshot:
    generated_at: datetime
    period: TimeInterval
    rows: tuple[DashboardRow, ...]

    def to_dict(self) -> dict:
        return {
            "generated_at": to_rfc3339(self.generated_at),
            "period": {
                "from": to_rfc3339(self.period.start),
                "to": to_rfc3339(self.period.end),
            },
            "rows": [row.to_dict() for row in self.rows],
        }


def _round_minutes(seconds: float) -> float:
    return round(seconds / 60.0, 2)


class ServiceStore:
    """Single-writer facade over the event log and replayed state."""

    def __init__(self, config: ServiceConfig, data_dir: Path | str | None = None):
        self.config = config
        self._lock = threading.RLock()
        self._data_dir = Path(data_dir) if data_dir is not None else None
        log_path = self._data_dir / "events.ndjson" if self._data_dir else None
        self._log = EventLog(log_path)
        self._state = ServiceState()
        for event in self._log:
            self._apply(self._state, event)
        self._dashboard: DashboardSnapshot | None = None
        if self._data_dir is not None:
            self._load_snapshot()

    # -- snapshot cache (fast start; never a correctness dependency) -----

    def _snapshot_path(self) -> Path | None:
        return self._data_dir / "snapshot.json" if self._data_dir else None

    def _load_snapshot(self) -> None:
        path = self._snapshot_path()
        if path is None or not path.exists():
            return
        try:
            data = json.loads(path.read_text(encoding="utf-8"))
            if data.get("last_seq") != self._log.last_seq:
                return  # stale; the next refresh recomputes
            snap = data["dashboard"]
            period = TimeInterval(
                parse_rfc3339(snap["period"]["from"]),
                parse_rfc3339(snap["period"]["to"]),
            )
            rows = tuple(DashboardRow(**row) for row in snap["rows"])
            self._dashboard = DashboardSnapshot(
                generated_at=parse_rfc3339(snap["generated_at"]),
                period=period,
                rows=rows,
            )
        except (KeyError, TypeError, ValueError, ValidationError) as exc:
            log.warning("ignoring unreadable snapshot %s: %s", path, exc)

    def _save_snapshot(self) -> None:
        path = self._snapshot_path()
        if path is None or self._dashboard is None:
            return
        payload = {
            "last_seq": self._log.last_seq,
            "dashboard": self._dashboard.to_dict(),
        }
        tmp = path.with_suffix(".json.tmp")
        tmp.write_text(json.dumps(payload, indent=2), encoding="utf-8")
        tmp.replace(path)

    # -- event plumbing ---------------------------------------------------

    def _emit(
        self, now: datetime, actor: str, kind: str, entity_id: str, payload: dict
    ) -> StoredEvent:
        event = self._log.append(ensure_utc(now), actor, kind, entity_id, payload)
        self._apply(self._state, event)
        return event

    def replayed_state(self) -> ServiceState:
        """A fresh state built from the log alone (the replay-equals-live
        check in tests calls this)."""
        state = ServiceState()
        for event in self._log:
            self._apply(state, event)
        return state

    @property
    def last_seq(self) -> int:
        return self._log.last_seq

    def export_events(self, since: int = 0) -> str:
        return self._log.export_events(since)

    def import_events(self, text: str) -> tuple[int, int]:
        with self._lock:
            before = self._log.last_seq
            appended, skipped = self._log.import_events(text)
            for event in self._log.events(since=before):
                self._apply(self._state, event)
            return appended, skipped

    def close(self) -> None:
        self._log.close()

    # -- the reducer ------------------------------------------------------

    def _apply(self, state: ServiceState, event: StoredEvent) -> None:
        kind = event.kind
        p = event.payload
        if kind == "incident.opened":
            incident = inc_mod.open_incident(
                incident_id=event.entity_id,
                product_ids=tuple(p["product_ids"]),
                severity=Severity(p["severity"]),
                title=p["title"],
                now=event.at,
                actor=event.actor,
                description=p.get("description", ""),
                source=IncidentSource(p.get("source", "manual")),
                causes_outage=bool(p.get("causes_outage", False)),
                occurred_at=parse_rfc3339(p["occurred_at"]) if p.get("occurred_at") else None,
            )
            state.incidents[incident.id] = incident
            match = _ID_NUMBER.search(incident.id)
            if match:
                state.incident_seq = max(state.incident_seq, int(match.group(1)))
        elif kind == "incident.transitioned":
            incident = state.incidents[event.entity_id]
            state.incidents[event.entity_id] = inc_mod.transition(
                incident,
                IncidentState(p["to_state"]),
                p.get("fields"),
                event.actor,
                event.at,
            )
        elif kind == "incident.closed":
            incident = state.incidents[event.entity_id]
            closed, _draft, _trigger = inc_mod.close_incident(
                incident,
                event.actor,
                event.at,
                significant=self.config.significant_severities,
            )
            state.incidents[event.entity_id] = closed
        elif kind == "incident.alert_attached":
            incident = state.incidents[event.entity_id]
            state.incidents[event.entity_id] = inc_mod.attach_alert(
                incident,
                p["monitor_id"],
                parse_rfc3339(p["fired_at"]),
                p["value"],
                actor=event.actor,
            )
        elif kind == "record.drafted":
            record = rec_mod.draft_record(
                record_id=event.entity_id,
                incident_id=p["incident_id"],
                product_ids=tuple(p["product_ids"]),
                outage=TimeInterval(
                    parse_rfc3339(p["outage"]["start"]),
                    parse_rfc3339(p["outage"]["end"]),
                ),
            )
            state.records[record.id] = record
        elif kind == "record.reviewed":
            record = state.records[event.entity_id]
            outage = None
            if p.get("outage"):
                outage = TimeInterval(
                    parse_rfc3339(p["outage"]["start"]),
                    parse_rfc3339(p["outage"]["end"]),
                )
            state.records[event.entity_id] = rec_mod.review_outage(
                record,
                ReviewDecision(p["decision"]),
                reviewer=event.actor,
                now=event.at,
                outage=outage,
                product_ids=tuple(p["product_ids"]) if p.get("product_ids") else None,
                note=p.get("note"),
            )
        elif kind == "problem.spawned":
            incident = state.incidents[p["incident_id"]]
            state.problems[event.entity_id] = prob_mod.spawn_problem(
                problem_id=event.entity_id,
                incident=incident,
                assignee=p["assignee"],
                management_chain=tuple(p.get("management_chain", ())),
                now=event.at,
                sla_days=int(p.get("sla_days", prob_mod.RCA_SLA_DAYS)),
                significant=self.config.significant_severities,
            )
        elif kind == "problem.rca_submitted":
            ticket = state.problems[event.entity_id]
            state.problems[event.entity_id] = prob_mod.submit_rca(
                ticket, rca_from_dict(p["rca"]), event.at
            )
        elif kind == "problem.reviewed":
            ticket = state.problems[event.entity_id]
            state.problems[event.entity_id] = prob_mod.review_rca(
                ticket,
                reviewer=event.actor,
                decision=RcaDecision(p["decision"]),
                note=p.get("note", ""),
                now=event.at,
            )
        elif kind == "release.created":
            release = new_release(
                release_id=event.entity_id,
                name=p["name"],
                pbi_ids=tuple(p.get("pbi_ids", ())),
                target_window=TimeInterval(
                    parse_rfc3339(p["target_window"]["start"]),
                    parse_rfc3339(p["target_window"]["end"]),
                ),
                checklist=[
                    ChecklistItem(
                        key=item["key"],
                        description=item.get("description", ""),
                        mandatory=bool(item.get("mandatory", True)),
                    )
                    for item in p.get("checklist", ())
                ],
                now=event.at,
                actor=event.actor,
            )
            state.releases[release.id] = release
            match = _ID_NUMBER.search(release.id)
            if match:
                state.release_seq = max(state.release_seq, int(match.group(1)))
        elif kind == "release.prr_run":
            release = state.releases[event.entity_id]
            statuses = {
                key: (ChecklistStatus(value["status"]), value.get("note"))
                for key, value in p["statuses"].items()
            }
            state.releases[event.entity_id] = _run_prr(
                release, statuses, event.actor, event.at
            )
        elif kind == "release.approved":
            release = state.releases[event.entity_id]
            state.releases[event.entity_id] = _approve_release(
                release,
                event.actor,
                event.at,
                release_windows=self.config.release_windows,
                freeze_windows=self.config.freeze_windows,
            )
        elif kind == "release.deployed":
            release = state.releases[event.entity_id]
            state.releases[event.entity_id] = _deploy_release(
                release, event.actor, event.at
            )
        elif kind == "release.cancelled":
            release = state.releases[event.entity_id]
            state.releases[event.entity_id] = _cancel_release(
                release, event.actor, event.at
            )
        elif kind == "change.requested":
            change = new_change(
                change_id=event.entity_id,
                description=p["description"],
                category=ChangeCategory(p["category"]),
                now=event.at,
                actor=event.actor,
                release_id=p.get("release_id"),
                product_ids=tuple(p.get("product_ids", ())),
                layer=ChangeLayer(p.get("layer", "in-house")),
                emergency=bool(p.get("emergency", False)),
            )
            state.changes[change.id] = change
            match = _ID_NUMBER.search(change.id)
            if match:
                state.change_seq = max(state.change_seq, int(match.group(1)))
        elif kind == "change.approved":
            change = state.changes[event.entity_id]
            state.changes[event.entity_id] = _approve_change(
                change, event.actor, event.at
            )
        elif kind == "change.rejected":
            change = state.changes[event.entity_id]
            state.changes[event.entity_id] = _reject_change(
                change, event.actor, event.at, note=p.get("note", "")
            )
        elif kind == "change.executed":
            change = state.changes[event.entity_id]
            state.changes[event.entity_id] = _execute_change(
                change, event.actor, event.at
            )
        elif kind == "change.verified":
            change = state.changes[event.entity_id]
            state.changes[event.entity_id] = _verify_change(
                change, event.actor, event.at
            )
        elif kind == "alert.received":
            disposition = p["disposition"]
            state.alert_counters[disposition] = (
                state.alert_counters.get(disposition, 0) + 1
            )
            if disposition in (
                AlertDisposition.CREATED.value,
                AlertDisposition.ATTACHED.value,
            ) and not p.get("duplicate", False):
                fired_at = parse_rfc3339(p["fired_at"])
                state.seen_alerts[(p["monitor_id"], p["fired_at"])] = p["incident_id"]
                state.monitor_threads[p["monitor_id"]] = MonitorThread(
                    incident_id=p["incident_id"], last_fired_at=fired_at
                )
        else:
            raise ValidationError(f"unknown event kind: {kind}")

    # -- lookups ----------------------------------------------------------

    def _product(self, product_id: str) -> ProductConfig:
        product = self.config.product(product_id)
        if product is None:
            raise NotFoundError(f"unknown product: {product_id}")
        return product

    def _validate_products(self, product_ids: Sequence[str]) -> None:
        unknown = [pid for pid in product_ids if self.config.product(pid) is None]
        if unknown:
            raise ValidationError(f"unknown product ids: {', '.join(unknown)}")

    def get_incident(self, incident_id: str) -> Incident:
        with self._lock:
            incident = self._state.incidents.get(incident_id)
            if incident is None:
                raise NotFoundError(f"unknown incident: {incident_id}")
            return incident

    def list_incidents(self, state: IncidentState | None = None) -> list[Incident]:
        with self._lock:
            items = list(self._state.incidents.values())
        if state is not None:
            items = [i for i in items if i.state == state]
        return items

    def get_record(self, record_id: str) -> OutageRecord:
        with self._lock:
            record = self._state.records.get(record_id)
            if record is None:
                raise NotFoundError(f"unknown outage record: {record_id}")
            return record

    def list_records(self, state: RecordState | None = None) -> list[OutageRecord]:
        with self._lock:
            items = list(self._state.records.values())
        if state is not None:
            items = [r for r in items if r.state == state]
        return items

    def get_problem(self, problem_id: str) -> ProblemTicket:
        with self._lock:
            ticket = self._state.problems.get(problem_id)
            if ticket is None:
                raise NotFoundError(f"unknown problem: {problem_id}")
            return ticket

    def list_problems(self, state: str | None = None) -> list[ProblemTicket]:
        with self._lock:
            items = list(self._state.problems.values())
        if state is not None:
            items = [t for t in items if t.state.value == state]
        return items

    def get_release(self, release_id: str) -> Release:
        with self._lock:
            release = self._state.releases.get(release_id)
            if release is None:
                raise NotFoundError(f"unknown release: {release_id}")
            return release

    def list_releases(self) -> list[Release]:
        with self._lock:
            return list(self._state.releases.values())

    def get_change(self, change_id: str) -> ChangeRequest:
        with self._lock:
            change = self._state.changes.get(change_id)
            if change is None:
                raise NotFoundError(f"unknown change: {change_id}")
            return change

    def list_changes(self) -> list[ChangeRequest]:
        with self._lock:
            return list(self._state.changes.values())

    def alert_counters(self) -> dict[str, int]:
        with self._lock:
            return dict(self._state.alert_counters)

    # -- incident commands -------------------------------------------------

    def open_incident(
        self,
        product_ids: Sequence[str],
        severity: Severity | str,
        title: str,
        actor: str,
        now: datetime,
        description: str = "",
        source: IncidentSource | str = IncidentSource.MANUAL,
        causes_outage: bool = False,
        occurred_at: datetime | None = None,
    ) -> Incident:
        with self._lock:
            self._validate_products(product_ids)
            incident_id = f"INC-{self._state.incident_seq + 1:06d}"
            # Validate eagerly so a bad command consumes no sequence number.
            inc_mod.open_incident(
                incident_id,
                tuple(product_ids),
                Severity(severity),
                title,
                now,
                actor,
                description=description,
                source=IncidentSource(source),
                causes_outage=causes_outage,
                occurred_at=occurred_at,
            )
            payload = {
                "product_ids": list(product_ids),
                "severity": Severity(severity).value,
                "title": title,
                "description": description,
                "source": IncidentSource(source).value,
                "causes_outage": bool(causes_outage),
                "occurred_at": to_rfc3339(ensure_utc(occurred_at))
                if occurred_at is not None
                else None,
            }
            self._emit(now, actor, "incident.opened", incident_id, payload)
            return self._state.incidents[incident_id]

    def transition_incident(
        self,
        incident_id: str,
        to_state: IncidentState | str,
        fields: Mapping[str, Any] | None,
        actor: str,
        now: datetime,
    ) -> Incident:
        to_state = IncidentState(to_state)
        if to_state == IncidentState.CLOSED:
            if fields:
                raise ValidationError(
                    "closure takes no field edits; resolve them first"
                )
            incident, _record, _problem = self.close_incident(incident_id, actor, now)
            return incident
        with self._lock:
            incident = self.get_incident(incident_id)
            encoded = (
                {k: inc_mod._encode_field(k, v) for k, v in fields.items()}
                if fields
                else None
            )
            inc_mod.transition(incident, to_state, encoded, actor, now)
            payload: dict[str, Any] = {"to_state": to_state.value}
            if encoded:
                payload["fields"] = encoded
            self._emit(now, actor, "incident.transitioned", incident_id, payload)
            return self._state.incidents[incident_id]

    def close_incident(
        self, incident_id: str, actor: str, now: datetime
    ) -> tuple[Incident, OutageRecord | None, ProblemTicket | None]:
        """Close a resolved incident; absorb duplicate deliveries.

        Emission idempotency is by derived id: the draft is OR-<incident>
        and the problem PR-<incident>, so a replayed close (or a reopen /
        re-close cycle) can never mint a second of either.
        """
        with self._lock:
            incident = self.get_incident(incident_id)
            record_id = f"OR-{incident_id}"
            problem_id = f"PR-{incident_id}"
            if incident.state == IncidentState.CLOSED:
                return (
                    incident,
                    self._state.records.get(record_id),
                    self._state.problems.get(problem_id),
                )
            closed, draft, problem_trigger = inc_mod.close_incident(
                incident,
                actor,
                now,
                significant=self.config.significant_severities,
            )
            self._emit(now, actor, "incident.closed", incident_id, {})
            if draft is not None and record_id not in self._state.records:
                self._emit(
                    now,
                    actor,
                    "record.drafted",
                    record_id,
                    {
                        "incident_id": incident_id,
                        "product_ids": list(draft.product_ids),
                        "outage": {
                            "start": to_rfc3339(draft.outage.start),
                            "end": to_rfc3339(draft.outage.end),
                        },
                    },
                )
            if problem_trigger and problem_id not in self._state.problems:
                self._emit(
                    now,
                    actor,
                    "problem.spawned",
                    problem_id,
                    {
                        "incident_id": incident_id,
                        "assignee": self.config.rca_default_assignee,
                        "management_chain": [self.config.rca_default_chain],
                        "sla_days": self.config.rca_sla_days,
                    },
                )
            return (
                self._state.incidents[incident_id],
                self._state.records.get(record_id),
                self._state.problems.get(problem_id),
            )

    # -- alert ingest -------------------------------------------------------

    def ingest_alert(
        self,
        monitor_id: str,
        fired_at: datetime,
        value: float,
        message: str = "",
        actor: str = "monitor",
        now: datetime | None = None,
    ) -> dict:
        """Webhook intake. Every event is classified and counted; unknown
        monitors are rejected (and counted) rather than dropped."""
        with self._lock:
            fired_at = ensure_utc(fired_at)
            fired_key = to_rfc3339(fired_at)
            now = ensure_utc(now) if now is not None else fired_at
            if now < fired_at:
                now = fired_at
            profile = self.config.monitor(monitor_id)
            if profile is None:
                self._emit(
                    now,
                    actor,
                    "alert.received",
                    monitor_id,
                    {
                        "monitor_id": monitor_id,
                        "fired_at": fired_key,
                        "value": value,
                        "message": message,
                        "disposition": AlertDisposition.REJECTED.value,
                        "reason": "unknown monitor",
                    },
                )
                raise UnknownMonitorError(f"unknown monitor: {monitor_id}")
            event = AlertEvent(
                monitor_id=monitor_id, fired_at=fired_at, value=value, message=message
            )
            seen_incident = self._state.seen_alerts.get((monitor_id, fired_key))
            if seen_incident is not None and violates(profile, value):
                self._emit(
                    now,
                    actor,
                    "alert.received",
                    monitor_id,
                    {
                        "monitor_id": monitor_id,
                        "fired_at": fired_key,
                        "value": value,
                        "message": message,
                        "disposition": AlertDisposition.ATTACHED.value,
                        "incident_id": seen_incident,
                        "duplicate": True,
                    },
                )
                return {
                    "disposition": AlertDisposition.ATTACHED.value,
                    "incident_id": seen_incident,
                    "duplicate": True,
                }
            thread = self._state.monitor_threads.get(monitor_id)
            open_incident_id = None
            last_fired = None
            if thread is not None:
                held = self._state.incidents.get(thread.incident_id)
                if held is not None and held.state != IncidentState.CLOSED:
                    open_incident_id = thread.incident_id
                    last_fired = thread.last_fired_at
            decision: AlertDecision = decide_alert(
                profile, event, open_incident_id, last_fired
            )
            if decision.disposition == AlertDisposition.IGNORED:
                self._emit(
                    now,
                    actor,
                    "alert.received",
                    monitor_id,
                    {
                        "monitor_id": monitor_id,
                        "fired_at": fired_key,
                        "value": value,
                        "message": message,
                        "disposition": AlertDisposition.IGNORED.value,
                    },
                )
                return {"disposition": AlertDisposition.IGNORED.value}
            if decision.disposition == AlertDisposition.ATTACHED:
                incident_id = decision.incident_id
                assert incident_id is not None
                self._emit(
                    now,
                    actor,
                    "alert.received",
                    monitor_id,
                    {
                        "monitor_id": monitor_id,
                        "fired_at": fired_key,
                        "value": value,
                        "message": message,
                        "disposition": AlertDisposition.ATTACHED.value,
                        "incident_id": incident_id,
                    },
                )
                self._emit(
                    now,
                    actor,
                    "incident.alert_attached",
                    incident_id,
                    {"monitor_id": monitor_id, "fired_at": fired_key, "value": value},
                )
                return {
                    "disposition": AlertDisposition.ATTACHED.value,
                    "incident_id": incident_id,
                }
            incident_id = f"INC-{self._state.incident_seq + 1:06d}"
            self._emit(
                now,
                actor,
                "alert.received",
                monitor_id,
                {
                    "monitor_id": monitor_id,
                    "fired_at": fired_key,
                    "value": value,
                    "message": message,
                    "disposition": AlertDisposition.CREATED.value,
                    "incident_id": incident_id,
                },
            )
            self._emit(
                now,
                actor,
                "incident.opened",
                incident_id,
                {
                    "product_ids": [profile.product_id],
                    "severity": profile.severity_on_fire.value,
                    "title": f"{profile.metric} threshold breached on "
                    f"{profile.product_id} ({monitor_id})",
                    "description": message,
                    "source": IncidentSource.ALERT.value,
                    "causes_outage": True,
                    "occurred_at": fired_key,
                },
            )
            return {
                "disposition": AlertDisposition.CREATED.value,
                "incident_id": incident_id,
            }

    # -- record review ------------------------------------------------------

    def review_record(
        self,
        record_id: str,
        decision: ReviewDecision | str,
        reviewer: str,
        now: datetime,
        outage: TimeInterval | None = None,
        product_ids: Sequence[str] | None = None,
        note: str | None = None,
    ) -> OutageRecord:
        with self._lock:
            record = self.get_record(record_id)
            decision = ReviewDecision(decision)
            if product_ids is not None:
                self._validate_products(product_ids)
            rec_mod.review_outage(
                record, decision, reviewer, now,
                outage=outage, product_ids=product_ids, note=note,
            )
            payload: dict[str, Any] = {"decision": decision.value}
            if outage is not None:
                payload["outage"] = {
                    "start": to_rfc3339(outage.start),
                    "end": to_rfc3339(outage.end),
                }
            if product_ids is not None:
                payload["product_ids"] = list(product_ids)
            if note is not None:
                payload["note"] = note
            self._emit(now, reviewer, "record.reviewed", record_id, payload)
            updated = self._state.records[record_id]
        if decision == ReviewDecision.CONFIRM:
            # Confirmation is a refresh trigger; the timer is the other.
            self.refresh_dashboard(now)
        return updated

    # -- problem commands -----------------------------------------------------

    def submit_rca(
        self, problem_id: str, rca: Mapping[str, Any], actor: str, now: datetime
    ) -> ProblemTicket:
        with self._lock:
            ticket = self.get_problem(problem_id)
            document = rca_from_dict(rca)
            prob_mod.submit_rca(ticket, document, now)
            self._emit(
                now, actor, "problem.rca_submitted", problem_id,
                {"rca": rca_to_dict(document)},
            )
            return self._state.problems[problem_id]

    def review_rca(
        self,
        problem_id: str,
        reviewer: str,
        decision: RcaDecision | str,
        note: str,
        now: datetime,
    ) -> ProblemTicket:
        with self._lock:
            ticket = self.get_problem(problem_id)
            decision = RcaDecision(decision)
            prob_mod.review_rca(ticket, reviewer, decision, note, now)
            self._emit(
                now, reviewer, "problem.reviewed", problem_id,
                {"decision": decision.value, "note": note},
            )
            return self._state.problems[problem_id]

    # -- release / change commands ---------------------------------------------

    def create_release(
        self,
        name: str,
        pbi_ids: Sequence[str],
        target_window: TimeInterval,
        checklist: Sequence[Mapping[str, Any]],
        actor: str,
        now: datetime,
    ) -> Release:
        with self._lock:
            release_id = f"REL-{self._state.release_seq + 1:06d}"
            items = [
                ChecklistItem(
                    key=str(item["key"]),
                    description=str(item.get("description", "")),
                    mandatory=bool(item.get("mandatory", True)),
                )
                for item in checklist
            ]
            new_release(release_id, name, pbi_ids, target_window, items, now, actor)
            self._emit(
                now,
                actor,
                "release.created",
                release_id,
                {
                    "name": name,
                    "pbi_ids": list(pbi_ids),
                    "target_window": {
                        "start": to_rfc3339(target_window.start),
                        "end": to_rfc3339(target_window.end),
                    },
                    "checklist": [
                        {
                            "key": item.key,
                            "description": item.description,
                            "mandatory": item.mandatory,
                        }
                        for item in items
                    ],
                },
            )
            return self._state.releases[release_id]

    def run_prr(
        self,
        release_id: str,
        statuses: Mapping[str, tuple[ChecklistStatus | str, str | None]],
        actor: str,
        now: datetime,
    ) -> Release:
        with self._lock:
            release = self.get_release(release_id)
            normalized = {
                key: (ChecklistStatus(status), note)
                for key, (status, note) in statuses.items()
            }
            _run_prr(release, normalized, actor, now)
            self._emit(
                now,
                actor,
                "release.prr_run",
                release_id,
                {
                    "statuses": {
                        key: {"status": status.value, "note": note}
                        for key, (status, note) in normalized.items()
                    }
                },
            )
            return self._state.releases[release_id]

    def approve_release(self, release_id: str, actor: str, now: datetime) -> Release:
        """MRB approval; cascades to the release's Requested changes."""
        with self._lock:
            release = self.get_release(release_id)
            _approve_release(
                release,
                actor,
                now,
                release_windows=self.config.release_windows,
                freeze_windows=self.config.freeze_windows,
            )
            self._emit(now, actor, "release.approved", release_id, {})
            for change in list(self._state.changes.values()):
                if (
                    change.release_id == release_id
                    and change.state == ChangeState.REQUESTED
                ):
                    self._emit(now, actor, "change.approved", change.id, {})
            return self._state.releases[release_id]

    def deploy_release(self, release_id: str, actor: str, now: datetime) -> Release:
        with self._lock:
            _deploy_release(self.get_release(release_id), actor, now)
            self._emit(now, actor, "release.deployed", release_id, {})
            return self._state.releases[release_id]

    def cancel_release(self, release_id: str, actor: str, now: datetime) -> Release:
        with self._lock:
            _cancel_release(self.get_release(release_id), actor, now)
            self._emit(now, actor, "release.cancelled", release_id, {})
            return self._state.releases[release_id]

    def request_change(
        self,
        description: str,
        category: ChangeCategory | str,
        actor: str,
        now: datetime,
        release_id: str | None = None,
        product_ids: Sequence[str] = (),
        layer: ChangeLayer | str = ChangeLayer.IN_HOUSE,
        emergency: bool = False,
    ) -> ChangeRequest:
        with self._lock:
            if release_id is not None and release_id not in self._state.releases:
                raise NotFoundError(f"unknown release: {release_id}")
            if product_ids:
                self._validate_products(product_ids)
            change_id = f"CHG-{self._state.change_seq + 1:06d}"
            new_change(
                change_id, description, ChangeCategory(category), now, actor,
                release_id=release_id, product_ids=tuple(product_ids),
                layer=ChangeLayer(layer), emergency=emergency,
            )
            self._emit(
                now,
                actor,
                "change.requested",
                change_id,
                {
                    "description": description,
                    "category": ChangeCategory(category).value,
                    "release_id": release_id,
                    "product_ids": list(product_ids),
                    "layer": ChangeLayer(layer).value,
                    "emergency": bool(emergency),
                },
            )
            return self._state.changes[change_id]

    def approve_change(self, change_id: str, actor: str, now: datetime) -> ChangeRequest:
        with self._lock:
            _approve_change(self.get_change(change_id), actor, now)
            self._emit(now, actor, "change.approved", change_id, {})
            return self._state.changes[change_id]

    def reject_change(
        self, change_id: str, actor: str, now: datetime, note: str = ""
    ) -> ChangeRequest:
        with self._lock:
            _reject_change(self.get_change(change_id), actor, now, note=note)
            self._emit(now, actor, "change.rejected", change_id, {"note": note})
            return self._state.changes[change_id]

    def execute_change(self, change_id: str, actor: str, now: datetime) -> ChangeRequest:
        with self._lock:
            _execute_change(self.get_change(change_id), actor, now)
            self._emit(now, actor, "change.executed", change_id, {})
            return self._state.changes[change_id]

    def verify_change(self, change_id: str, actor: str, now: datetime) -> ChangeRequest:
        with self._lock:
            _verify_change(self.get_change(change_id), actor, now)
            self._emit(now, actor, "change.verified", change_id, {})
            return self._state.changes[change_id]

    def review_queue(self, on_date: datetime | None = None) -> list[ChangeRequest]:
        with self._lock:
            return daily_review_queue(self._state.changes.values(), on_date)

    # -- availability, dashboard, reporting -------------------------------------

    def product_availability(
        self, product_id: str, period: TimeInterval
    ) -> tuple[AvailabilityResult, list[TimeInterval], ProductConfig]:
        product = self._product(product_id)
        with self._lock:
            records = list(self._state.records.values())
        planned = expand_schedule(product.schedule, period)
        outages = rec_mod.downtime_ledger(records, product_id, period)
        return compute_availability(planned, outages), outages, product

    def get_availability(
        self, product_id: str, period: TimeInterval, view: str = "percent"
    ) -> dict:
        if view not in ("percent", "minutes"):
            raise ValidationError(f"unknown view: {view!r}")
        result, _outages, product = self.product_availability(product_id, period)
        allowed = (1 - product.sla_target_percent / 100.0) * result.planned_seconds
        base = {
            "product_id": product_id,
            "from": to_rfc3339(period.start),
            "to": to_rfc3339(period.end),
            "view": view,
            "sla_target_percent": product.sla_target_percent,
        }
        if view == "percent":
            base.update(
                {
                    "availability_percent": round(result.availability_percent, 4)
                    if result.defined
                    else None,
                    "planned_seconds": result.planned_seconds,
                    "downtime_seconds": result.downtime_seconds,
                    "uptime_seconds": result.uptime_seconds,
                }
            )
        else:
            base.update(
                {
                    "planned_minutes": _round_minutes(result.planned_seconds),
                    "downtime_minutes": _round_minutes(result.downtime_seconds),
                    "allowed_downtime_minutes": round(allowed / 60.0, 2),
                }
            )
        if result.defined:
            evaluation = evaluate_sla(product.sla_target_percent, result)
            base["met"] = evaluation.met
            base["margin_minutes"] = _round_minutes(evaluation.margin_seconds)
        else:
            base["met"] = None
            base["note"] = "no planned uptime"
        return base

    def default_period(self, now: datetime) -> TimeInterval:
        """Calendar year-to-date, UTC."""
        now = ensure_utc(now)
        start = datetime(now.year, 1, 1, tzinfo=timezone.utc)
        if now <= start:
            start = datetime(now.year - 1, 1, 1, tzinfo=timezone.utc)
        return TimeInterval(start, now)

    def refresh_dashboard(
        self, now: datetime, period: TimeInterval | None = None
    ) -> DashboardSnapshot:
        now = ensure_utc(now)
        period = period if period is not None else self.default_period(now)
        rows = []
        for product in self.config.products:
            result, _outages, _product = self.product_availability(product.id, period)
            allowed = (
                1 - product.sla_target_percent / 100.0
            ) * result.planned_seconds
            if result.defined:
                evaluation = evaluate_sla(product.sla_target_percent, result)
                met: bool | None = evaluation.met
                percent: float | None = round(result.availability_percent, 4)
                note = None
            else:
                met = None
                percent = None
                note = "no planned uptime"
            rows.append(
                DashboardRow(
                    product_id=product.id,
                    product_name=product.name,
                    sla_target_percent=product.sla_target_percent,
                    planned_minutes=_round_minutes(result.planned_seconds),
                    downtime_minutes=_round_minutes(result.downtime_seconds),
                    allowed_downtime_minutes=round(allowed / 60.0, 2),
                    availability_percent=percent,
                    met=met,
                    note=note,
                )
            )
        snapshot = DashboardSnapshot(
            generated_at=now, period=period, rows=tuple(rows)
        )
        with self._lock:
            self._dashboard = snapshot
            try:
                self._save_snapshot()
            except OSError as exc:  # cache only; never fail the refresh
                log.warning("could not persist dashboard snapshot: %s", exc)
        return snapshot

    def dashboard(self, now: datetime | None = None) -> DashboardSnapshot:
        with self._lock:
            cached = self._dashboard
        if cached is not None:
            return cached
        return self.refresh_dashboard(
            now if now is not None else datetime.now(timezone.utc)
        )

    def executive_report(self, period: TimeInterval) -> dict:
        """Aggregate operational report: incident volumes/durations, SLA
        attainment and breaches, RCA backlog, change activity."""
        with self._lock:
            incidents = list(self._state.incidents.values())
            problems = list(self._state.problems.values())
            changes = list(self._state.changes.values())
        stats = inc_mod.incident_statistics(incidents, period)
        attainment = []
        breaches = []
        for product in self.config.products:
            entry = self.get_availability(product.id, period, view="percent")
            minutes = self.get_availability(product.id, period, view="minutes")
            row = {
                "product_id": product.id,
                "sla_target_percent": product.sla_target_percent,
                "availability_percent": entry["availability_percent"],
                "downtime_minutes": minutes["downtime_minutes"],
                "allowed_downtime_minutes": minutes["allowed_downtime_minutes"],
                "met": entry["met"],
                "margin_minutes": entry.get("margin_minutes"),
            }
            attainment.append(row)
            if entry["met"] is False:
                breaches.append(
                    {
                        "product_id": product.id,
                        "margin_minutes": entry["margin_minutes"],
                    }
                )
        backlog = prob_mod.rca_backlog_report(problems, period.end)
        by_state: dict[str, int] = {}
        executed_in_period = 0
        for change in changes:
            by_state[change.state.value] = by_state.get(change.state.value, 0) + 1
            if change.executed_at is not None and period.contains(change.executed_at):
                executed_in_period += 1
        correlated = change_incident_correlation(changes, incidents)
        return {
            "period": {"from": to_rfc3339(period.start), "to": to_rfc3339(period.end)},
            "incidents": {
                "total": stats.total,
                "by_severity": stats.by_severity,
                "by_source": stats.by_source,
                "by_product": stats.by_product,
                "outage_durations_minutes": [
                    round(d, 2) for d in stats.outage_durations_minutes
                ],
                "mean_duration_minutes": round(stats.mean_duration_minutes, 2)
                if stats.mean_duration_minutes is not None
                else None,
            },
            "availability": attainment,
            "breaches": breaches,
            "rca_backlog": {
                "open": backlog.open_count,
                "submitted": backlog.submitted_count,
                "overdue": backlog.overdue_count,
                "mean_age_days": round(backlog.mean_age_days, 2)
                if backlog.mean_age_days is not None
                else None,
            },
            "changes": {
                "by_state": by_state,
                "executed_in_period": executed_in_period,
                "correlated_with_incidents": len(correlated),
            },
        }


# -- wire encoders (shared by the API and the CLI report) -------------------


def incident_to_dict(incident: Incident) -> dict:
    data = {
        "id": incident.id,
        "product_ids": list(incident.product_ids),
        "severity": incident.severity.value,
        "state": incident.state.value,
        "causes_outage": incident.causes_outage,
        "source": incident.source.value,
        "title": incident.title,
        "description": incident.description,
        "audit_trail": [
            {
                "at": to_rfc3339(entry.at),
                "actor": entry.actor,
                "event": entry.event,
                "details": entry.detail_dict(),
            }
            for entry in incident.audit_trail
        ],
    }
    for name in inc_mod.LIFECYCLE_FIELDS:
        value = getattr(incident, name)
        data[name] = to_rfc3339(value) if value is not None else None
    return data


def record_to_dict(record: OutageRecord) -> dict:
    return {
        "id": record.id,
        "incident_id": record.incident_id,
        "product_ids": list(record.product_ids),
        "outage": {
            "start": to_rfc3339(record.outage.start),
            "end": to_rfc3339(record.outage.end),
        },
        "state": record.state.value,
        "draft_product_ids": list(record.draft_product_ids),
        "draft_outage": {
            "start": to_rfc3339(record.draft_outage.start),
            "end": to_rfc3339(record.draft_outage.end),
        },
        "reviewer": record.reviewer,
        "review_note": record.review_note,
        "reviewed_at": to_rfc3339(record.reviewed_at)
        if record.reviewed_at is not None
        else None,
    }


def problem_to_dict(ticket: ProblemTicket) -> dict:
    return {
        "id": ticket.id,
        "incident_id": ticket.incident_id,
        "assignee": ticket.assignee,
        "management_chain": list(ticket.management_chain),
        "created_at": to_rfc3339(ticket.created_at),
        "due_at": to_rfc3339(ticket.due_at),
        "state": ticket.state.value,
        "rca": rca_to_dict(ticket.rca) if ticket.rca is not None else None,
        "reviewer": ticket.reviewer,
        "submitted_at": to_rfc3339(ticket.submitted_at)
        if ticket.submitted_at is not None
        else None,
        "submitted_late": ticket.submitted_late,
        "reviews": [
            {
                "reviewer": review.reviewer,
                "decision": review.decision.value,
                "note": review.note,
                "at": to_rfc3339(review.at),
            }
            for review in ticket.reviews
        ],
    }


def release_to_dict(release: Release) -> dict:
    return {
        "id": release.id,
        "name": release.name,
        "pbi_ids": list(release.pbi_ids),
        "target_window": {
            "start": to_rfc3339(release.target_window.start),
            "end": to_rfc3339(release.target_window.end),
        },
        "state": release.state.value,
        "prr": [
            {
                "key": item.key,
                "description": item.description,
                "mandatory": item.mandatory,
                "status": item.status.value,
                "waiver_note": item.waiver_note,
            }
            for item in release.prr
        ],
        "failing_items": release.failing_items(),
        "history": [
            {"at": to_rfc3339(entry.at), "actor": entry.actor, "state": entry.state}
            for entry in release.history
        ],
    }


def change_to_dict(change: ChangeRequest) -> dict:
    return {
        "id": change.id,
        "description": change.description,
        "category": change.category.value,
        "requested_at": to_rfc3339(change.requested_at),
        "release_id": change.release_id,
        "product_ids": list(change.product_ids),
        "layer": change.layer.value,
        "emergency": change.emergency,
        "state": change.state.value,
        "executed_at": to_rfc3339(change.executed_at)
        if change.executed_at is not None
        else None,
        "history": [
            {"at": to_rfc3339(entry.at), "actor": entry.actor, "state": entry.state}
            for entry in change.history
        ],
    }
