"""Change and release management.

Releases carry a Production Readiness Review checklist and must pass it
before the Migration Review Board can approve them into an open release
window. Change requests follow Requested -> Approved -> Executed ->
Verified; production changes without a prior approval are refused, which
is the core control here.
"""
from __future__ import annotations

from dataclasses import dataclass, replace
from datetime import datetime, timedelta
from enum import Enum
from typing import Iterable, Mapping, Sequence

from .errors import SchedulingError, StateMachineError, ValidationError
from .incidents import Incident
from .metrics import TimeInterval
from .timeutil import ensure_utc


class ReleaseState(str, Enum):
    PLANNED = "Planned"
    PRR_PASSED = "PrrPassed"
    APPROVED = "Approved"
    DEPLOYED = "Deployed"
    CANCELLED = "Cancelled"


class ChecklistStatus(str, Enum):
    PENDING = "Pending"
    PASSED = "Passed"
    FAILED = "Failed"
    WAIVED = "Waived"


class ChangeState(str, Enum):
    REQUESTED = "Requested"
    APPROVED = "Approved"
    REJECTED = "Rejected"
    EXECUTED = "Executed"
    VERIFIED = "Verified"


class ChangeCategory(str, Enum):
    SOFTWARE = "software"
    HARDWARE = "hardware"
    DATA = "data"
    CONFIGURATION = "configuration"


class ChangeLayer(str, Enum):
    IN_HOUSE = "in-house"
    VENDOR = "vendor"


DEFAULT_CORRELATION_WINDOW = timedelta(hours=72)


@dataclass(frozen=True)
class ChecklistItem:
    key: str
    description: str
    mandatory: bool
    status: ChecklistStatus = ChecklistStatus.PENDING
    waiver_note: str | None = None

    @property
    def satisfied(self) -> bool:
        if not self.mandatory:
            return True
        if self.status == ChecklistStatus.PASSED:
            return True
        return self.status == ChecklistStatus.WAIVED and bool(
            self.waiver_note and self.waiver_note.strip()
        )


@dataclass(frozen=True)
class StateChange:
    at: datetime
    actor: str
    state: str


@dataclass(frozen=True)
class Release:
    id: str
    name: str
    pbi_ids: tuple[str, ...]
    target_window: TimeInterval
    prr: tuple[ChecklistItem, ...]
    state: ReleaseState = ReleaseState.PLANNED
    history: tuple[StateChange, ...] = ()

    def failing_items(self) -> list[str]:
        return [item.key for item in self.prr if not item.satisfied]


@dataclass(frozen=True)
class ChangeRequest:
    id: str
    description: str
    category: ChangeCategory
    requested_at: datetime
    release_id: str | None = None
    product_ids: tuple[str, ...] = ()
    layer: ChangeLayer = ChangeLayer.IN_HOUSE
    emergency: bool = False
    state: ChangeState = ChangeState.REQUESTED
    executed_at: datetime | None = None
    history: tuple[StateChange, ...] = ()

    def has_been(self, state: ChangeState) -> bool:
        return any(entry.state == state.value for entry in self.history)


def _mark(entity, state_value: str, actor: str, now: datetime):
    entry = StateChange(at=ensure_utc(now), actor=actor, state=state_value)
    return replace(entity, history=entity.history + (entry,))


def new_release(
    release_id: str,
    name: str,
    pbi_ids: Sequence[str],
    target_window: TimeInterval,
    checklist: Sequence[ChecklistItem],
    now: datetime,
    actor: str,
) -> Release:
    if not name.strip():
        raise ValidationError("release name must not be empty")
    keys = [item.key for item in checklist]
    if len(keys) != len(set(keys)):
        raise ValidationError("duplicate checklist keys")
    release = Release(
        id=release_id,
        name=name,
        pbi_ids=tuple(pbi_ids),
        target_window=target_window,
        prr=tuple(checklist),
    )
    return _mark(release, ReleaseState.PLANNED.value, actor, now)


def run_prr(
    release: Release,
    item_statuses: Mapping[str, tuple[ChecklistStatus, str | None]],
    actor: str,
    now: datetime,
) -> Release:
    """Apply checklist outcomes; pass the gate iff every mandatory item is
    Passed or Waived with a note. Otherwise the release stays Planned with
    the failing items listed on it."""
    if release.state != ReleaseState.PLANNED:
        raise StateMachineError(
            f"release {release.id}: PRR runs on Planned releases, is "
            f"{release.state.value}",
            rule="PRR requires state Planned",
        )
    known = {item.key for item in release.prr}
    for key in item_statuses:
        if key not in known:
            raise ValidationError(f"unknown checklist key: {key}")
    items = []
    for item in release.prr:
        if item.key in item_statuses:
            status, note = item_statuses[item.key]
            status = ChecklistStatus(status)
            if status == ChecklistStatus.WAIVED and not (note and note.strip()):
                raise ValidationError(
                    f"waiving checklist item {item.key} requires a note"
                )
            item = replace(item, status=status, waiver_note=note)
        items.append(item)
    release = replace(release, prr=tuple(items))
    if release.failing_items():
        return release
    release = replace(release, state=ReleaseState.PRR_PASSED)
    return _mark(release, ReleaseState.PRR_PASSED.value, actor, now)


def window_is_open(
    target: TimeInterval,
    release_windows: Sequence[TimeInterval],
    freeze_windows: Sequence[TimeInterval],
) -> bool:
    """A target window must sit inside a release window (when any are
    configured; none configured means the calendar is always open) and
    must not touch a freeze window."""
    if release_windows and not any(
        window.start <= target.start and target.end <= window.end
        for window in release_windows
    ):
        return False
    return not any(target.overlaps(freeze) for freeze in freeze_windows)


def approve_release(
    release: Release,
    actor: str,
    now: datetime,
    release_windows: Sequence[TimeInterval] = (),
    freeze_windows: Sequence[TimeInterval] = (),
) -> Release:
    """Migration Review Board approval of a PRR-passed release."""
    if release.state != ReleaseState.PRR_PASSED:
        raise StateMachineError(
            f"release {release.id}: approval requires PrrPassed, is "
            f"{release.state.value}",
            rule="approve requires state PrrPassed",
        )
    if not window_is_open(release.target_window, release_windows, freeze_windows):
        raise SchedulingError(
            f"release {release.id}: target window "
            f"{release.target_window.start.isoformat()}.."
            f"{release.target_window.end.isoformat()} is outside the release "
            "calendar or inside a freeze window"
        )
    release = replace(release, state=ReleaseState.APPROVED)
    return _mark(release, ReleaseState.APPROVED.value, actor, now)


def deploy_release(release: Release, actor: str, now: datetime) -> Release:
    if release.state != ReleaseState.APPROVED:
        raise StateMachineError(
            f"release {release.id}: deployment requires Approved, is "
            f"{release.state.value}",
            rule="deploy requires state Approved",
        )
    release = replace(release, state=ReleaseState.DEPLOYED)
    return _mark(release, ReleaseState.DEPLOYED.value, actor, now)


def cancel_release(release: Release, actor: str, now: datetime) -> Release:
    if release.state in (ReleaseState.DEPLOYED, ReleaseState.CANCELLED):
        raise StateMachineError(
            f"release {release.id}: cannot cancel a {release.state.value} release",
            rule="cancel requires state before Deployed",
        )
    release = replace(release, state=ReleaseState.CANCELLED)
    return _mark(release, ReleaseState.CANCELLED.value, actor, now)


def new_change(
    change_id: str,
    description: str,
    category: ChangeCategory,
    now: datetime,
    actor: str,
    release_id: str | None = None,
    product_ids: Sequence[str] = (),
    layer: ChangeLayer = ChangeLayer.IN_HOUSE,
    emergency: bool = False,
) -> ChangeRequest:
    if not description.strip():
        raise ValidationError("change description must not be empty")
    change = ChangeRequest(
        id=change_id,
        description=description,
        category=ChangeCategory(category),
        requested_at=ensure_utc(now),
        release_id=release_id,
        product_ids=tuple(product_ids),
        layer=ChangeLayer(layer),
        emergency=bool(emergency),
    )
    return _mark(change, ChangeState.REQUESTED.value, actor, now)


def approve_change(change: ChangeRequest, actor: str, now: datetime) -> ChangeRequest:
    if change.state != ChangeState.REQUESTED:
        raise StateMachineError(
            f"change {change.id}: approval requires Requested, is "
            f"{change.state.value}",
            rule="approve requires state Requested",
        )
    change = replace(change, state=ChangeState.APPROVED)
    return _mark(change, ChangeState.APPROVED.value, actor, now)


def reject_change(
    change: ChangeRequest, actor: str, now: datetime, note: str = ""
) -> ChangeRequest:
    if change.state != ChangeState.REQUESTED:
        raise StateMachineError(
            f"change {change.id}: rejection requires Requested, is "
            f"{change.state.value}",
            rule="reject requires state Requested",
        )
    change = replace(change, state=ChangeState.REJECTED)
    return _mark(change, ChangeState.REJECTED.value, actor, now)


def execute_change(change: ChangeRequest, actor: str, now: datetime) -> ChangeRequest:
    """Only formally approved changes may touch production."""
    if change.state != ChangeState.APPROVED:
        raise StateMachineError(
            f"change {change.id}: execution requires Approved, is "
            f"{change.state.value}",
            rule="execute requires state Approved",
        )
    now = ensure_utc(now)
    change = replace(change, state=ChangeState.EXECUTED, executed_at=now)
    return _mark(change, ChangeState.EXECUTED.value, actor, now)


def verify_change(change: ChangeRequest, actor: str, now: datetime) -> ChangeRequest:
    if change.state != ChangeState.EXECUTED:
        raise StateMachineError(
            f"change {change.id}: verification requires Executed, is "
            f"{change.state.value}",
            rule="verify requires state Executed",
        )
    change = replace(change, state=ChangeState.VERIFIED)
    return _mark(change, ChangeState.VERIFIED.value, actor, now)


def daily_review_queue(
    changes: Iterable[ChangeRequest], on_date: datetime | None = None
) -> list[ChangeRequest]:
    """Requested changes awaiting the daily review, oldest first."""
    cutoff = ensure_utc(on_date) if on_date is not None else None
    queue = [
        change
        for change in changes
        if change.state == ChangeState.REQUESTED
        and (cutoff is None or change.requested_at <= cutoff)
    ]
    return sorted(queue, key=lambda change: (change.requested_at, change.id))


def change_incident_correlation(
    changes: Iterable[ChangeRequest],
    incidents: Iterable[Incident],
    window: timedelta = DEFAULT_CORRELATION_WINDOW,
) -> list[tuple[ChangeRequest, Incident]]:
    """Executed changes paired with incidents that occurred within
    ``window`` afterwards on an overlapping product set."""
    if window <= timedelta(0):
        raise ValidationError("correlation window must be positive")
    executed = sorted(
        (c for c in changes if c.executed_at is not None), key=lambda c: c.id
    )
    candidates = sorted(
        (i for i in incidents if i.occurred_at is not None), key=lambda i: i.id
    )
    pairs = []
    for change in executed:
        change_products = set(change.product_ids)
        for incident in candidates:
            offset = incident.occurred_at - change.executed_at
            if timedelta(0) <= offset <= window and change_products & set(
                incident.product_ids
            ):
                pairs.append((change, incident))
    return pairs
