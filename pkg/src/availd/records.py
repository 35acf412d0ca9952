"""Availability records: the reviewed downtime ledger.

A record starts as a draft seeded from a closed outage incident. A
reviewer confirms the facts (optionally correcting the interval and the
impacted products) or rejects the record; only confirmed records ever
influence an availability figure. The original draft facts are retained
for audit.
"""
from __future__ import annotations

from dataclasses import dataclass, replace
from datetime import datetime
from enum import Enum
from typing import Iterable, Sequence

from .errors import ValidationError, WorkflowError
from .metrics import TimeInterval
from .timeutil import ensure_utc


class RecordState(str, Enum):
    DRAFT = "Draft"
    CONFIRMED = "Confirmed"
    REJECTED = "Rejected"


class ReviewDecision(str, Enum):
    CONFIRM = "confirm"
    REJECT = "reject"


@dataclass(frozen=True)
class OutageRecord:
    id: str
    incident_id: str
    product_ids: tuple[str, ...]
    outage: TimeInterval
    state: RecordState
    draft_product_ids: tuple[str, ...]
    draft_outage: TimeInterval
    reviewer: str | None = None
    review_note: str | None = None
    reviewed_at: datetime | None = None


def draft_record(
    record_id: str,
    incident_id: str,
    product_ids: Sequence[str],
    outage: TimeInterval,
) -> OutageRecord:
    if not product_ids:
        raise ValidationError("outage record must name at least one product")
    return OutageRecord(
        id=record_id,
        incident_id=incident_id,
        product_ids=tuple(product_ids),
        outage=outage,
        state=RecordState.DRAFT,
        draft_product_ids=tuple(product_ids),
        draft_outage=outage,
    )


def review_outage(
    record: OutageRecord,
    decision: ReviewDecision,
    reviewer: str,
    now: datetime,
    outage: TimeInterval | None = None,
    product_ids: Sequence[str] | None = None,
    note: str | None = None,
) -> OutageRecord:
    """Confirm or reject a draft record.

    Confirmation applies the edits first, then freezes the record; a
    rejection requires a note explaining why (e.g. monitoring false
    positive). Reviewing anything but a draft is a workflow error.
    """
    if record.state != RecordState.DRAFT:
        raise WorkflowError(
            f"record {record.id} is {record.state.value}; only drafts can be reviewed"
        )
    decision = ReviewDecision(decision)
    if decision == ReviewDecision.REJECT:
        if not note or not note.strip():
            raise ValidationError("rejecting a record requires a review note")
        return replace(
            record,
            state=RecordState.REJECTED,
            reviewer=reviewer,
            review_note=note,
            reviewed_at=ensure_utc(now),
        )
    products = tuple(product_ids) if product_ids is not None else record.product_ids
    if not products:
        raise ValidationError("outage record must name at least one product")
    return replace(
        record,
        state=RecordState.CONFIRMED,
        product_ids=products,
        outage=outage if outage is not None else record.outage,
        reviewer=reviewer,
        review_note=note,
        reviewed_at=ensure_utc(now),
    )


def downtime_ledger(
    records: Iterable[OutageRecord], product_id: str, period: TimeInterval
) -> list[TimeInterval]:
    """Confirmed outage intervals naming the product, clipped to the period.

    Drafts and rejected records are excluded. Output order is insensitive
    to record insertion order.
    """
    clipped = []
    for record in records:
        if record.state != RecordState.CONFIRMED:
            continue
        if product_id not in record.product_ids:
            continue
        piece = record.outage.intersect(period)
        if piece is not None:
            clipped.append(piece)
    return sorted(clipped, key=lambda iv: (iv.start, iv.end))
