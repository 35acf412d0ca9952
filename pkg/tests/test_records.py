"""Outage record review workflow and the confirmed-downtime ledger."""
from __future__ import annotations

import pytest

from availd.errors import ValidationError, WorkflowError
from availd.metrics import TimeInterval
from availd.records import (
    OutageRecord,
    RecordState,
    ReviewDecision,
    downtime_ledger,
    draft_record,
    review_outage,
)
from conftest import utc


def make_draft(start_h=4, end_h=8, rid="OR-INC-000001") -> OutageRecord:
    return draft_record(
        rid,
        "INC-000001",
        ("web",),
        TimeInterval(utc(2025, 3, 10, start_h), utc(2025, 3, 10, end_h)),
    )


class TestDraft:
    def test_draft_starts_unconfirmed_with_editable_copy(self):
        record = make_draft()
        assert record.state == RecordState.DRAFT
        assert record.draft_outage == record.outage
        assert record.draft_product_ids == record.product_ids

    def test_empty_products_rejected(self):
        with pytest.raises(ValidationError):
            draft_record(
                "OR-1", "INC-1", (),
                TimeInterval(utc(2025, 3, 10, 4), utc(2025, 3, 10, 8)),
            )


class TestReview:
    def test_confirm_without_edits_freezes_draft_values(self):
        record = review_outage(
            make_draft(), ReviewDecision.CONFIRM, "reviewer", utc(2025, 3, 11)
        )
        assert record.state == RecordState.CONFIRMED
        assert record.reviewer == "reviewer"
        assert record.reviewed_at == utc(2025, 3, 11)
        assert record.outage == make_draft().outage

    def test_confirm_applies_reviewer_edits(self):
        narrowed = TimeInterval(utc(2025, 3, 10, 5), utc(2025, 3, 10, 7))
        record = review_outage(
            make_draft(),
            ReviewDecision.CONFIRM,
            "reviewer",
            utc(2025, 3, 11),
            outage=narrowed,
            product_ids=("web", "filings"),
        )
        assert record.outage == narrowed
        assert record.product_ids == ("web", "filings")

    def test_reject_requires_note(self):
        with pytest.raises(ValidationError):
            review_outage(make_draft(), ReviewDecision.REJECT, "r", utc(2025, 3, 11))
        record = review_outage(
            make_draft(), ReviewDecision.REJECT, "r", utc(2025, 3, 11),
            note="probe misfire, no customer impact",
        )
        assert record.state == RecordState.REJECTED
        assert record.review_note == "probe misfire, no customer impact"

    def test_review_is_single_shot(self):
        confirmed = review_outage(
            make_draft(), ReviewDecision.CONFIRM, "r", utc(2025, 3, 11)
        )
        for decision in ReviewDecision:
            with pytest.raises(WorkflowError):
                review_outage(confirmed, decision, "r2", utc(2025, 3, 12))

    def test_rejected_record_stays_rejected(self):
        rejected = review_outage(
            make_draft(), ReviewDecision.REJECT, "r", utc(2025, 3, 11), note="dup"
        )
        with pytest.raises(WorkflowError):
            review_outage(rejected, ReviewDecision.CONFIRM, "r", utc(2025, 3, 12))


class TestLedger:
    def _records(self):
        first = review_outage(
            make_draft(4, 8, "OR-INC-000001"), ReviewDecision.CONFIRM, "r", utc(2025, 3, 11)
        )
        second = make_draft(10, 12, "OR-INC-000002")  # still draft
        third = review_outage(
            make_draft(14, 16, "OR-INC-000003"), ReviewDecision.REJECT, "r",
            utc(2025, 3, 11), note="dup",
        )
        fourth = review_outage(
            make_draft(1, 3, "OR-INC-000004"), ReviewDecision.CONFIRM, "r", utc(2025, 3, 11)
        )
        return [first, second, third, fourth]

    def test_only_confirmed_records_count(self):
        period = TimeInterval(utc(2025, 3, 1), utc(2025, 4, 1))
        ledger = downtime_ledger(self._records(), "web", period)
        assert ledger == [
            TimeInterval(utc(2025, 3, 10, 1), utc(2025, 3, 10, 3)),
            TimeInterval(utc(2025, 3, 10, 4), utc(2025, 3, 10, 8)),
        ]

    def test_ledger_clips_to_period(self):
        period = TimeInterval(utc(2025, 3, 10, 5), utc(2025, 3, 10, 6))
        ledger = downtime_ledger(self._records(), "web", period)
        assert ledger == [TimeInterval(utc(2025, 3, 10, 5), utc(2025, 3, 10, 6))]

    def test_ledger_filters_by_product(self):
        period = TimeInterval(utc(2025, 3, 1), utc(2025, 4, 1))
        assert downtime_ledger(self._records(), "filings", period) == []

    def test_record_outside_period_excluded(self):
        period = TimeInterval(utc(2025, 4, 1), utc(2025, 5, 1))
        assert downtime_ledger(self._records(), "web", period) == []
