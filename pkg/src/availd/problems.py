"""Root-cause-analysis workflow.

Significant incidents spawn a problem ticket assigned to a pre-identified
resolver with a 10-calendar-day SLA. The assignee submits a structured
RCA (timeline, fishbone causal factors, 5-Whys chain, corrective and
preventative actions); an independent reviewer approves it or sends it
back for rework. Self-review is always refused.
"""
from __future__ import annotations

from dataclasses import dataclass, replace
from datetime import datetime, timedelta
from enum import Enum
from typing import Any, Iterable, Mapping, Sequence

from .errors import IndependenceError, StateMachineError, ValidationError
from .incidents import DEFAULT_SIGNIFICANT, Incident, Severity
from .timeutil import ensure_utc, parse_rfc3339, to_rfc3339

RCA_SLA_DAYS = 10

FISHBONE_CATEGORIES = (
    "People",
    "Process",
    "Technology",
    "Environment",
    "Materials",
    "Measurement",
)


class ProblemState(str, Enum):
    OPEN = "Open"
    RCA_SUBMITTED = "RcaSubmitted"
    APPROVED = "Approved"
    REJECTED = "Rejected"


class RcaDecision(str, Enum):
    APPROVE = "approve"
    REJECT = "reject"


@dataclass(frozen=True)
class WhyStep:
    """One link in the 5-Whys chain.

    ``asks_about`` is the index of the previous step whose answer this
    question interrogates (None for the first step). The chain is enforced
    structurally; semantic quality is the reviewer's concern.
    """

    question: str
    answer: str
    asks_about: int | None = None


@dataclass(frozen=True)
class ActionItem:
    action: str
    owner: str
    target_date: str  # ISO date


@dataclass(frozen=True)
class TimelineEvent:
    at: datetime
    text: str


@dataclass(frozen=True)
class RcaDocument:
    timeline: tuple[TimelineEvent, ...]
    fishbone: tuple[tuple[str, tuple[str, ...]], ...]
    five_whys: tuple[WhyStep, ...]
    root_cause: str
    corrective_actions: tuple[ActionItem, ...]
    preventative_actions: tuple[ActionItem, ...] = ()

    def completeness_errors(self) -> list[str]:
        """Everything missing before the document counts as complete."""
        problems = []
        for earlier, later in zip(self.timeline, self.timeline[1:]):
            if later.at < earlier.at:
                problems.append("timeline timestamps must be non-decreasing")
                break
        for category, _factors in self.fishbone:
            if category not in FISHBONE_CATEGORIES:
                problems.append(f"unknown fishbone category: {category}")
        if not self.five_whys:
            problems.append("five_whys requires at least one step")
        for index, step in enumerate(self.five_whys):
            expected = None if index == 0 else index - 1
            if step.asks_about != expected:
                problems.append(
                    f"five_whys step {index} must chain from answer {expected}"
                )
            if not step.question.strip() or not step.answer.strip():
                problems.append(f"five_whys step {index} needs a question and answer")
        if not self.root_cause.strip():
            problems.append("root_cause required")
        if not self.corrective_actions:
            problems.append("corrective_actions required")
        return problems

    @property
    def complete(self) -> bool:
        return not self.completeness_errors()


def chain_whys(pairs: Sequence[tuple[str, str]]) -> tuple[WhyStep, ...]:
    """Build a correctly linked 5-Whys chain from (question, answer) pairs."""
    return tuple(
        WhyStep(question=q, answer=a, asks_about=None if i == 0 else i - 1)
        for i, (q, a) in enumerate(pairs)
    )


@dataclass(frozen=True)
class ReviewRecord:
    reviewer: str
    decision: RcaDecision
    note: str
    at: datetime


@dataclass(frozen=True)
class ProblemTicket:
    id: str
    incident_id: str
    assignee: str
    management_chain: tuple[str, ...]
    created_at: datetime
    due_at: datetime
    state: ProblemState
    rca: RcaDocument | None = None
    reviewer: str | None = None
    submitted_at: datetime | None = None
    submitted_late: bool | None = None
    reviews: tuple[ReviewRecord, ...] = ()

    @property
    def terminal(self) -> bool:
        return self.state == ProblemState.APPROVED

    def overdue(self, now: datetime) -> bool:
        return not self.terminal and ensure_utc(now) > self.due_at


def spawn_problem(
    problem_id: str,
    incident: Incident,
    assignee: str,
    management_chain: Sequence[str],
    now: datetime,
    sla_days: int = RCA_SLA_DAYS,
    significant: frozenset[Severity] = DEFAULT_SIGNIFICANT,
) -> ProblemTicket:
    """Open an RCA ticket for a significant incident, due in ``sla_days``
    calendar days."""
    if incident.severity not in significant:
        raise ValidationError(
            f"incident {incident.id} severity {incident.severity.value} does not "
            "warrant problem management"
        )
    if not assignee:
        raise ValidationError("problem ticket requires an assignee")
    created = ensure_utc(now)
    return ProblemTicket(
        id=problem_id,
        incident_id=incident.id,
        assignee=assignee,
        management_chain=tuple(management_chain),
        created_at=created,
        due_at=created + timedelta(days=sla_days),
        state=ProblemState.OPEN,
    )


def submit_rca(ticket: ProblemTicket, rca: RcaDocument, now: datetime) -> ProblemTicket:
    """Attach a complete RCA document; flags late submissions past due_at."""
    if ticket.state != ProblemState.OPEN:
        raise StateMachineError(
            f"problem {ticket.id}: RCA submission requires Open, is "
            f"{ticket.state.value}",
            rule="submit requires state Open",
        )
    missing = rca.completeness_errors()
    if missing:
        raise ValidationError(
            "RCA document incomplete: " + "; ".join(missing), {"missing": missing}
        )
    submitted = ensure_utc(now)
    return replace(
        ticket,
        state=ProblemState.RCA_SUBMITTED,
        rca=rca,
        submitted_at=submitted,
        submitted_late=submitted > ticket.due_at,
    )


def review_rca(
    ticket: ProblemTicket,
    reviewer: str,
    decision: RcaDecision,
    note: str,
    now: datetime,
) -> ProblemTicket:
    """Independent review: approve (terminal) or reject back to Open.

    A rejection preserves the submitted document for revision. The
    reviewer must differ from the assignee.
    """
    if ticket.state != ProblemState.RCA_SUBMITTED:
        raise StateMachineError(
            f"problem {ticket.id}: review requires RcaSubmitted, is "
            f"{ticket.state.value}",
            rule="review requires state RcaSubmitted",
        )
    if reviewer == ticket.assignee:
        raise IndependenceError(
            f"problem {ticket.id}: reviewer must be independent of assignee "
            f"{ticket.assignee}"
        )
    decision = RcaDecision(decision)
    review = ReviewRecord(
        reviewer=reviewer, decision=decision, note=note, at=ensure_utc(now)
    )
    if decision == RcaDecision.APPROVE:
        return replace(
            ticket,
            state=ProblemState.APPROVED,
            reviewer=reviewer,
            reviews=ticket.reviews + (review,),
        )
    # Rejection reopens the ticket for rework; the decision stays on record.
    return replace(
        ticket,
        state=ProblemState.OPEN,
        reviewer=reviewer,
        reviews=ticket.reviews + (review,),
    )


@dataclass(frozen=True)
class BacklogReport:
    open_count: int
    submitted_count: int
    overdue_count: int
    mean_age_days: float | None


def rca_backlog_report(
    tickets: Iterable[ProblemTicket], now: datetime
) -> BacklogReport:
    """Backlog health: ages are averaged over non-terminal tickets only."""
    now = ensure_utc(now)
    open_count = submitted = overdue = 0
    ages: list[float] = []
    for ticket in tickets:
        if ticket.state == ProblemState.OPEN:
            open_count += 1
        elif ticket.state == ProblemState.RCA_SUBMITTED:
            submitted += 1
        else:
            continue
        if ticket.overdue(now):
            overdue += 1
        ages.append((now - ticket.created_at).total_seconds() / 86400.0)
    return BacklogReport(
        open_count=open_count,
        submitted_count=submitted,
        overdue_count=overdue,
        mean_age_days=sum(ages) / len(ages) if ages else None,
    )


def rca_text_report(ticket: ProblemTicket) -> str:
    """Render a ticket and its RCA document as a structured text report."""
    lines = [
        f"Problem {ticket.id} (incident {ticket.incident_id})",
        f"  assignee: {ticket.assignee}"
        + (f"; chain: {', '.join(ticket.management_chain)}" if ticket.management_chain else ""),
        f"  state: {ticket.state.value}; due {ticket.due_at.isoformat()}",
    ]
    if ticket.submitted_at:
        lateness = "LATE" if ticket.submitted_late else "on time"
        lines.append(f"  submitted: {ticket.submitted_at.isoformat()} ({lateness})")
    doc = ticket.rca
    if doc is None:
        lines.append("  no RCA document submitted")
        return "\n".join(lines)
    lines.append("  timeline:")
    for event in doc.timeline:
        lines.append(f"    {event.at.isoformat()}  {event.text}")
    lines.append("  causal factors:")
    for category, factors in doc.fishbone:
        if factors:
            lines.append(f"    {category}: {'; '.join(factors)}")
    lines.append("  five whys:")
    for index, step in enumerate(doc.five_whys, start=1):
        lines.append(f"    {index}. {step.question} -> {step.answer}")
    lines.append(f"  root cause: {doc.root_cause}")
    lines.append("  corrective actions:")
    for item in doc.corrective_actions:
        lines.append(f"    - {item.action} ({item.owner}, due {item.target_date})")
    if doc.preventative_actions:
        lines.append("  preventative actions:")
        for item in doc.preventative_actions:
            lines.append(f"    - {item.action} ({item.owner}, due {item.target_date})")
    for review in ticket.reviews:
        lines.append(
            f"  review by {review.reviewer}: {review.decision.value} ({review.note})"
        )
    return "\n".join(lines)


def rca_to_dict(doc: RcaDocument) -> dict:
    """JSON-safe form of an RCA document (inverse of rca_from_dict)."""
    return {
        "timeline": [
            {"at": to_rfc3339(event.at), "text": event.text} for event in doc.timeline
        ],
        "fishbone": [
            {"category": category, "factors": list(factors)}
            for category, factors in doc.fishbone
        ],
        "five_whys": [
            {"question": step.question, "answer": step.answer, "asks_about": step.asks_about}
            for step in doc.five_whys
        ],
        "root_cause": doc.root_cause,
        "corrective_actions": [
            {"action": item.action, "owner": item.owner, "target_date": item.target_date}
            for item in doc.corrective_actions
        ],
        "preventative_actions": [
            {"action": item.action, "owner": item.owner, "target_date": item.target_date}
            for item in doc.preventative_actions
        ],
    }


def _action_items(raw: Any, key: str) -> tuple[ActionItem, ...]:
    items = []
    for i, entry in enumerate(raw or []):
        try:
            items.append(
                ActionItem(
                    action=str(entry["action"]),
                    owner=str(entry["owner"]),
                    target_date=str(entry["target_date"]),
                )
            )
        except (KeyError, TypeError) as exc:
            raise ValidationError(f"{key}[{i}]: missing {exc}") from None
    return tuple(items)


def rca_from_dict(data: Mapping[str, Any]) -> RcaDocument:
    """Parse the wire form of an RCA document; structural errors only."""
    try:
        timeline = tuple(
            TimelineEvent(at=parse_rfc3339(str(entry["at"])), text=str(entry["text"]))
            for entry in data.get("timeline", [])
        )
        fishbone = tuple(
            (str(entry["category"]), tuple(str(f) for f in entry.get("factors", [])))
            for entry in data.get("fishbone", [])
        )
        five_whys = tuple(
            WhyStep(
                question=str(entry["question"]),
                answer=str(entry["answer"]),
                asks_about=entry.get("asks_about"),
            )
            for entry in data.get("five_whys", [])
        )
    except (KeyError, TypeError) as exc:
        raise ValidationError(f"malformed RCA document: missing {exc}") from None
    return RcaDocument(
        timeline=timeline,
        fishbone=fishbone,
        five_whys=five_whys,
        root_cause=str(data.get("root_cause", "")),
        corrective_actions=_action_items(data.get("corrective_actions"), "corrective_actions"),
        preventative_actions=_action_items(
            data.get("preventative_actions"), "preventative_actions"
        ),
    )
