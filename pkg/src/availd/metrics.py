"""Pure availability, reliability, and incident-lifecycle computations.

No storage, no clock access: every function is a pure function of its
inputs. Internal resolution is whole seconds; callers round for display.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from datetime import datetime, timedelta
from enum import Enum
from typing import Iterable, Sequence

from .errors import ValidationError
from .timeutil import ensure_utc

DAY_SECONDS = 86400
WEEKDAY_NAMES = ("mon", "tue", "wed", "thu", "fri", "sat", "sun")


@dataclass(frozen=True, order=True)
class TimeInterval:
    """Half-open interval [start, end) in UTC at second precision."""

    start: datetime
    end: datetime

    def __post_init__(self):
        object.__setattr__(self, "start", ensure_utc(self.start))
        object.__setattr__(self, "end", ensure_utc(self.end))
        if self.start >= self.end:
            raise ValidationError(
                f"interval start must precede end: {self.start.isoformat()} >= "
                f"{self.end.isoformat()}"
            )

    @property
    def duration_seconds(self) -> int:
        return int((self.end - self.start).total_seconds())

    def contains(self, instant: datetime) -> bool:
        return self.start <= instant < self.end

    def overlaps(self, other: "TimeInterval") -> bool:
        return self.start < other.end and other.start < self.end

    def intersect(self, other: "TimeInterval") -> "TimeInterval | None":
        start = max(self.start, other.start)
        end = min(self.end, other.end)
        if start >= end:
            return None
        return TimeInterval(start, end)


def merge_intervals(intervals: Iterable[TimeInterval]) -> list[TimeInterval]:
    """Union of intervals: overlapping and abutting pieces are coalesced."""
    ordered = sorted(intervals, key=lambda iv: iv.start)
    merged: list[TimeInterval] = []
    for iv in ordered:
        if merged and iv.start <= merged[-1].end:
            if iv.end > merged[-1].end:
                merged[-1] = TimeInterval(merged[-1].start, iv.end)
        else:
            merged.append(iv)
    return merged


def subtract_intervals(
    base: Sequence[TimeInterval], holes: Iterable[TimeInterval]
) -> list[TimeInterval]:
    """Remove ``holes`` from ``base``; pieces may split around each hole."""
    result = list(base)
    for hole in merge_intervals(holes):
        next_result: list[TimeInterval] = []
        for iv in result:
            if not iv.overlaps(hole):
                next_result.append(iv)
                continue
            if iv.start < hole.start:
                next_result.append(TimeInterval(iv.start, hole.start))
            if hole.end < iv.end:
                next_result.append(TimeInterval(hole.end, iv.end))
        result = next_result
    return result


def total_seconds(intervals: Iterable[TimeInterval]) -> int:
    return sum(iv.duration_seconds for iv in intervals)


@dataclass(frozen=True)
class WeeklyWindow:
    """Planned-uptime window on one weekday, as offsets from midnight UTC."""

    weekday: int  # 0 = Monday .. 6 = Sunday
    start_offset: int  # seconds from midnight
    end_offset: int  # seconds from midnight, up to 86400

    def __post_init__(self):
        if not 0 <= self.weekday <= 6:
            raise ValidationError(f"weekday out of range: {self.weekday}")
        if not 0 <= self.start_offset < self.end_offset <= DAY_SECONDS:
            raise ValidationError(
                f"window offsets invalid: [{self.start_offset}, {self.end_offset})"
            )


@dataclass(frozen=True)
class OperationsSchedule:
    """Weekly planned-uptime windows plus absolute maintenance exceptions."""

    weekly_windows: tuple[WeeklyWindow, ...]
    maintenance_exceptions: tuple[TimeInterval, ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "weekly_windows", tuple(self.weekly_windows))
        object.__setattr__(
            self, "maintenance_exceptions", tuple(self.maintenance_exceptions)
        )
        if not self.weekly_windows:
            raise ValidationError("schedule must define at least one weekly window")
        by_day: dict[int, list[WeeklyWindow]] = {}
        for window in self.weekly_windows:
            by_day.setdefault(window.weekday, []).append(window)
        for weekday, windows in by_day.items():
            windows.sort(key=lambda w: w.start_offset)
            for earlier, later in zip(windows, windows[1:]):
                if later.start_offset < earlier.end_offset:
                    raise ValidationError(
                        f"overlapping windows on {WEEKDAY_NAMES[weekday]}: "
                        f"[{earlier.start_offset}, {earlier.end_offset}) and "
                        f"[{later.start_offset}, {later.end_offset})"
                    )

    @classmethod
    def always_on(cls) -> "OperationsSchedule":
        """24x7 schedule: one full-day window per weekday."""
        return cls(tuple(WeeklyWindow(d, 0, DAY_SECONDS) for d in range(7)))


def expand_schedule(
    schedule: OperationsSchedule, period: TimeInterval
) -> list[TimeInterval]:
    """Instantiate weekly windows over ``period`` as absolute intervals.

    Returns disjoint, sorted intervals clipped to the period, with
    maintenance exceptions removed. Abutting day windows coalesce (a 24x7
    month is a single interval).
    """
    day = datetime(
        period.start.year, period.start.month, period.start.day, tzinfo=period.start.tzinfo
    )
    pieces: list[TimeInterval] = []
    while day < period.end:
        for window in schedule.weekly_windows:
            if window.weekday != day.weekday():
                continue
            absolute = TimeInterval(
                day + timedelta(seconds=window.start_offset),
                day + timedelta(seconds=window.end_offset),
            )
            clipped = absolute.intersect(period)
            if clipped is not None:
                pieces.append(clipped)
        day += timedelta(days=1)
    return subtract_intervals(merge_intervals(pieces), schedule.maintenance_exceptions)


@dataclass(frozen=True)
class AvailabilityResult:
    """Uptime/downtime split over planned time.

    ``availability_percent`` is None when there was no planned uptime in
    the period (availability is undefined, never silently 0% or 100%).
    """

    planned_seconds: int
    downtime_seconds: int
    uptime_seconds: int
    availability_percent: float | None

    @property
    def defined(self) -> bool:
        return self.availability_percent is not None


def compute_availability(
    planned: Sequence[TimeInterval], outages: Iterable[TimeInterval]
) -> AvailabilityResult:
    """Availability = uptime / (uptime + downtime) over planned windows.

    Outages are unioned (double-counting is impossible) and intersected
    with planned time: downtime outside planned windows does not count.
    ``planned`` must already be disjoint and sorted (expand_schedule output).
    """
    for earlier, later in zip(planned, planned[1:]):
        if later.start < earlier.end:
            raise ValidationError("planned intervals must be disjoint and sorted")
    planned_total = total_seconds(planned)
    if planned_total == 0:
        return AvailabilityResult(0, 0, 0, None)
    down = 0
    for outage in merge_intervals(outages):
        for window in planned:
            hit = window.intersect(outage)
            if hit is not None:
                down += hit.duration_seconds
    up = planned_total - down
    return AvailabilityResult(planned_total, down, up, 100.0 * up / planned_total)


class NinesLabel(str, Enum):
    TWO_NINES = "two-nines"
    THREE_NINES = "three-nines"
    FOUR_NINES = "four-nines"
    FIVE_NINES = "five-nines"


@dataclass(frozen=True)
class NinesTier:
    label: NinesLabel
    percent: float
    downtime_per_year: timedelta
    downtime_per_week: timedelta


_NINES = (
    (NinesLabel.TWO_NINES, 99.0),
    (NinesLabel.THREE_NINES, 99.9),
    (NinesLabel.FOUR_NINES, 99.99),
    (NinesLabel.FIVE_NINES, 99.999),
)


def nines_ladder() -> list[NinesTier]:
    """The standard availability tiers with their downtime budgets.

    Budgets use a 365-day year and a 7-day week.
    """
    tiers = []
    for label, percent in _NINES:
        down_fraction = 1.0 - percent / 100.0
        tiers.append(
            NinesTier(
                label=label,
                percent=percent,
                downtime_per_year=timedelta(days=365) * down_fraction,
                downtime_per_week=timedelta(days=7) * down_fraction,
            )
        )
    return tiers


def allowed_downtime(
    target_percent: float, period: TimeInterval, schedule: OperationsSchedule
) -> timedelta:
    """Downtime budget for an SLA target over the schedule's planned time."""
    if not 0 < target_percent <= 100:
        raise ValidationError(
            f"target percent must be in (0, 100]: {target_percent}"
        )
    planned = total_seconds(expand_schedule(schedule, period))
    return timedelta(seconds=(1.0 - target_percent / 100.0) * planned)


@dataclass(frozen=True)
class ReliabilityEstimate:
    """R(t) = exp(-lambda * t): probability of failure-free operation."""

    failure_intensity: float  # failures per hour
    period_hours: float
    probability: float

    @property
    def percent(self) -> float:
        return self.probability * 100.0


def reliability(failure_intensity: float, period_hours: float) -> ReliabilityEstimate:
    if failure_intensity < 0:
        raise ValidationError(f"failure intensity must be >= 0: {failure_intensity}")
    if period_hours < 0:
        raise ValidationError(f"period must be >= 0: {period_hours}")
    return ReliabilityEstimate(
        failure_intensity=failure_intensity,
        period_hours=period_hours,
        probability=math.exp(-failure_intensity * period_hours),
    )


def estimate_failure_intensity(failure_count: int, exposure_hours: float) -> float:
    """Observed failure intensity: failures per hour of exposure."""
    if failure_count < 0:
        raise ValidationError(f"failure count must be >= 0: {failure_count}")
    if exposure_hours <= 0:
        raise ValidationError(f"exposure must be > 0: {exposure_hours}")
    return failure_count / exposure_hours


@dataclass(frozen=True)
class SampleCounts:
    mttr: int
    mttf: int
    mtbf: int


@dataclass(frozen=True)
class LifecycleMetrics:
    """MTTR/MTTF/MTBF in seconds; a metric is None when it has no samples."""

    mttr_seconds: float | None
    mttf_seconds: float | None
    mtbf_seconds: float | None
    sample_counts: SampleCounts


def lifecycle_metrics(
    history: Sequence[tuple[datetime, datetime]]
) -> LifecycleMetrics:
    """Incident-lifecycle means over (occurred_at, restored_at) pairs.

    MTTR averages occurrence-to-restoration over every pair. MTTF averages
    the failure-free gap (previous restoration to next occurrence) and MTBF
    the occurrence-to-occurrence span, both needing at least two pairs;
    with fewer they are reported absent rather than zero.
    """
    pairs = [(ensure_utc(a), ensure_utc(b)) for a, b in history]
    for occurred, restored in pairs:
        if occurred >= restored:
            raise ValidationError(
                f"occurrence must precede restoration: {occurred.isoformat()}"
            )
    for (_, prev_restored), (next_occurred, _) in zip(pairs, pairs[1:]):
        if next_occurred < prev_restored:
            raise ValidationError("incident pairs overlap or are out of order")

    repair = [(b - a).total_seconds() for a, b in pairs]
    to_failure = [
        (nxt[0] - prev[1]).total_seconds() for prev, nxt in zip(pairs, pairs[1:])
    ]
    between = [
        (nxt[0] - prev[0]).total_seconds() for prev, nxt in zip(pairs, pairs[1:])
    ]
    return LifecycleMetrics(
        mttr_seconds=sum(repair) / len(repair) if repair else None,
        mttf_seconds=sum(to_failure) / len(to_failure) if to_failure else None,
        mtbf_seconds=sum(between) / len(between) if between else None,
        sample_counts=SampleCounts(len(repair), len(to_failure), len(between)),
    )


@dataclass(frozen=True)
class SlaEvaluation:
    """Breach report: negative margin means contractual exposure."""

    met: bool
    margin_seconds: float


def evaluate_sla(target_percent: float, result: AvailabilityResult) -> SlaEvaluation:
    """Compare achieved availability against a target percentage.

    margin = allowed downtime - actual downtime for the same planned time.
    """
    if not 0 < target_percent <= 100:
        raise ValidationError(f"target percent must be in (0, 100]: {target_percent}")
    if not result.defined:
        raise ValidationError("availability undefined: no planned uptime in period")
    allowed = (1.0 - target_percent / 100.0) * result.planned_seconds
    return SlaEvaluation(
        met=result.availability_percent >= target_percent,
        margin_seconds=allowed - result.downtime_seconds,
    )
