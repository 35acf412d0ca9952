"""Threshold-alert intake and the probe simulator.

Monitors watch products from one of four layers (infrastructure pings,
external probes, APM, custom log scanners). Each carries a threshold
rule; a violating sample becomes an alert, and a pure classifier decides
whether that alert opens a new incident or attaches to the one the same
monitor already has open, so the ingest path stays testable without a
clock or a store.

A tiny line-oriented scenario language drives synthetic probes::

    # keep-alive probe, one sample every 5 minutes
    monitor m-web interval 300
    down m-web 2025-03-10T04:00:00Z 2025-03-10T08:00:00Z

Probe ticks are aligned to the Unix epoch grid, so a scenario replays to
the identical event stream regardless of when it is run. Each tick that
falls inside a down range emits one firing (value 0.0).
"""
from __future__ import annotations

from dataclasses import dataclass
from datetime import datetime, timedelta, timezone
from enum import Enum
from typing import Iterable, Sequence

from .errors import ScenarioParseError, ValidationError
from .incidents import Severity
from .metrics import TimeInterval
from .timeutil import ensure_utc, parse_rfc3339


class MonitorLayer(str, Enum):
    INFRASTRUCTURE = "infrastructure"
    EXTERNAL_PROBE = "external-probe"
    APM = "apm"
    CUSTOM_LOG = "custom-log"


class Comparator(str, Enum):
    GT = ">"
    GE = ">="
    LT = "<"
    LE = "<="


class AlertDisposition(str, Enum):
    CREATED = "created"
    ATTACHED = "attached"
    IGNORED = "ignored"
    REJECTED = "rejected"


@dataclass(frozen=True)
class MonitorProfile:
    monitor_id: str
    product_id: str
    layer: MonitorLayer
    metric: str
    comparator: Comparator
    threshold: float
    severity_on_fire: Severity = Severity.SEV2
    dedup_window: timedelta = timedelta(minutes=30)

    def __post_init__(self) -> None:
        if self.dedup_window <= timedelta(0):
            raise ValidationError(
                f"monitor {self.monitor_id}: dedup window must be positive"
            )


@dataclass(frozen=True)
class AlertEvent:
    monitor_id: str
    fired_at: datetime
    value: float
    message: str = ""


def violates(profile: MonitorProfile, value: float) -> bool:
    """True when a sample breaks the monitor's threshold."""
    threshold = profile.threshold
    if profile.comparator == Comparator.GT:
        return value > threshold
    if profile.comparator == Comparator.GE:
        return value >= threshold
    if profile.comparator == Comparator.LT:
        return value < threshold
    return value <= threshold


@dataclass(frozen=True)
class AlertDecision:
    disposition: AlertDisposition
    incident_id: str | None = None


def decide_alert(
    profile: MonitorProfile,
    event: AlertEvent,
    open_incident_id: str | None,
    last_fired_at: datetime | None,
) -> AlertDecision:
    """Classify one violating alert against the monitor's current thread.

    ``open_incident_id`` is the not-yet-Closed incident this monitor last
    opened or fed, if any; ``last_fired_at`` is the previous firing time.
    A firing within ``dedup_window`` of the previous one folds into the
    open incident; only once the thread has gone quiet for longer than
    the window (or the incident has closed) does a firing open a new one.
    """
    fired_at = ensure_utc(event.fired_at)
    if not violates(profile, event.value):
        return AlertDecision(AlertDisposition.IGNORED)
    if open_incident_id is not None and last_fired_at is not None:
        gap = abs((fired_at - last_fired_at).total_seconds())
        if gap <= profile.dedup_window.total_seconds():
            return AlertDecision(AlertDisposition.ATTACHED, open_incident_id)
    return AlertDecision(AlertDisposition.CREATED)


# -- probe scenarios ------------------------------------------------------


@dataclass(frozen=True)
class ProbeScenario:
    intervals: tuple[tuple[str, int], ...]  # (monitor_id, seconds), declaration order
    downs: tuple[tuple[str, TimeInterval], ...]

    def interval_for(self, monitor_id: str) -> int:
        for declared, seconds in self.intervals:
            if declared == monitor_id:
                return seconds
        raise ValidationError(f"monitor {monitor_id} not declared in scenario")


def parse_scenario(text: str) -> ProbeScenario:
    """Parse the probe scenario grammar; errors carry the 1-based line.

    Grammar, one directive per line (``#`` starts a comment)::

        monitor <id> interval <seconds>
        down <id> <start RFC3339> <end RFC3339>
    """
    intervals: list[tuple[str, int]] = []
    declared: set[str] = set()
    downs: list[tuple[str, TimeInterval]] = []
    for line_no, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        tokens = line.split()
        if tokens[0] == "monitor":
            if len(tokens) != 4 or tokens[2] != "interval":
                raise ScenarioParseError(
                    "monitor takes: monitor <id> interval <seconds>", line=line_no
                )
            monitor_id = tokens[1]
            if monitor_id in declared:
                raise ScenarioParseError(
                    f"monitor {monitor_id} declared twice", line=line_no
                )
            try:
                seconds = int(tokens[3])
            except ValueError:
                raise ScenarioParseError(
                    f"interval {tokens[3]!r} is not an integer", line=line_no
                ) from None
            if seconds <= 0:
                raise ScenarioParseError("interval must be positive", line=line_no)
            declared.add(monitor_id)
            intervals.append((monitor_id, seconds))
        elif tokens[0] == "down":
            if len(tokens) != 4:
                raise ScenarioParseError(
                    "down takes: down <id> <start> <end>", line=line_no
                )
            monitor_id = tokens[1]
            if monitor_id not in declared:
                raise ScenarioParseError(
                    f"down references undeclared monitor {monitor_id}", line=line_no
                )
            try:
                start = parse_rfc3339(tokens[2])
                end = parse_rfc3339(tokens[3])
            except ValidationError as exc:
                raise ScenarioParseError(str(exc), line=line_no) from exc
            if end <= start:
                raise ScenarioParseError("down end must be after start", line=line_no)
            downs.append((monitor_id, TimeInterval(start, end)))
        else:
            raise ScenarioParseError(
                f"unknown directive {tokens[0]!r}", line=line_no
            )
    return ProbeScenario(intervals=tuple(intervals), downs=tuple(downs))


_EPOCH = datetime(1970, 1, 1, tzinfo=timezone.utc)


def probe_ticks(window: TimeInterval, interval_seconds: int) -> list[datetime]:
    """Epoch-grid-aligned sample times in [start, end)."""
    first = int((window.start - _EPOCH).total_seconds())
    remainder = first % interval_seconds
    if remainder:
        first += interval_seconds - remainder
    last = int((window.end - _EPOCH).total_seconds())
    return [
        _EPOCH + timedelta(seconds=s)
        for s in range(first, last, interval_seconds)
    ]


def run_probe_scenario(scenario: ProbeScenario) -> list[AlertEvent]:
    """The deterministic alert stream a scenario generates: one firing
    per probe tick inside a down range, nothing while up."""
    fired: dict[str, set[datetime]] = {}
    for monitor_id, window in scenario.downs:
        interval = scenario.interval_for(monitor_id)
        ticks = fired.setdefault(monitor_id, set())
        ticks.update(probe_ticks(window, interval))
    events = [
        AlertEvent(
            monitor_id=monitor_id,
            fired_at=tick,
            value=0.0,
            message="probe target down",
        )
        for monitor_id, ticks in fired.items()
        for tick in ticks
    ]
    events.sort(key=lambda event: (event.fired_at, event.monitor_id))
    return events


def monitor_coverage(
    profiles: Sequence[MonitorProfile], product_ids: Iterable[str]
) -> dict[str, dict[str, bool]]:
    """Per-product map of which monitoring layers have coverage."""
    coverage = {
        product_id: {layer.value: False for layer in MonitorLayer}
        for product_id in product_ids
    }
    for profile in profiles:
        if profile.product_id in coverage:
            coverage[profile.product_id][profile.layer.value] = True
    return coverage
