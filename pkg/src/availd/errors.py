"""Exception hierarchy shared across the service."""
from __future__ import annotations


class AvaildError(Exception):
    """Base class for all service errors."""

    code = "error"

    def __init__(self, message: str, details: dict | None = None):
        super().__init__(message)
        self.message = message
        self.details = details or {}


class ValidationError(AvaildError):
    """Input violates a precondition or a domain invariant."""

    code = "validation"


class NotFoundError(AvaildError):
    """Referenced entity does not exist."""

    code = "not_found"


class StateMachineError(AvaildError):
    """Operation not permitted from the entity's current state.

    ``rule`` names the violated transition rule so callers can surface it.
    """

    code = "state_machine"

    def __init__(self, message: str, rule: str, details: dict | None = None):
        details = dict(details or {})
        details.setdefault("rule", rule)
        super().__init__(message, details)
        self.rule = rule


class WorkflowError(AvaildError):
    """Workflow-level violation (e.g. reviewing a non-draft record)."""

    code = "workflow"


class IndependenceError(WorkflowError):
    """RCA reviewer must be independent of the assignee."""

    code = "independence"


class SchedulingError(AvaildError):
    """Release window falls outside the calendar or inside a freeze."""

    code = "scheduling"


class UnknownMonitorError(AvaildError):
    """Alert references a monitor that is not configured."""

    code = "unknown_monitor"


class ScenarioParseError(AvaildError):
    """Probe scenario file is malformed; carries the offending line number."""

    code = "scenario_parse"

    def __init__(self, message: str, line: int):
        super().__init__(f"line {line}: {message}", {"line": line})
        self.line = line


class AppendError(AvaildError):
    """Event could not be appended to the log."""

    code = "append"


class ReplayError(AvaildError):
    """Event log replay halted; carries the offending sequence number."""

    code = "replay"

    def __init__(self, message: str, seq: int):
        super().__init__(message, {"seq": seq})
        self.seq = seq


class ConfigError(AvaildError):
    """Service configuration is invalid; details list every problem found."""

    code = "config"

    def __init__(self, problems: list[str]):
        super().__init__(
            "invalid configuration: " + "; ".join(problems), {"problems": problems}
        )
        self.problems = problems
