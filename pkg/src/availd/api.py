"""HTTP surface. Everything the service can do is reachable under /api/v1.

All endpoints are JSON. Errors use one envelope, {code, message, details};
state-machine refusals put the violated rule in details.rule so a client
can show it verbatim. The caller's identity comes from the X-Actor header
(no authentication by design — see README). Mutations return the updated
entity so clients never have to re-fetch to learn what happened.
"""
from __future__ import annotations

import asyncio
import contextlib
import logging
from datetime import datetime, timezone
from pathlib import Path
from typing import Any

from fastapi import FastAPI, Request
from fastapi.responses import JSONResponse
from fastapi.staticfiles import StaticFiles

from .errors import (
    AvaildError,
    NotFoundError,
    SchedulingError,
    StateMachineError,
    UnknownMonitorError,
    ValidationError,
    WorkflowError,
)
from .metrics import TimeInterval
from .store import (
    ServiceStore,
    change_to_dict,
    incident_to_dict,
    problem_to_dict,
    record_to_dict,
    release_to_dict,
)
from .timeutil import parse_rfc3339

log = logging.getLogger(__name__)

_STATUS_BY_ERROR = (
    (NotFoundError, 404),
    (UnknownMonitorError, 422),
    (StateMachineError, 409),
    (WorkflowError, 409),
    (SchedulingError, 409),
    (ValidationError, 400),
)


def _status_for(exc: AvaildError) -> int:
    for klass, status in _STATUS_BY_ERROR:
        if isinstance(exc, klass):
            return status
    return 500


def _actor(request: Request) -> str:
    return request.headers.get("X-Actor", "anonymous")


def _now() -> datetime:
    return datetime.now(timezone.utc).replace(microsecond=0)


async def _body(request: Request) -> dict:
    try:
        data = await request.json()
    except Exception:
        raise ValidationError("request body must be a JSON object") from None
    if not isinstance(data, dict):
        raise ValidationError("request body must be a JSON object")
    return data


def _parse_period(from_text: str | None, to_text: str | None) -> TimeInterval:
    if not from_text or not to_text:
        raise ValidationError("both 'from' and 'to' query parameters are required")
    start = parse_rfc3339(from_text)
    end = parse_rfc3339(to_text)
    if end <= start:
        raise ValidationError("'to' must be after 'from'")
    return TimeInterval(start, end)


def _interval_from(body: Any, key: str) -> TimeInterval:
    if not isinstance(body, dict) or "start" not in body or "end" not in body:
        raise ValidationError(f"{key} must be an object with start and end")
    start = parse_rfc3339(str(body["start"]))
    end = parse_rfc3339(str(body["end"]))
    if end <= start:
        raise ValidationError(f"{key}.end must be after {key}.start")
    return TimeInterval(start, end)


def create_app(store: ServiceStore, ui_dir: Path | str | None = None) -> FastAPI:
    refresh_seconds = store.config.refresh_interval_seconds

    @contextlib.asynccontextmanager
    async def lifespan(app: FastAPI):
        async def refresher() -> None:
            while True:
                await asyncio.sleep(refresh_seconds)
                try:
                    store.refresh_dashboard(_now())
                except Exception:  # keep the previous snapshot on any failure
                    log.exception("dashboard refresh failed")

        store.refresh_dashboard(_now())
        task = asyncio.create_task(refresher())
        try:
            yield
        finally:
            task.cancel()
            with contextlib.suppress(asyncio.CancelledError):
                await task
            store.close()

    app = FastAPI(title="availd", lifespan=lifespan, docs_url=None, redoc_url=None)

    @app.exception_handler(AvaildError)
    async def availd_error_handler(request: Request, exc: AvaildError):
        return JSONResponse(
            status_code=_status_for(exc),
            content={"code": exc.code, "message": str(exc), "details": exc.details},
        )

    # -- read side ---------------------------------------------------------

    @app.get("/api/v1/health")
    async def health():
        return {"status": "ok", "last_seq": store.last_seq}

    @app.get("/api/v1/products")
    async def list_products():
        return [
            {
                "id": product.id,
                "name": product.name,
                "sla_target_percent": product.sla_target_percent,
            }
            for product in store.config.products
        ]

    @app.get("/api/v1/products/{product_id}/availability")
    async def product_availability(product_id: str, request: Request):
        params = request.query_params
        period = _parse_period(params.get("from"), params.get("to"))
        view = params.get("view", "percent")
        return store.get_availability(product_id, period, view)

    @app.get("/api/v1/dashboard")
    async def dashboard():
        return store.dashboard(_now()).to_dict()

    @app.get("/api/v1/reports/executive")
    async def executive_report(request: Request):
        params = request.query_params
        period = _parse_period(params.get("from"), params.get("to"))
        return store.executive_report(period)

    @app.get("/api/v1/incidents")
    async def list_incidents(request: Request):
        state = request.query_params.get("state")
        incidents = store.list_incidents(
            None if state is None else _incident_state(state)
        )
        return [incident_to_dict(incident) for incident in incidents]

    @app.get("/api/v1/incidents/{incident_id}")
    async def get_incident(incident_id: str):
        return incident_to_dict(store.get_incident(incident_id))

    @app.get("/api/v1/outage-records")
    async def list_records(request: Request):
        state = request.query_params.get("state")
        parsed = None
        if state is not None:
            from .records import RecordState

            try:
                parsed = RecordState(state)
            except ValueError:
                raise ValidationError(f"unknown record state: {state}") from None
        return [record_to_dict(record) for record in store.list_records(parsed)]

    @app.get("/api/v1/outage-records/{record_id}")
    async def get_record(record_id: str):
        return record_to_dict(store.get_record(record_id))

    @app.get("/api/v1/problems")
    async def list_problems(request: Request):
        state = request.query_params.get("state")
        return [problem_to_dict(ticket) for ticket in store.list_problems(state)]

    @app.get("/api/v1/problems/{problem_id}")
    async def get_problem(problem_id: str):
        return problem_to_dict(store.get_problem(problem_id))

    @app.get("/api/v1/releases")
    async def list_releases():
        return [release_to_dict(release) for release in store.list_releases()]

    @app.get("/api/v1/releases/{release_id}")
    async def get_release(release_id: str):
        return release_to_dict(store.get_release(release_id))

    @app.get("/api/v1/changes")
    async def list_changes():
        return [change_to_dict(change) for change in store.list_changes()]

    @app.get("/api/v1/changes/review-queue")
    async def review_queue():
        return [change_to_dict(change) for change in store.review_queue(_now())]

    @app.get("/api/v1/alerts/counters")
    async def alert_counters():
        return store.alert_counters()

    # -- write side ----------------------------------------------------------

    @app.post("/api/v1/alerts", status_code=202)
    async def post_alert(request: Request):
        body = await _body(request)
        for field in ("monitor_id", "fired_at", "value"):
            if field not in body:
                raise ValidationError(f"alert body missing {field}")
        try:
            value = float(body["value"])
        except (TypeError, ValueError):
            raise ValidationError("alert value must be a number") from None
        fired_at = parse_rfc3339(str(body["fired_at"]))
        return store.ingest_alert(
            monitor_id=str(body["monitor_id"]),
            fired_at=fired_at,
            value=value,
            message=str(body.get("message", "")),
            actor=_actor(request),
        )

    @app.post("/api/v1/incidents", status_code=201)
    async def post_incident(request: Request):
        body = await _body(request)
        for field in ("product_ids", "severity", "title"):
            if field not in body:
                raise ValidationError(f"incident body missing {field}")
        occurred_at = (
            parse_rfc3339(str(body["occurred_at"]))
            if body.get("occurred_at")
            else None
        )
        incident = store.open_incident(
            product_ids=list(body["product_ids"]),
            severity=_severity(str(body["severity"])),
            title=str(body["title"]),
            actor=_actor(request),
            now=_now(),
            description=str(body.get("description", "")),
            causes_outage=bool(body.get("causes_outage", False)),
            occurred_at=occurred_at,
        )
        return incident_to_dict(incident)

    @app.post("/api/v1/incidents/{incident_id}/transition")
    async def post_transition(incident_id: str, request: Request):
        body = await _body(request)
        if "to_state" not in body:
            raise ValidationError("transition body missing to_state")
        incident = store.transition_incident(
            incident_id,
            _incident_state(str(body["to_state"])),
            body.get("fields"),
            _actor(request),
            _now(),
        )
        return incident_to_dict(incident)

    @app.post("/api/v1/incidents/{incident_id}/close")
    async def post_close(incident_id: str, request: Request):
        incident, record, problem = store.close_incident(
            incident_id, _actor(request), _now()
        )
        return {
            "incident": incident_to_dict(incident),
            "outage_record": record_to_dict(record) if record else None,
            "problem": problem_to_dict(problem) if problem else None,
        }

    @app.post("/api/v1/outage-records/{record_id}/review")
    async def post_record_review(record_id: str, request: Request):
        body = await _body(request)
        if "decision" not in body:
            raise ValidationError("review body missing decision")
        outage = (
            _interval_from(body["outage"], "outage") if body.get("outage") else None
        )
        record = store.review_record(
            record_id,
            _review_decision(str(body["decision"])),
            reviewer=_actor(request),
            now=_now(),
            outage=outage,
            product_ids=body.get("product_ids"),
            note=body.get("note"),
        )
        return record_to_dict(record)

    @app.post("/api/v1/problems/{problem_id}/rca")
    async def post_rca(problem_id: str, request: Request):
        body = await _body(request)
        ticket = store.submit_rca(problem_id, body, _actor(request), _now())
        return problem_to_dict(ticket)

    @app.post("/api/v1/problems/{problem_id}/review")
    async def post_rca_review(problem_id: str, request: Request):
        body = await _body(request)
        if "decision" not in body:
            raise ValidationError("review body missing decision")
        ticket = store.review_rca(
            problem_id,
            reviewer=_actor(request),
            decision=_rca_decision(str(body["decision"])),
            note=str(body.get("note", "")),
            now=_now(),
        )
        return problem_to_dict(ticket)

    @app.post("/api/v1/releases", status_code=201)
    async def post_release(request: Request):
        body = await _body(request)
        for field in ("name", "target_window"):
            if field not in body:
                raise ValidationError(f"release body missing {field}")
        release = store.create_release(
            name=str(body["name"]),
            pbi_ids=list(body.get("pbi_ids", [])),
            target_window=_interval_from(body["target_window"], "target_window"),
            checklist=body.get("checklist", []),
            actor=_actor(request),
            now=_now(),
        )
        return release_to_dict(release)

    @app.post("/api/v1/releases/{release_id}/prr")
    async def post_prr(release_id: str, request: Request):
        body = await _body(request)
        raw = body.get("statuses")
        if not isinstance(raw, dict):
            raise ValidationError("prr body requires a statuses object")
        statuses = {}
        for key, entry in raw.items():
            if not isinstance(entry, dict) or "status" not in entry:
                raise ValidationError(f"statuses[{key}] requires a status")
            statuses[key] = (str(entry["status"]), entry.get("note"))
        release = store.run_prr(release_id, statuses, _actor(request), _now())
        return release_to_dict(release)

    @app.post("/api/v1/releases/{release_id}/approve")
    async def post_release_approve(release_id: str, request: Request):
        return release_to_dict(
            store.approve_release(release_id, _actor(request), _now())
        )

    @app.post("/api/v1/releases/{release_id}/deploy")
    async def post_release_deploy(release_id: str, request: Request):
        return release_to_dict(
            store.deploy_release(release_id, _actor(request), _now())
        )

    @app.post("/api/v1/releases/{release_id}/cancel")
    async def post_release_cancel(release_id: str, request: Request):
        return release_to_dict(
            store.cancel_release(release_id, _actor(request), _now())
        )

    @app.post("/api/v1/changes", status_code=201)
    async def post_change(request: Request):
        body = await _body(request)
        for field in ("description", "category"):
            if field not in body:
                raise ValidationError(f"change body missing {field}")
        change = store.request_change(
            description=str(body["description"]),
            category=_change_category(str(body["category"])),
            actor=_actor(request),
            now=_now(),
            release_id=body.get("release_id"),
            product_ids=list(body.get("product_ids", [])),
            layer=str(body.get("layer", "in-house")),
            emergency=bool(body.get("emergency", False)),
        )
        return change_to_dict(change)

    @app.post("/api/v1/changes/{change_id}/approve")
    async def post_change_approve(change_id: str, request: Request):
        return change_to_dict(store.approve_change(change_id, _actor(request), _now()))

    @app.post("/api/v1/changes/{change_id}/reject")
    async def post_change_reject(change_id: str, request: Request):
        body = await _body(request)
        return change_to_dict(
            store.reject_change(
                change_id, _actor(request), _now(), note=str(body.get("note", ""))
            )
        )

    @app.post("/api/v1/changes/{change_id}/execute")
    async def post_change_execute(change_id: str, request: Request):
        return change_to_dict(store.execute_change(change_id, _actor(request), _now()))

    @app.post("/api/v1/changes/{change_id}/verify")
    async def post_change_verify(change_id: str, request: Request):
        return change_to_dict(store.verify_change(change_id, _actor(request), _now()))

    if ui_dir is not None and Path(ui_dir).is_dir():
        app.mount("/", StaticFiles(directory=str(ui_dir), html=True), name="ui")

    return app


def _incident_state(value: str):
    from .incidents import IncidentState

    try:
        return IncidentState(value)
    except ValueError:
        raise ValidationError(f"unknown incident state: {value}") from None


def _severity(value: str):
    from .incidents import Severity

    try:
        return Severity(value)
    except ValueError:
        raise ValidationError(f"unknown severity: {value}") from None


def _review_decision(value: str):
    from .records import ReviewDecision

    try:
        return ReviewDecision(value)
    except ValueError:
        raise ValidationError(f"unknown review decision: {value}") from None


def _rca_decision(value: str):
    from .problems import RcaDecision

    try:
        return RcaDecision(value)
    except ValueError:
        raise ValidationError(f"unknown review decision: {value}") from None


def _change_category(value: str):
    from .changes import ChangeCategory

    try:
        return ChangeCategory(value)
    except ValueError:
        raise ValidationError(f"unknown change category: {value}") from None
