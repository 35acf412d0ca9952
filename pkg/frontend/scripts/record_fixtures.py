"""Record API response fixtures for the console's contract tests.

Drives a scripted scenario against the backend through its HTTP surface
(in-process test client, same wire format as a live server) and freezes
the JSON responses under tests/fixtures/. Re-run after changing the API:

    python3 scripts/record_fixtures.py
"""
from __future__ import annotations

import copy
import json
from datetime import datetime, timedelta, timezone
from pathlib import Path

from fastapi.testclient import TestClient

from availd.api import create_app
from availd.config import parse_config
from availd.store import ServiceStore

FIXTURES = Path(__file__).resolve().parent.parent / "tests" / "fixtures"

CONFIG = {
    "service": {
        "refresh_interval_seconds": 60,
        "rca_sla_days": 10,
        "rca_default_assignee": "problem-desk",
        "rca_default_chain": "service-manager",
    },
    "products": [
        {"id": "web", "name": "Corporate Web", "sla_target_percent": 99.9},
        {
            "id": "filings",
            "name": "Filings Portal",
            "sla_target_percent": 99.5,
            "schedule": [
                {"weekday": d, "start": "06:00", "end": "22:00"} for d in range(5)
            ],
        },
        {
            "id": "batch",
            "name": "Weekend Batch",
            "sla_target_percent": 99.0,
            "schedule": [{"weekday": 5, "start": "00:00", "end": "24:00"}],
        },
    ],
    "monitors": [
        {
            "id": "m-web",
            "product_id": "web",
            "layer": "external-probe",
            "metric": "http_ok",
            "comparator": "<",
            "threshold": 1,
            "severity_on_fire": "Sev1",
            "dedup_window_minutes": 30,
        }
    ],
}

INCIDENT_STATES = ("New", "Classified", "InProgress", "Resolved", "Closed")
HOPS = {
    "New": (),
    "Classified": ("Classified",),
    "InProgress": ("Classified", "InProgress"),
    "Resolved": ("Classified", "InProgress", "Resolved"),
    "Closed": ("Classified", "InProgress", "Resolved", "Closed"),
}


def rfc3339(dt: datetime) -> str:
    return dt.isoformat().replace("+00:00", "Z")


def save(name: str, payload) -> None:
    path = FIXTURES / name
    path.write_text(json.dumps(payload, indent=2, sort_keys=True) + "\n")
    print(f"wrote {path.relative_to(FIXTURES.parent.parent)}")


def drive_incident_to(client: TestClient, state: str, causes_outage=False) -> str:
    created = client.post(
        "/api/v1/incidents",
        json={
            "product_ids": ["web"],
            "severity": "Sev3",
            "title": f"fixture incident in {state}",
            "causes_outage": causes_outage,
        },
        headers={"X-Actor": "svc-desk"},
    )
    assert created.status_code == 201, created.text
    incident_id = created.json()["id"]
    for hop in HOPS[state]:
        if hop == "Closed":
            response = client.post(
                f"/api/v1/incidents/{incident_id}/close",
                headers={"X-Actor": "svc-desk"},
            )
        else:
            response = client.post(
                f"/api/v1/incidents/{incident_id}/transition",
                json={"to_state": hop},
                headers={"X-Actor": "svc-desk"},
            )
        assert response.status_code == 200, response.text
    return incident_id


def main() -> None:
    FIXTURES.mkdir(parents=True, exist_ok=True)
    store = ServiceStore(parse_config(copy.deepcopy(CONFIG), environ={}))
    with TestClient(create_app(store)) as client:
        # an 8-hour probe outage on the 24x7 product, this calendar year so
        # the year-to-date dashboard includes it (480 min > the ytd budget)
        fired = datetime(2026, 3, 10, 4, 0, tzinfo=timezone.utc)
        for _ in range(96):
            response = client.post(
                "/api/v1/alerts",
                json={
                    "monitor_id": "m-web",
                    "fired_at": rfc3339(fired),
                    "value": 0.0,
                    "message": "probe target down",
                },
            )
            assert response.status_code == 202, response.text
            fired += timedelta(minutes=5)
        for payload in (
            {"to_state": "Classified"},
            {"to_state": "InProgress"},
            {
                "to_state": "Resolved",
                "fields": {
                    "repaired_at": "2026-03-10T11:45:00Z",
                    "recovered_at": "2026-03-10T11:55:00Z",
                    "restored_at": "2026-03-10T12:00:00Z",
                },
            },
        ):
            response = client.post(
                "/api/v1/incidents/INC-000001/transition",
                json=payload,
                headers={"X-Actor": "oncall"},
            )
            assert response.status_code == 200, response.text
        closure = client.post(
            "/api/v1/incidents/INC-000001/close", headers={"X-Actor": "oncall"}
        )
        assert closure.status_code == 200, closure.text
        record_id = closure.json()["outage_record"]["id"]
        confirmed = client.post(
            f"/api/v1/outage-records/{record_id}/review",
            json={"decision": "confirm"},
            headers={"X-Actor": "service-manager"},
        )
        assert confirmed.status_code == 200, confirmed.text

        # a handful of live incidents across the board
        for state in ("New", "Classified", "InProgress", "Resolved"):
            drive_incident_to(client, state)

        save("products.json", client.get("/api/v1/products").json())
        save("dashboard.json", client.get("/api/v1/dashboard").json())

        march = {"from": "2026-03-01T00:00:00Z", "to": "2026-04-01T00:00:00Z"}
        for view in ("percent", "minutes"):
            save(
                f"availability-web-{view}.json",
                client.get(
                    "/api/v1/products/web/availability",
                    params={**march, "view": view},
                ).json(),
            )
        # Saturday-only product over a Mon-Fri window: availability undefined
        save(
            "availability-batch-undefined.json",
            client.get(
                "/api/v1/products/batch/availability",
                params={
                    "from": "2026-03-02T00:00:00Z",
                    "to": "2026-03-06T00:00:00Z",
                    "view": "percent",
                },
            ).json(),
        )

        save("incidents.json", client.get("/api/v1/incidents").json())

        # full legality matrix: one fresh incident per ordered state pair,
        # all through the transition endpoint (Closed routes to the close
        # workflow server-side). state_after is re-read over the wire so the
        # idempotent Closed-close redelivery is distinguishable from a hop.
        matrix = []
        for from_state in INCIDENT_STATES:
            for to_state in INCIDENT_STATES:
                incident_id = drive_incident_to(client, from_state)
                response = client.post(
                    f"/api/v1/incidents/{incident_id}/transition",
                    json={"to_state": to_state},
                    headers={"X-Actor": "svc-desk"},
                )
                entry = {
                    "from": from_state,
                    "to": to_state,
                    "allowed": response.status_code == 200,
                    "state_after": client.get(
                        f"/api/v1/incidents/{incident_id}"
                    ).json()["state"],
                }
                if response.status_code != 200:
                    body = response.json()
                    entry["status"] = response.status_code
                    entry["code"] = body["code"]
                    entry["rule"] = body.get("details", {}).get("rule")
                matrix.append(entry)
        save("transition-matrix.json", matrix)

        # one canonical rejection envelope for the error-surfacing test
        rejected_id = drive_incident_to(client, "New")
        rejection = client.post(
            f"/api/v1/incidents/{rejected_id}/transition",
            json={"to_state": "Resolved"},
            headers={"X-Actor": "svc-desk"},
        )
        assert rejection.status_code == 409, rejection.text
        save("transition-rejected.json", rejection.json())


if __name__ == "__main__":
    main()
