"""HTTP surface: endpoint contracts, the error envelope, actor attribution."""
from __future__ import annotations

import pytest
from fastapi.testclient import TestClient

from availd.alerts import parse_scenario, run_probe_scenario
from availd.api import create_app
from availd.store import ServiceStore
from conftest import make_config

SCENARIO = """\
monitor m-web interval 300
down m-web 2025-03-10T04:00:00Z 2025-03-10T08:00:00Z
"""

MARCH = {"from": "2025-03-01T00:00:00Z", "to": "2025-04-01T00:00:00Z"}

RCA_DOC = {
    "timeline": [{"at": "2025-03-10T04:00:00Z", "text": "probes went red"}],
    "fishbone": [{"category": "Technology", "factors": ["pool exhausted"]}],
    "five_whys": [
        {"question": "Why down?", "answer": "Leak.", "asks_about": None},
        {"question": "Why leak?", "answer": "Missed close().", "asks_about": 0},
    ],
    "root_cause": "connection leak",
    "corrective_actions": [
        {"action": "patch", "owner": "web-team", "target_date": "2025-03-12"}
    ],
}


@pytest.fixture
def client():
    store = ServiceStore(make_config())
    app = create_app(store)
    with TestClient(app) as test_client:
        yield test_client


def post_outage_alerts(client) -> str:
    """Feed the four-hour probe scenario through the webhook; returns the
    incident id every firing landed on."""
    incident_ids = set()
    for event in run_probe_scenario(parse_scenario(SCENARIO)):
        response = client.post(
            "/api/v1/alerts",
            json={
                "monitor_id": event.monitor_id,
                "fired_at": event.fired_at.isoformat().replace("+00:00", "Z"),
                "value": event.value,
                "message": event.message,
            },
        )
        assert response.status_code == 202, response.text
        body = response.json()
        if "incident_id" in body:
            incident_ids.add(body["incident_id"])
    assert len(incident_ids) == 1
    return incident_ids.pop()


def resolve_and_close(client, incident_id: str, actor="oncall") -> dict:
    headers = {"X-Actor": actor}
    for state in ("Classified", "InProgress"):
        response = client.post(
            f"/api/v1/incidents/{incident_id}/transition",
            json={"to_state": state},
            headers=headers,
        )
        assert response.status_code == 200, response.text
    response = client.post(
        f"/api/v1/incidents/{incident_id}/transition",
        json={
            "to_state": "Resolved",
            "fields": {
                "repaired_at": "2025-03-10T07:40:00Z",
                "recovered_at": "2025-03-10T07:55:00Z",
                "restored_at": "2025-03-10T08:00:00Z",
            },
        },
        headers=headers,
    )
    assert response.status_code == 200, response.text
    response = client.post(f"/api/v1/incidents/{incident_id}/close", headers=headers)
    assert response.status_code == 200, response.text
    return response.json()


class TestReadSide:
    def test_health(self, client):
        body = client.get("/api/v1/health").json()
        assert body["status"] == "ok"

    def test_products(self, client):
        body = client.get("/api/v1/products").json()
        assert [p["id"] for p in body] == ["web", "filings"]
        assert body[0]["sla_target_percent"] == 99.9

    def test_availability_requires_period(self, client):
        response = client.get("/api/v1/products/web/availability")
        assert response.status_code == 400
        body = response.json()
        assert body["code"] == "validation"
        assert "from" in body["message"]

    def test_unknown_product_is_404(self, client):
        response = client.get(
            "/api/v1/products/nonesuch/availability", params=MARCH
        )
        assert response.status_code == 404
        assert response.json()["code"] == "not_found"

    def test_dashboard_has_a_row_per_product(self, client):
        body = client.get("/api/v1/dashboard").json()
        assert [row["product_id"] for row in body["rows"]] == ["web", "filings"]


class TestAlertIntake:
    def test_alert_lifecycle_dispositions(self, client):
        created = client.post(
            "/api/v1/alerts",
            json={"monitor_id": "m-web", "fired_at": "2025-03-10T04:00:00Z", "value": 0},
        )
        assert created.status_code == 202
        assert created.json()["disposition"] == "created"
        attached = client.post(
            "/api/v1/alerts",
            json={"monitor_id": "m-web", "fired_at": "2025-03-10T04:05:00Z", "value": 0},
        )
        assert attached.json()["disposition"] == "attached"
        ignored = client.post(
            "/api/v1/alerts",
            json={"monitor_id": "m-web", "fired_at": "2025-03-10T04:06:00Z", "value": 1},
        )
        assert ignored.json()["disposition"] == "ignored"
        counters = client.get("/api/v1/alerts/counters").json()
        assert counters == {"created": 1, "attached": 1, "ignored": 1, "rejected": 0}

    def test_unknown_monitor_is_422(self, client):
        response = client.post(
            "/api/v1/alerts",
            json={"monitor_id": "m-ghost", "fired_at": "2025-03-10T04:00:00Z", "value": 0},
        )
        assert response.status_code == 422
        assert response.json()["code"] == "unknown_monitor"

    def test_malformed_alert_is_400(self, client):
        response = client.post("/api/v1/alerts", json={"monitor_id": "m-web"})
        assert response.status_code == 400
        assert "fired_at" in response.json()["message"]

    def test_non_object_body_is_400(self, client):
        response = client.post("/api/v1/alerts", json=[1, 2, 3])
        assert response.status_code == 400


class TestIncidentEndpoints:
    def test_manual_incident_roundtrip(self, client):
        response = client.post(
            "/api/v1/incidents",
            json={"product_ids": ["web"], "severity": "Sev3", "title": "slow search"},
            headers={"X-Actor": "svc-desk"},
        )
        assert response.status_code == 201
        incident = response.json()
        assert incident["id"] == "INC-000001"
        assert incident["state"] == "New"
        assert incident["audit_trail"][0]["actor"] == "svc-desk"
        fetched = client.get("/api/v1/incidents/INC-000001").json()
        assert fetched == incident

    def test_actor_defaults_to_anonymous(self, client):
        response = client.post(
            "/api/v1/incidents",
            json={"product_ids": ["web"], "severity": "Sev3", "title": "x"},
        )
        assert response.json()["audit_trail"][0]["actor"] == "anonymous"

    def test_illegal_transition_surfaces_rule_in_details(self, client):
        client.post(
            "/api/v1/incidents",
            json={"product_ids": ["web"], "severity": "Sev3", "title": "x"},
        )
        response = client.post(
            "/api/v1/incidents/INC-000001/transition", json={"to_state": "Resolved"}
        )
        assert response.status_code == 409
        body = response.json()
        assert body["code"] == "state_machine"
        assert "New->Resolved" in body["details"]["rule"]

    def test_close_before_resolved_is_409(self, client):
        client.post(
            "/api/v1/incidents",
            json={"product_ids": ["web"], "severity": "Sev3", "title": "x"},
        )
        response = client.post("/api/v1/incidents/INC-000001/close")
        assert response.status_code == 409
        assert response.json()["details"]["rule"] == "close requires state Resolved"

    def test_unknown_incident_is_404(self, client):
        response = client.post(
            "/api/v1/incidents/INC-999999/transition", json={"to_state": "Classified"}
        )
        assert response.status_code == 404

    def test_state_filter(self, client):
        client.post(
            "/api/v1/incidents",
            json={"product_ids": ["web"], "severity": "Sev3", "title": "x"},
        )
        assert len(client.get("/api/v1/incidents", params={"state": "New"}).json()) == 1
        assert client.get("/api/v1/incidents", params={"state": "Closed"}).json() == []
        bad = client.get("/api/v1/incidents", params={"state": "Limbo"})
        assert bad.status_code == 400


class TestOutageWorkflow:
    def test_webhook_to_dashboard(self, client):
        incident_id = post_outage_alerts(client)
        closure = resolve_and_close(client, incident_id)

        assert closure["incident"]["state"] == "Closed"
        record = closure["outage_record"]
        problem = closure["problem"]
        assert record["id"] == f"OR-{incident_id}"
        assert record["state"] == "Draft"
        assert problem["id"] == f"PR-{incident_id}"

        review = client.post(
            f"/api/v1/outage-records/{record['id']}/review",
            json={"decision": "confirm"},
            headers={"X-Actor": "service-manager"},
        )
        assert review.status_code == 200
        assert review.json()["state"] == "Confirmed"
        assert review.json()["reviewer"] == "service-manager"

        pct = client.get(
            "/api/v1/products/web/availability", params={**MARCH, "view": "percent"}
        ).json()
        assert pct["availability_percent"] == 99.4624
        assert pct["met"] is False
        minutes = client.get(
            "/api/v1/products/web/availability", params={**MARCH, "view": "minutes"}
        ).json()
        assert minutes["planned_minutes"] == 44640.0
        assert minutes["downtime_minutes"] == 240.0
        assert minutes["allowed_downtime_minutes"] == 44.64
        assert minutes["margin_minutes"] == pytest.approx(-195.36)

    def test_duplicate_close_is_idempotent(self, client):
        incident_id = post_outage_alerts(client)
        first = resolve_and_close(client, incident_id)
        again = client.post(f"/api/v1/incidents/{incident_id}/close").json()
        assert again == first
        records = client.get("/api/v1/outage-records").json()
        assert len(records) == 1

    def test_reject_requires_note(self, client):
        incident_id = post_outage_alerts(client)
        record_id = resolve_and_close(client, incident_id)["outage_record"]["id"]
        bare = client.post(
            f"/api/v1/outage-records/{record_id}/review", json={"decision": "reject"}
        )
        assert bare.status_code == 400
        noted = client.post(
            f"/api/v1/outage-records/{record_id}/review",
            json={"decision": "reject", "note": "probe misfire"},
        )
        assert noted.status_code == 200
        assert noted.json()["state"] == "Rejected"

    def test_second_review_is_409(self, client):
        incident_id = post_outage_alerts(client)
        record_id = resolve_and_close(client, incident_id)["outage_record"]["id"]
        client.post(
            f"/api/v1/outage-records/{record_id}/review", json={"decision": "confirm"}
        )
        response = client.post(
            f"/api/v1/outage-records/{record_id}/review", json={"decision": "confirm"}
        )
        assert response.status_code == 409

    def test_record_state_filter(self, client):
        incident_id = post_outage_alerts(client)
        resolve_and_close(client, incident_id)
        assert (
            client.get("/api/v1/outage-records", params={"state": "Draft"})
            .json()[0]["incident_id"]
            == incident_id
        )
        assert client.get(
            "/api/v1/outage-records", params={"state": "Confirmed"}
        ).json() == []


class TestProblemEndpoints:
    def _spawned_problem(self, client) -> str:
        incident_id = post_outage_alerts(client)
        return resolve_and_close(client, incident_id)["problem"]["id"]

    def test_rca_submit_and_independent_review(self, client):
        problem_id = self._spawned_problem(client)
        submitted = client.post(
            f"/api/v1/problems/{problem_id}/rca",
            json=RCA_DOC,
            headers={"X-Actor": "problem-desk"},
        )
        assert submitted.status_code == 200
        assert submitted.json()["state"] == "RcaSubmitted"

        selfie = client.post(
            f"/api/v1/problems/{problem_id}/review",
            json={"decision": "approve"},
            headers={"X-Actor": "problem-desk"},
        )
        assert selfie.status_code == 409
        assert selfie.json()["code"] == "independence"

        approved = client.post(
            f"/api/v1/problems/{problem_id}/review",
            json={"decision": "approve", "note": "thorough"},
            headers={"X-Actor": "service-manager"},
        )
        assert approved.status_code == 200
        assert approved.json()["state"] == "Approved"

    def test_incomplete_rca_is_400_with_missing_parts(self, client):
        problem_id = self._spawned_problem(client)
        partial = {k: v for k, v in RCA_DOC.items() if k != "corrective_actions"}
        response = client.post(f"/api/v1/problems/{problem_id}/rca", json=partial)
        assert response.status_code == 400
        assert any(
            "corrective" in item for item in response.json()["details"]["missing"]
        )

    def test_problem_listing(self, client):
        problem_id = self._spawned_problem(client)
        listed = client.get("/api/v1/problems").json()
        assert [p["id"] for p in listed] == [problem_id]
        assert listed[0]["state"] == "Open"
        single = client.get(f"/api/v1/problems/{problem_id}").json()
        assert single["incident_id"] == problem_id.removeprefix("PR-")


class TestReleaseAndChangeEndpoints:
    RELEASE = {
        "name": "2026.09 portal",
        "pbi_ids": ["PBI-1"],
        "target_window": {
            "start": "2026-09-01T02:00:00Z",
            "end": "2026-09-01T06:00:00Z",
        },
        "checklist": [
            {"key": "rollback", "description": "rehearsed", "mandatory": True},
        ],
    }

    def _release_id(self, client) -> str:
        response = client.post("/api/v1/releases", json=self.RELEASE)
        assert response.status_code == 201, response.text
        return response.json()["id"]

    def test_release_pipeline(self, client):
        release_id = self._release_id(client)
        early = client.post(f"/api/v1/releases/{release_id}/approve")
        assert early.status_code == 409
        assert early.json()["details"]["rule"] == "approve requires state PrrPassed"

        prr = client.post(
            f"/api/v1/releases/{release_id}/prr",
            json={"statuses": {"rollback": {"status": "Passed"}}},
        )
        assert prr.status_code == 200
        assert prr.json()["state"] == "PrrPassed"

        assert (
            client.post(f"/api/v1/releases/{release_id}/approve").json()["state"]
            == "Approved"
        )
        assert (
            client.post(f"/api/v1/releases/{release_id}/deploy").json()["state"]
            == "Deployed"
        )

    def test_prr_body_validation(self, client):
        release_id = self._release_id(client)
        response = client.post(f"/api/v1/releases/{release_id}/prr", json={})
        assert response.status_code == 400

    def test_change_pipeline_and_queue(self, client):
        change = client.post(
            "/api/v1/changes",
            json={"description": "bump pool size", "category": "configuration",
                  "product_ids": ["web"]},
        ).json()
        queue = client.get("/api/v1/changes/review-queue").json()
        assert [c["id"] for c in queue] == [change["id"]]

        premature = client.post(f"/api/v1/changes/{change['id']}/execute")
        assert premature.status_code == 409
        assert premature.json()["details"]["rule"] == "execute requires state Approved"

        client.post(f"/api/v1/changes/{change['id']}/approve")
        executed = client.post(f"/api/v1/changes/{change['id']}/execute").json()
        assert executed["state"] == "Executed"
        verified = client.post(f"/api/v1/changes/{change['id']}/verify").json()
        assert verified["state"] == "Verified"
        assert client.get("/api/v1/changes/review-queue").json() == []


class TestExecutiveEndpoint:
    def test_report_shape(self, client):
        incident_id = post_outage_alerts(client)
        record_id = resolve_and_close(client, incident_id)["outage_record"]["id"]
        client.post(
            f"/api/v1/outage-records/{record_id}/review", json={"decision": "confirm"}
        )
        report = client.get("/api/v1/reports/executive", params=MARCH).json()
        assert report["incidents"]["total"] == 1
        assert report["incidents"]["by_severity"] == {"Sev1": 1}
        assert [b["product_id"] for b in report["breaches"]] == ["web"]
        assert report["rca_backlog"]["open"] == 1
