from __future__ import annotations

import sys
from datetime import datetime, timezone
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

from availd.config import ServiceConfig, parse_config


def utc(*args: int) -> datetime:
    return datetime(*args, tzinfo=timezone.utc)


BASE_CONFIG: dict = {
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
        },
        {
            "id": "m-cpu",
            "product_id": "web",
            "layer": "infrastructure",
            "metric": "cpu_pct",
            "comparator": ">",
            "threshold": 90,
            "severity_on_fire": "Sev2",
            "dedup_window_minutes": 30,
        },
    ],
}


def make_config(**overrides) -> ServiceConfig:
    data = {k: (dict(v) if isinstance(v, dict) else list(v)) for k, v in BASE_CONFIG.items()}
    data.update(overrides)
    return parse_config(data, environ={})


@pytest.fixture
def config() -> ServiceConfig:
    return make_config()


@pytest.fixture
def store(config):
    from availd.store import ServiceStore

    s = ServiceStore(config, data_dir=None)
    yield s
    s.close()
