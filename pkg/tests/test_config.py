"""Configuration loading: itemized validation and environment overrides."""
from __future__ import annotations

import copy

import pytest

from availd.config import ServiceConfig, load_config, parse_config
from availd.errors import ConfigError
from availd.incidents import Severity
from availd.metrics import TimeInterval
from conftest import BASE_CONFIG, utc


def base():
    return copy.deepcopy(BASE_CONFIG)


class TestParse:
    def test_base_fixture_parses(self):
        config = parse_config(base(), environ={})
        assert isinstance(config, ServiceConfig)
        assert [p.id for p in config.products] == ["web", "filings"]
        assert config.product("web").sla_target_percent == 99.9
        assert config.monitor("m-web").severity_on_fire == Severity.SEV1
        assert config.monitor("nonesuch") is None

    def test_product_without_schedule_runs_around_the_clock(self):
        config = parse_config(base(), environ={})
        web = config.product("web").schedule
        week = TimeInterval(utc(2025, 3, 3), utc(2025, 3, 10))
        from availd.metrics import expand_schedule, total_seconds

        assert total_seconds(expand_schedule(web, week)) == 7 * 86400

    def test_defaults(self):
        config = parse_config({"products": [{"id": "p", "sla_target_percent": 99.5}]},
                              environ={})
        assert config.rca_sla_days == 10
        assert config.refresh_interval_seconds == 60
        assert config.dashboard_period == "year-to-date"
        assert config.significant_severities == frozenset({Severity.SEV1, Severity.SEV2})

    def test_release_and_freeze_windows(self):
        data = base()
        data["release_windows"] = [
            {"start": "2025-06-01T00:00:00Z", "end": "2025-07-01T00:00:00Z"}
        ]
        data["freeze_windows"] = [
            {"start": "2025-06-15T00:00:00Z", "end": "2025-06-16T00:00:00Z"}
        ]
        config = parse_config(data, environ={})
        assert config.release_windows == (
            TimeInterval(utc(2025, 6, 1), utc(2025, 7, 1)),
        )
        assert config.freeze_windows == (
            TimeInterval(utc(2025, 6, 15), utc(2025, 6, 16)),
        )


class TestValidation:
    def test_all_problems_reported_at_once(self):
        data = base()
        data["products"].append({"id": "web", "sla_target_percent": 99})  # duplicate
        data["products"].append({"sla_target_percent": 99})  # missing id
        data["products"].append({"id": "neg", "sla_target_percent": -3})
        data["monitors"].append({"id": "m-ghost", "product_id": "ghost"})
        data["service"]["rca_sla_days"] = 0
        with pytest.raises(ConfigError) as err:
            parse_config(data, environ={})
        problems = err.value.details["problems"]
        assert len(problems) == 5
        joined = "\n".join(problems)
        assert "duplicate product id web" in joined
        assert "missing id" in joined
        assert "-3" in joined
        assert "unknown product 'ghost'" in joined
        assert "rca_sla_days" in joined

    def test_no_products_is_an_error(self):
        with pytest.raises(ConfigError) as err:
            parse_config({}, environ={})
        assert "no products configured" in err.value.details["problems"][0]

    def test_bad_monitor_enum_values(self):
        data = base()
        data["monitors"][0]["layer"] = "carrier-pigeon"
        data["monitors"][1]["comparator"] = "!="
        with pytest.raises(ConfigError) as err:
            parse_config(data, environ={})
        assert len(err.value.details["problems"]) == 2

    def test_bad_schedule_entries(self):
        data = base()
        data["products"][1]["schedule"].append(
            {"weekday": 9, "start": "06:00", "end": "22:00"}
        )
        with pytest.raises(ConfigError):
            parse_config(data, environ={})

    def test_unknown_dashboard_period(self):
        data = base()
        data["service"]["dashboard_period"] = "fiscal-quarter"
        with pytest.raises(ConfigError) as err:
            parse_config(data, environ={})
        assert "fiscal-quarter" in str(err.value)


class TestEnvOverrides:
    def test_scalars_override(self):
        config = parse_config(
            base(),
            environ={
                "AVAILD_REFRESH_INTERVAL_SECONDS": "5",
                "AVAILD_RCA_SLA_DAYS": "7",
                "AVAILD_RCA_DEFAULT_ASSIGNEE": "env-desk",
            },
        )
        assert config.refresh_interval_seconds == 5
        assert config.rca_sla_days == 7
        assert config.rca_default_assignee == "env-desk"

    def test_severity_list_override(self):
        config = parse_config(
            base(), environ={"AVAILD_SIGNIFICANT_SEVERITIES": "Sev1"}
        )
        assert config.significant_severities == frozenset({Severity.SEV1})

    def test_bad_env_integer_is_itemized(self):
        with pytest.raises(ConfigError) as err:
            parse_config(base(), environ={"AVAILD_REFRESH_INTERVAL_SECONDS": "soon"})
        assert "AVAILD_REFRESH_INTERVAL_SECONDS" in str(err.value)

    def test_unrelated_env_ignored(self):
        config = parse_config(base(), environ={"AVAILD_NOT_A_KEY": "x", "HOME": "/"})
        assert config.refresh_interval_seconds == 60


class TestLoadFile:
    TOML = """
[service]
rca_sla_days = 14

[[products]]
id = "web"
name = "Web portal"
sla_target_percent = 99.9

[[products.maintenance]]
start = "2025-03-16T02:00:00Z"
end = "2025-03-16T03:00:00Z"

[[monitors]]
id = "m-web"
product_id = "web"
layer = "external-probe"
metric = "http_ok"
comparator = "<"
threshold = 1
severity_on_fire = "Sev1"
"""

    def test_load_round_trip(self, tmp_path):
        path = tmp_path / "availd.toml"
        path.write_text(self.TOML)
        config = load_config(path, environ={})
        assert config.rca_sla_days == 14
        assert config.product("web").schedule.maintenance_exceptions == (
            TimeInterval(utc(2025, 3, 16, 2), utc(2025, 3, 16, 3)),
        )

    def test_missing_file(self, tmp_path):
        with pytest.raises(ConfigError) as err:
            load_config(tmp_path / "absent.toml", environ={})
        assert "not found" in str(err.value)

    def test_toml_syntax_error(self, tmp_path):
        path = tmp_path / "broken.toml"
        path.write_text("[service\n")
        with pytest.raises(ConfigError):
            load_config(path, environ={})
