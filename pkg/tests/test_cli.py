"""Command-line interface: simulate, report, export/import."""
from __future__ import annotations

import json

import pytest

from availd.cli import main
from availd.store import ServiceStore
from conftest import make_config, utc

SCENARIO = """\
monitor m-web interval 300
down m-web 2025-03-10T04:00:00Z 2025-03-10T08:00:00Z
"""

CONFIG_TOML = """\
[service]
rca_default_assignee = "problem-desk"

[[products]]
id = "web"
name = "Web portal"
sla_target_percent = 99.9

[[products]]
id = "filings"
name = "Filings"
sla_target_percent = 99.5

[[products.schedule]]
weekday = 0
start = "06:00"
end = "22:00"

[[monitors]]
id = "m-web"
product_id = "web"
layer = "external-probe"
metric = "http_ok"
comparator = "<"
threshold = 1
severity_on_fire = "Sev1"
"""


@pytest.fixture
def scenario_file(tmp_path):
    path = tmp_path / "outage.scenario"
    path.write_text(SCENARIO)
    return path


@pytest.fixture
def config_file(tmp_path):
    path = tmp_path / "availd.toml"
    path.write_text(CONFIG_TOML)
    return path


class TestSimulate:
    def test_prints_one_event_per_line(self, scenario_file, capsys):
        assert main(["simulate", "--scenario", str(scenario_file)]) == 0
        lines = capsys.readouterr().out.strip().splitlines()
        assert len(lines) == 48
        first = json.loads(lines[0])
        assert first == {
            "monitor_id": "m-web",
            "fired_at": "2025-03-10T04:00:00Z",
            "value": 0.0,
            "message": "probe target down",
        }

    def test_ingests_into_store_when_given_one(
        self, scenario_file, config_file, tmp_path, capsys
    ):
        data_dir = tmp_path / "data"
        code = main([
            "simulate", "--scenario", str(scenario_file),
            "--config", str(config_file), "--data-dir", str(data_dir),
        ])
        assert code == 0
        out = capsys.readouterr().out
        assert "ingested 48 events" in out
        assert "created=1" in out
        assert "attached=47" in out

    def test_parse_error_exits_2_with_line_number(self, tmp_path, capsys):
        bad = tmp_path / "bad.scenario"
        bad.write_text("monitor a interval 60\nfrobnicate\n")
        assert main(["simulate", "--scenario", str(bad)]) == 2
        err = capsys.readouterr().err
        assert "line 2" in err


class TestReport:
    def _seed(self, config_file, data_dir):
        store = ServiceStore(make_config(), data_dir)
        try:
            incident = store.open_incident(
                ["web"], "Sev1", "portal down", "oncall", utc(2025, 3, 10, 4),
                causes_outage=True,
            )
            for state in ("Classified", "InProgress"):
                store.transition_incident(incident.id, state, None, "oncall",
                                          utc(2025, 3, 10, 4))
            store.transition_incident(
                incident.id, "Resolved",
                {
                    "repaired_at": utc(2025, 3, 10, 7, 50),
                    "recovered_at": utc(2025, 3, 10, 7, 55),
                    "restored_at": utc(2025, 3, 10, 8),
                },
                "oncall", utc(2025, 3, 10, 8),
            )
            _, record, _ = store.close_incident(incident.id, "oncall", utc(2025, 3, 10, 9))
            store.review_record(record.id, "confirm", "mgr", utc(2025, 3, 11))
        finally:
            store.close()

    def test_json_report(self, config_file, tmp_path, capsys):
        data_dir = tmp_path / "data"
        self._seed(config_file, data_dir)
        code = main([
            "report", "--config", str(config_file), "--data-dir", str(data_dir),
            "--from", "2025-03-01T00:00:00Z", "--to", "2025-04-01T00:00:00Z",
        ])
        assert code == 0
        report = json.loads(capsys.readouterr().out)
        assert report["incidents"]["total"] == 1
        web = next(r for r in report["availability"] if r["product_id"] == "web")
        assert web["availability_percent"] == 99.4624
        assert web["met"] is False

    def test_text_report(self, config_file, tmp_path, capsys):
        data_dir = tmp_path / "data"
        self._seed(config_file, data_dir)
        code = main([
            "report", "--config", str(config_file), "--data-dir", str(data_dir),
            "--from", "2025-03-01T00:00:00Z", "--to", "2025-04-01T00:00:00Z",
            "--format", "text",
        ])
        assert code == 0
        out = capsys.readouterr().out
        assert "Executive report" in out
        assert "99.4624" in out
        assert "MISSED" in out
        assert "RCA backlog: 1 open" in out

    def test_bad_config_exits_2_with_itemized_problems(self, tmp_path, capsys):
        bad = tmp_path / "bad.toml"
        bad.write_text('[[products]]\nid = "web"\nsla_target_percent = 250\n')
        code = main([
            "report", "--config", str(bad), "--data-dir", str(tmp_path / "d"),
            "--from", "2025-03-01T00:00:00Z", "--to", "2025-04-01T00:00:00Z",
        ])
        assert code == 2
        err = capsys.readouterr().err
        assert "error:" in err
        assert "250" in err


class TestExportImport:
    def test_round_trip_between_data_dirs(
        self, scenario_file, config_file, tmp_path, capsys
    ):
        source = tmp_path / "source"
        main([
            "simulate", "--scenario", str(scenario_file),
            "--config", str(config_file), "--data-dir", str(source),
        ])
        capsys.readouterr()

        assert main(["export", "--data-dir", str(source)]) == 0
        exported = capsys.readouterr().out
        assert len(exported.splitlines()) > 48  # alert + incident events

        dump = tmp_path / "stream.ndjson"
        dump.write_text(exported)
        target = tmp_path / "target"
        target.mkdir()
        assert main(["import", str(dump), "--data-dir", str(target)]) == 0
        first = capsys.readouterr().out
        assert "(0 already present)" in first

        assert main(["import", str(dump), "--data-dir", str(target)]) == 0
        second = capsys.readouterr().out
        assert "imported 0 events" in second

        assert main(["export", "--data-dir", str(target)]) == 0
        assert capsys.readouterr().out == exported

    def test_export_since_sequence(self, scenario_file, config_file, tmp_path, capsys):
        source = tmp_path / "source"
        main([
            "simulate", "--scenario", str(scenario_file),
            "--config", str(config_file), "--data-dir", str(source),
        ])
        capsys.readouterr()
        assert main(["export", "--data-dir", str(source), "--from-seq", "48"]) == 0
        tail = capsys.readouterr().out.splitlines()
        assert json.loads(tail[0])["seq"] == 49
