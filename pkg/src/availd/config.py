"""Service configuration.

Configuration lives in one TOML file: the products under SLA (with their
operating schedules and targets), the monitor fleet, the release/freeze
calendars, and a handful of service-level knobs. Every problem found
during validation is collected so a bad file fails startup with the full
itemized list, not just the first complaint.

Scalar service keys can be overridden from the environment with
``AVAILD_`` + the upper-cased key, e.g. ``AVAILD_REFRESH_INTERVAL_SECONDS=5``.
"""
from __future__ import annotations

import os
from dataclasses import dataclass
from datetime import timedelta
from pathlib import Path
from typing import Any, Mapping

try:
    import tomllib
except ImportError:  # Python 3.10
    import tomli as tomllib

from .alerts import Comparator, MonitorLayer, MonitorProfile
from .errors import ConfigError, ValidationError
from .incidents import DEFAULT_SIGNIFICANT, Severity
from .metrics import OperationsSchedule, TimeInterval, WeeklyWindow
from .timeutil import parse_day_offset, parse_rfc3339

ENV_PREFIX = "AVAILD_"

_ENV_KEYS = {
    "refresh_interval_seconds": int,
    "rca_sla_days": int,
    "dashboard_period": str,
    "rca_default_assignee": str,
    "rca_default_chain": str,
    "significant_severities": "severity_list",
}


@dataclass(frozen=True)
class ProductConfig:
    id: str
    name: str
    sla_target_percent: float
    schedule: OperationsSchedule


@dataclass(frozen=True)
class ServiceConfig:
    products: tuple[ProductConfig, ...]
    monitors: tuple[MonitorProfile, ...] = ()
    significant_severities: frozenset[Severity] = frozenset(DEFAULT_SIGNIFICANT)
    rca_sla_days: int = 10
    refresh_interval_seconds: int = 60
    dashboard_period: str = "year-to-date"
    rca_default_assignee: str = "problem-management"
    rca_default_chain: str = "service-manager"
    release_windows: tuple[TimeInterval, ...] = ()
    freeze_windows: tuple[TimeInterval, ...] = ()

    def product(self, product_id: str) -> ProductConfig | None:
        for product in self.products:
            if product.id == product_id:
                return product
        return None

    def monitor(self, monitor_id: str) -> MonitorProfile | None:
        for profile in self.monitors:
            if profile.monitor_id == monitor_id:
                return profile
        return None


def _parse_schedule(
    raw: Mapping[str, Any], where: str, problems: list[str]
) -> OperationsSchedule:
    windows_raw = raw.get("schedule")
    exceptions_raw = raw.get("maintenance", [])
    exceptions = []
    for i, entry in enumerate(exceptions_raw):
        try:
            exceptions.append(
                TimeInterval(
                    parse_rfc3339(str(entry["start"])),
                    parse_rfc3339(str(entry["end"])),
                )
            )
        except (KeyError, ValidationError) as exc:
            problems.append(f"{where}: maintenance[{i}]: {exc}")
    if not windows_raw:
        schedule = OperationsSchedule.always_on()
        if exceptions:
            schedule = OperationsSchedule(
                weekly_windows=schedule.weekly_windows,
                maintenance_exceptions=tuple(exceptions),
            )
        return schedule
    windows = []
    for i, entry in enumerate(windows_raw):
        try:
            windows.append(
                WeeklyWindow(
                    weekday=int(entry["weekday"]),
                    start_offset=parse_day_offset(str(entry["start"])),
                    end_offset=parse_day_offset(str(entry["end"])),
                )
            )
        except (KeyError, TypeError, ValueError, ValidationError) as exc:
            problems.append(f"{where}: schedule[{i}]: {exc}")
    if not windows:
        return OperationsSchedule.always_on()
    try:
        return OperationsSchedule(
            weekly_windows=tuple(windows),
            maintenance_exceptions=tuple(exceptions),
        )
    except ValidationError as exc:
        problems.append(f"{where}: {exc}")
        return OperationsSchedule.always_on()


def _parse_windows(
    raw: Any, key: str, problems: list[str]
) -> tuple[TimeInterval, ...]:
    windows = []
    for i, entry in enumerate(raw or []):
        try:
            windows.append(
                TimeInterval(
                    parse_rfc3339(str(entry["start"])),
                    parse_rfc3339(str(entry["end"])),
                )
            )
        except (KeyError, TypeError, ValidationError) as exc:
            problems.append(f"{key}[{i}]: {exc}")
    return tuple(windows)


def _apply_env(service: dict, environ: Mapping[str, str], problems: list[str]) -> None:
    for key, kind in _ENV_KEYS.items():
        env_name = ENV_PREFIX + key.upper()
        if env_name not in environ:
            continue
        raw = environ[env_name]
        if kind is int:
            try:
                service[key] = int(raw)
            except ValueError:
                problems.append(f"{env_name}: {raw!r} is not an integer")
        elif kind == "severity_list":
            service[key] = [part.strip() for part in raw.split(",") if part.strip()]
        else:
            service[key] = raw


def parse_config(
    data: Mapping[str, Any], environ: Mapping[str, str] | None = None
) -> ServiceConfig:
    """Build a validated ServiceConfig from parsed TOML data."""
    problems: list[str] = []
    service = dict(data.get("service", {}))
    _apply_env(service, environ if environ is not None else os.environ, problems)

    products: list[ProductConfig] = []
    seen_products: set[str] = set()
    for i, entry in enumerate(data.get("products", [])):
        where = f"products[{i}]"
        product_id = str(entry.get("id", "")).strip()
        if not product_id:
            problems.append(f"{where}: missing id")
            continue
        if product_id in seen_products:
            problems.append(f"{where}: duplicate product id {product_id}")
            continue
        seen_products.add(product_id)
        try:
            target = float(entry.get("sla_target_percent", 0))
        except (TypeError, ValueError):
            problems.append(f"{where}: sla_target_percent is not a number")
            continue
        if not 0 < target <= 100:
            problems.append(
                f"{where}: sla_target_percent {target} not in (0, 100]"
            )
            continue
        schedule = _parse_schedule(entry, where, problems)
        products.append(
            ProductConfig(
                id=product_id,
                name=str(entry.get("name", product_id)),
                sla_target_percent=target,
                schedule=schedule,
            )
        )
    if not products and not problems:
        problems.append("no products configured")

    monitors: list[MonitorProfile] = []
    seen_monitors: set[str] = set()
    for i, entry in enumerate(data.get("monitors", [])):
        where = f"monitors[{i}]"
        monitor_id = str(entry.get("id", "")).strip()
        if not monitor_id:
            problems.append(f"{where}: missing id")
            continue
        if monitor_id in seen_monitors:
            problems.append(f"{where}: duplicate monitor id {monitor_id}")
            continue
        seen_monitors.add(monitor_id)
        product_id = str(entry.get("product_id", ""))
        if product_id not in seen_products:
            problems.append(
                f"{where}: references unknown product {product_id!r}"
            )
            continue
        try:
            profile = MonitorProfile(
                monitor_id=monitor_id,
                product_id=product_id,
                layer=MonitorLayer(str(entry.get("layer", "external-probe"))),
                metric=str(entry.get("metric", "up")),
                comparator=Comparator(str(entry.get("comparator", "<"))),
                threshold=float(entry.get("threshold", 1)),
                severity_on_fire=Severity(str(entry.get("severity_on_fire", "Sev2"))),
                dedup_window=timedelta(
                    minutes=float(entry.get("dedup_window_minutes", 30))
                ),
            )
        except (TypeError, ValueError, ValidationError) as exc:
            problems.append(f"{where}: {exc}")
            continue
        monitors.append(profile)

    significant: frozenset[Severity] = frozenset(DEFAULT_SIGNIFICANT)
    if "significant_severities" in service:
        names = service["significant_severities"]
        parsed: set[Severity] = set()
        for name in names:
            try:
                parsed.add(Severity(str(name)))
            except ValueError:
                problems.append(f"service.significant_severities: unknown {name!r}")
        if parsed:
            significant = frozenset(parsed)

    rca_sla_days = service.get("rca_sla_days", 10)
    if not isinstance(rca_sla_days, int) or rca_sla_days <= 0:
        problems.append(f"service.rca_sla_days: {rca_sla_days!r} must be a positive integer")
        rca_sla_days = 10
    refresh = service.get("refresh_interval_seconds", 60)
    if not isinstance(refresh, int) or refresh <= 0:
        problems.append(
            f"service.refresh_interval_seconds: {refresh!r} must be a positive integer"
        )
        refresh = 60
    period = str(service.get("dashboard_period", "year-to-date"))
    if period != "year-to-date":
        problems.append(
            f"service.dashboard_period: unknown period {period!r} "
            "(supported: year-to-date)"
        )

    release_windows = _parse_windows(
        data.get("release_windows"), "release_windows", problems
    )
    freeze_windows = _parse_windows(
        data.get("freeze_windows"), "freeze_windows", problems
    )

    if problems:
        raise ConfigError(problems)

    return ServiceConfig(
        products=tuple(products),
        monitors=tuple(monitors),
        significant_severities=significant,
        rca_sla_days=rca_sla_days,
        refresh_interval_seconds=refresh,
        dashboard_period=period,
        rca_default_assignee=str(service.get("rca_default_assignee", "problem-management")),
        rca_default_chain=str(service.get("rca_default_chain", "service-manager")),
        release_windows=release_windows,
        freeze_windows=freeze_windows,
    )


def load_config(
    path: Path | str, environ: Mapping[str, str] | None = None
) -> ServiceConfig:
    path = Path(path)
    try:
        with open(path, "rb") as handle:
            data = tomllib.load(handle)
    except FileNotFoundError:
        raise ConfigError([f"config file not found: {path}"]) from None
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError([f"{path}: {exc}"]) from exc
    return parse_config(data, environ)
