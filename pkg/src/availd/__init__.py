"""availd: availability SLA management service.

Alerts become incidents, high-severity outage incidents become reviewed
outage records, confirmed records drive per-product SLA computation and
dashboards, significant incidents spawn root-cause-analysis tickets, and
change/release gates control what reaches production.
"""

__version__ = "0.1.0"
