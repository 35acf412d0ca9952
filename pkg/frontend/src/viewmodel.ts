// Pure presentation logic: SLA band colors, the percent/minutes toggle,
// and the incident action map. No DOM, no fetch — everything here is unit
// testable against recorded API fixtures.

import type { ApiErrorBody, DashboardRow, IncidentState } from "./types.js";

// --- SLA bands --------------------------------------------------------------

export type Band = "met" | "missed" | "no-data";

export function bandFor(met: boolean | null): Band {
  if (met === null) return "no-data";
  return met ? "met" : "missed";
}

// --- percent/minutes toggle -------------------------------------------------

export type ViewMode = "percent" | "minutes";

export function formatPercent(value: number | null): string {
  return value === null ? "—" : `${value.toFixed(4)}%`;
}

export function formatMinutes(value: number): string {
  return `${value.toFixed(2)} min`;
}

export interface DashboardCells {
  product: string;
  target: string;
  /** availability% in percent mode; downtime / allowed in minutes mode */
  values: string[];
  band: Band;
  note: string | null;
}

export function dashboardCells(row: DashboardRow, mode: ViewMode): DashboardCells {
  const values =
    mode === "percent"
      ? [formatPercent(row.availability_percent)]
      : [
          formatMinutes(row.downtime_minutes),
          formatMinutes(row.allowed_downtime_minutes),
          formatMinutes(row.planned_minutes),
        ];
  return {
    product: row.product_name,
    target: `${row.sla_target_percent}%`,
    values,
    band: bandFor(row.met),
    note: row.note,
  };
}

/**
 * Both views of a row must describe the same outage math:
 *   downtime ≈ planned × (1 − availability/100)
 *   allowed  = planned × (1 − target/100)
 * within the server's rounding (percent to 4 decimals, minutes to 2).
 */
export function rowConsistent(row: DashboardRow): boolean {
  if (row.availability_percent === null || row.met === null) {
    // undefined availability: nothing to cross-check, minutes must be zero
    return row.planned_minutes === 0 && row.downtime_minutes === 0;
  }
  const percentQuantum = row.planned_minutes * (0.00005 / 100);
  const minutesQuantum = 0.005;
  const downtimeFromPercent =
    row.planned_minutes * (1 - row.availability_percent / 100);
  if (
    Math.abs(downtimeFromPercent - row.downtime_minutes) >
    percentQuantum + minutesQuantum + 1e-9
  ) {
    return false;
  }
  const allowed = row.planned_minutes * (1 - row.sla_target_percent / 100);
  return Math.abs(allowed - row.allowed_downtime_minutes) <= minutesQuantum + 1e-9;
}

// --- incident actions ---------------------------------------------------------

/** Mirror of the server's transition table; the contract suite holds the
 * two in lockstep via a recorded legality matrix. */
export const LEGAL_TRANSITIONS: Readonly<
  Record<IncidentState, readonly IncidentState[]>
> = {
  New: ["Classified"],
  Classified: ["InProgress"],
  InProgress: ["Resolved"],
  Resolved: ["Closed", "InProgress"],
  Closed: ["InProgress"],
};

export interface IncidentAction {
  label: string;
  toState: IncidentState;
}

const ACTION_LABELS: Record<IncidentState, string> = {
  New: "Reset",
  Classified: "Classify",
  InProgress: "Start work",
  Resolved: "Resolve",
  Closed: "Close",
};

export function enabledActions(state: IncidentState): IncidentAction[] {
  return LEGAL_TRANSITIONS[state].map((toState) => ({
    label:
      toState === "InProgress" && (state === "Resolved" || state === "Closed")
        ? "Reopen"
        : ACTION_LABELS[toState],
    toState,
  }));
}

// --- errors -------------------------------------------------------------------

/** One-line banner text for a refused operation; names the violated rule
 * whenever the server did. */
export function describeRejection(body: ApiErrorBody): string {
  const rule = body.details["rule"];
  if (typeof rule === "string" && rule.length > 0) {
    return `${body.message} (rule: ${rule})`;
  }
  return body.message;
}
