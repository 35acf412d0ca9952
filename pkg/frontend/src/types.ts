// Wire types for the availd /api/v1 surface, plus runtime guards for the
// payloads the console actually renders. Guards narrow `unknown` so a
// misbehaving server fails loudly at the boundary instead of deep in the UI.

export type IncidentState =
  | "New"
  | "Classified"
  | "InProgress"
  | "Resolved"
  | "Closed";

export const INCIDENT_STATES: readonly IncidentState[] = [
  "New",
  "Classified",
  "InProgress",
  "Resolved",
  "Closed",
];

export type Severity = "Sev1" | "Sev2" | "Sev3" | "Sev4";

export interface Product {
  id: string;
  name: string;
  sla_target_percent: number;
}

export interface DashboardRow {
  product_id: string;
  product_name: string;
  sla_target_percent: number;
  planned_minutes: number;
  downtime_minutes: number;
  allowed_downtime_minutes: number;
  availability_percent: number | null;
  met: boolean | null;
  note: string | null;
}

export interface DashboardSnapshot {
  generated_at: string;
  period: { from: string; to: string };
  rows: DashboardRow[];
}

export interface Incident {
  id: string;
  state: IncidentState;
  severity: Severity;
  title: string;
  product_ids: string[];
  causes_outage: boolean;
  occurred_at: string | null;
  detected_at: string | null;
  restored_at: string | null;
}

export interface ApiErrorBody {
  code: string;
  message: string;
  details: Record<string, unknown>;
}

// --- guards ---------------------------------------------------------------

function isRecord(value: unknown): value is Record<string, unknown> {
  return typeof value === "object" && value !== null && !Array.isArray(value);
}

function isOptionalNumber(value: unknown): value is number | null {
  return value === null || typeof value === "number";
}

function isOptionalString(value: unknown): value is string | null {
  return value === null || typeof value === "string";
}

export function isIncidentState(value: unknown): value is IncidentState {
  return (INCIDENT_STATES as readonly unknown[]).includes(value);
}

export function isProduct(value: unknown): value is Product {
  return (
    isRecord(value) &&
    typeof value.id === "string" &&
    typeof value.name === "string" &&
    typeof value.sla_target_percent === "number"
  );
}

export function isDashboardRow(value: unknown): value is DashboardRow {
  return (
    isRecord(value) &&
    typeof value.product_id === "string" &&
    typeof value.product_name === "string" &&
    typeof value.sla_target_percent === "number" &&
    typeof value.planned_minutes === "number" &&
    typeof value.downtime_minutes === "number" &&
    typeof value.allowed_downtime_minutes === "number" &&
    isOptionalNumber(value.availability_percent) &&
    (value.met === null || typeof value.met === "boolean") &&
    isOptionalString(value.note)
  );
}

export function isDashboardSnapshot(value: unknown): value is DashboardSnapshot {
  return (
    isRecord(value) &&
    typeof value.generated_at === "string" &&
    isRecord(value.period) &&
    typeof value.period.from === "string" &&
    typeof value.period.to === "string" &&
    Array.isArray(value.rows) &&
    value.rows.every(isDashboardRow)
  );
}

export function isIncident(value: unknown): value is Incident {
  return (
    isRecord(value) &&
    typeof value.id === "string" &&
    isIncidentState(value.state) &&
    typeof value.severity === "string" &&
    typeof value.title === "string" &&
    Array.isArray(value.product_ids) &&
    value.product_ids.every((p) => typeof p === "string") &&
    typeof value.causes_outage === "boolean"
  );
}

export function isApiErrorBody(value: unknown): value is ApiErrorBody {
  return (
    isRecord(value) &&
    typeof value.code === "string" &&
    typeof value.message === "string" &&
    isRecord(value.details)
  );
}
