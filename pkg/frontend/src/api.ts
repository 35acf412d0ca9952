// Thin fetch client for the availd HTTP API. Every non-2xx response is
// raised as ApiRejection carrying the server's error envelope so callers
// can surface the violated rule by name.

import {
  type ApiErrorBody,
  type DashboardSnapshot,
  type Incident,
  type IncidentState,
  type Product,
  isApiErrorBody,
  isDashboardSnapshot,
  isIncident,
  isProduct,
} from "./types.js";

export class ApiRejection extends Error {
  readonly status: number;
  readonly body: ApiErrorBody;

  constructor(status: number, body: ApiErrorBody) {
    super(body.message);
    this.name = "ApiRejection";
    this.status = status;
    this.body = body;
  }

  /** Rule name if the server named one (state-machine refusals do). */
  get rule(): string | null {
    const rule = this.body.details["rule"];
    return typeof rule === "string" ? rule : null;
  }
}

export interface Period {
  from: string;
  to: string;
}

export class OpsClient {
  constructor(
    private readonly baseUrl: string = "",
    private readonly actor: string = "console",
  ) {}

  private async request(
    method: string,
    path: string,
    payload?: unknown,
  ): Promise<unknown> {
    const headers: Record<string, string> = { "X-Actor": this.actor };
    if (payload !== undefined) headers["Content-Type"] = "application/json";
    const response = await fetch(`${this.baseUrl}/api/v1${path}`, {
      method,
      headers,
      body: payload === undefined ? undefined : JSON.stringify(payload),
    });
    const body: unknown = await response.json();
    if (!response.ok) {
      const envelope: ApiErrorBody = isApiErrorBody(body)
        ? body
        : { code: "unknown", message: `HTTP ${response.status}`, details: {} };
      throw new ApiRejection(response.status, envelope);
    }
    return body;
  }

  async products(): Promise<Product[]> {
    const body = await this.request("GET", "/products");
    if (!Array.isArray(body) || !body.every(isProduct)) {
      throw new Error("malformed /products payload");
    }
    return body;
  }

  async dashboard(): Promise<DashboardSnapshot> {
    const body = await this.request("GET", "/dashboard");
    if (!isDashboardSnapshot(body)) {
      throw new Error("malformed /dashboard payload");
    }
    return body;
  }

  availability(
    productId: string,
    period: Period,
    view: "percent" | "minutes",
  ): Promise<unknown> {
    const query = new URLSearchParams({ ...period, view });
    return this.request(
      "GET",
      `/products/${encodeURIComponent(productId)}/availability?${query}`,
    );
  }

  async incidents(state?: IncidentState): Promise<Incident[]> {
    const suffix = state ? `?state=${state}` : "";
    const body = await this.request("GET", `/incidents${suffix}`);
    if (!Array.isArray(body) || !body.every(isIncident)) {
      throw new Error("malformed /incidents payload");
    }
    return body;
  }

  async transitionIncident(
    incidentId: string,
    toState: IncidentState,
    fields?: Record<string, string>,
  ): Promise<Incident> {
    const payload: Record<string, unknown> = { to_state: toState };
    if (fields) payload["fields"] = fields;
    const body = await this.request(
      "POST",
      `/incidents/${encodeURIComponent(incidentId)}/transition`,
      payload,
    );
    if (!isIncident(body)) throw new Error("malformed incident payload");
    return body;
  }

  closeIncident(incidentId: string): Promise<unknown> {
    return this.request(
      "POST",
      `/incidents/${encodeURIComponent(incidentId)}/close`,
      {},
    );
  }

  reviewRecord(
    recordId: string,
    decision: "confirm" | "reject",
    note?: string,
  ): Promise<unknown> {
    const payload: Record<string, unknown> = { decision };
    if (note) payload["note"] = note;
    return this.request(
      "POST",
      `/outage-records/${encodeURIComponent(recordId)}/review`,
      payload,
    );
  }

  records(state?: string): Promise<unknown> {
    const suffix = state ? `?state=${state}` : "";
    return this.request("GET", `/outage-records${suffix}`);
  }

  problems(): Promise<unknown> {
    return this.request("GET", "/problems");
  }
}
