// Browser entry point: fetch, render, wire events. All logic lives in
// viewmodel.ts / render.ts; this file only touches the DOM.

import { ApiRejection, OpsClient } from "./api.js";
import { renderDashboard, renderError, renderIncidents } from "./render.js";
import type { IncidentState } from "./types.js";
import type { ViewMode } from "./viewmodel.js";

const client = new OpsClient("", "console");

let viewMode: ViewMode = "percent";

function section(id: string): HTMLElement {
  const el = document.getElementById(id);
  if (!el) throw new Error(`missing #${id}`);
  return el;
}

async function refreshDashboard(): Promise<void> {
  const snapshot = await client.dashboard();
  section("dashboard").innerHTML = renderDashboard(snapshot, viewMode);
}

async function refreshIncidents(): Promise<void> {
  const incidents = await client.incidents();
  section("incidents").innerHTML = renderIncidents(incidents);
}

function showError(message: string): void {
  section("errors").innerHTML = message;
  window.setTimeout(() => {
    section("errors").innerHTML = "";
  }, 6000);
}

async function act(incidentId: string, toState: IncidentState): Promise<void> {
  try {
    if (toState === "Closed") {
      await client.closeIncident(incidentId);
    } else {
      await client.transitionIncident(incidentId, toState);
    }
  } catch (error) {
    if (error instanceof ApiRejection) {
      showError(renderError(error.body));
      return;
    }
    throw error;
  } finally {
    await Promise.all([refreshIncidents(), refreshDashboard()]);
  }
}

function wire(): void {
  section("dashboard").addEventListener("click", (event) => {
    const target = event.target as HTMLElement;
    const view = target.dataset["view"];
    if (view === "percent" || view === "minutes") {
      viewMode = view;
      void refreshDashboard();
    }
  });
  section("incidents").addEventListener("click", (event) => {
    const target = event.target as HTMLElement;
    const incidentId = target.dataset["incident"];
    const toState = target.dataset["toState"] as IncidentState | undefined;
    if (incidentId && toState) void act(incidentId, toState);
  });
}

async function boot(): Promise<void> {
  wire();
  try {
    await Promise.all([refreshDashboard(), refreshIncidents()]);
  } catch (error) {
    showError(
      `<div class="error-banner">cannot reach the service: ` +
        `${error instanceof Error ? error.message : String(error)}</div>`,
    );
  }
  window.setInterval(() => void refreshDashboard(), 60_000);
}

void boot();
