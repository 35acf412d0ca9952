// HTML renderers. Pure string builders so the test suite can assert on
// markup without a DOM; main.ts injects the results and wires events.

import type { DashboardSnapshot, Incident } from "./types.js";
import {
  type ViewMode,
  dashboardCells,
  describeRejection,
  enabledActions,
} from "./viewmodel.js";
import type { ApiErrorBody } from "./types.js";

export function escapeHtml(text: string): string {
  return text
    .replace(/&/g, "&amp;")
    .replace(/</g, "&lt;")
    .replace(/>/g, "&gt;")
    .replace(/"/g, "&quot;");
}

const VIEW_HEADERS: Record<ViewMode, string[]> = {
  percent: ["Availability"],
  minutes: ["Downtime", "Allowed", "Planned"],
};

export function renderDashboard(
  snapshot: DashboardSnapshot,
  mode: ViewMode,
): string {
  const headers = ["Product", "Target", ...VIEW_HEADERS[mode], "Status"]
    .map((h) => `<th>${h}</th>`)
    .join("");
  const rows = snapshot.rows
    .map((row) => {
      const cells = dashboardCells(row, mode);
      const values = cells.values
        .map((v) => `<td class="num">${escapeHtml(v)}</td>`)
        .join("");
      const status =
        cells.band === "no-data"
          ? escapeHtml(cells.note ?? "no data")
          : cells.band === "met"
            ? "met"
            : "missed";
      return (
        `<tr class="band-${cells.band}" data-product="${escapeHtml(row.product_id)}">` +
        `<td>${escapeHtml(cells.product)}</td>` +
        `<td class="num">${escapeHtml(cells.target)}</td>` +
        values +
        `<td class="status">${status}</td>` +
        `</tr>`
      );
    })
    .join("");
  const toggle = (["percent", "minutes"] as const)
    .map(
      (m) =>
        `<button data-view="${m}" class="${m === mode ? "active" : ""}">` +
        `${m}</button>`,
    )
    .join("");
  return (
    `<div class="view-toggle">${toggle}</div>` +
    `<table class="dashboard"><thead><tr>${headers}</tr></thead>` +
    `<tbody>${rows}</tbody></table>` +
    `<p class="period">${escapeHtml(snapshot.period.from)} → ` +
    `${escapeHtml(snapshot.period.to)}</p>`
  );
}

export function renderIncidents(incidents: Incident[]): string {
  if (incidents.length === 0) {
    return `<p class="empty">No incidents.</p>`;
  }
  const rows = incidents
    .map((incident) => {
      const actions = enabledActions(incident.state)
        .map(
          (action) =>
            `<button data-incident="${escapeHtml(incident.id)}" ` +
            `data-to-state="${action.toState}">${action.label}</button>`,
        )
        .join("");
      return (
        `<tr data-state="${incident.state}">` +
        `<td>${escapeHtml(incident.id)}</td>` +
        `<td>${escapeHtml(incident.severity)}</td>` +
        `<td>${escapeHtml(incident.title)}</td>` +
        `<td><span class="state">${incident.state}</span></td>` +
        `<td class="actions">${actions}</td>` +
        `</tr>`
      );
    })
    .join("");
  return (
    `<table class="incidents"><thead><tr>` +
    `<th>Id</th><th>Sev</th><th>Title</th><th>State</th><th>Actions</th>` +
    `</tr></thead><tbody>${rows}</tbody></table>`
  );
}

export function renderError(body: ApiErrorBody): string {
  return `<div class="error-banner">${escapeHtml(describeRejection(body))}</div>`;
}
