import { describe, expect, it } from "vitest";

import type { DashboardRow } from "../src/types.js";
import {
  LEGAL_TRANSITIONS,
  bandFor,
  dashboardCells,
  describeRejection,
  enabledActions,
  formatMinutes,
  formatPercent,
  rowConsistent,
} from "../src/viewmodel.js";

function row(overrides: Partial<DashboardRow> = {}): DashboardRow {
  return {
    product_id: "web",
    product_name: "Corporate Web",
    sla_target_percent: 99.9,
    planned_minutes: 44640.0,
    downtime_minutes: 240.0,
    allowed_downtime_minutes: 44.64,
    availability_percent: 99.4624,
    met: false,
    note: null,
    ...overrides,
  };
}

describe("bands", () => {
  it("maps met/missed/unknown to the three bands", () => {
    expect(bandFor(true)).toBe("met");
    expect(bandFor(false)).toBe("missed");
    expect(bandFor(null)).toBe("no-data");
  });
});

describe("percent/minutes toggle", () => {
  it("percent mode renders the availability figure", () => {
    const cells = dashboardCells(row(), "percent");
    expect(cells.values).toEqual(["99.4624%"]);
    expect(cells.band).toBe("missed");
  });

  it("minutes mode renders downtime, allowed and planned", () => {
    const cells = dashboardCells(row(), "minutes");
    expect(cells.values).toEqual([
      "240.00 min",
      "44.64 min",
      "44640.00 min",
    ]);
  });

  it("undefined availability renders a dash and the note", () => {
    const cells = dashboardCells(
      row({
        availability_percent: null,
        met: null,
        planned_minutes: 0,
        downtime_minutes: 0,
        allowed_downtime_minutes: 0,
        note: "no planned uptime",
      }),
      "percent",
    );
    expect(cells.values).toEqual(["—"]);
    expect(cells.band).toBe("no-data");
    expect(cells.note).toBe("no planned uptime");
  });

  it("formats are stable", () => {
    expect(formatPercent(100)).toBe("100.0000%");
    expect(formatMinutes(0)).toBe("0.00 min");
  });
});

describe("view consistency", () => {
  it("accepts a row whose two views describe the same outage", () => {
    expect(rowConsistent(row())).toBe(true);
  });

  it("accepts the undefined-availability row shape", () => {
    expect(
      rowConsistent(
        row({
          availability_percent: null,
          met: null,
          planned_minutes: 0,
          downtime_minutes: 0,
          allowed_downtime_minutes: 0,
        }),
      ),
    ).toBe(true);
  });

  it("rejects a row whose minutes contradict its percent", () => {
    expect(rowConsistent(row({ downtime_minutes: 300.0 }))).toBe(false);
  });

  it("rejects a row whose allowed budget contradicts its target", () => {
    expect(rowConsistent(row({ allowed_downtime_minutes: 60.0 }))).toBe(false);
  });
});

describe("incident actions", () => {
  it("offers exactly the legal next hops per state", () => {
    expect(LEGAL_TRANSITIONS).toEqual({
      New: ["Classified"],
      Classified: ["InProgress"],
      InProgress: ["Resolved"],
      Resolved: ["Closed", "InProgress"],
      Closed: ["InProgress"],
    });
    expect(enabledActions("New").map((a) => a.toState)).toEqual(["Classified"]);
    expect(enabledActions("Resolved").map((a) => a.toState)).toEqual([
      "Closed",
      "InProgress",
    ]);
  });

  it("labels reopens distinctly from forward progress", () => {
    expect(enabledActions("Resolved").map((a) => a.label)).toEqual([
      "Close",
      "Reopen",
    ]);
    expect(enabledActions("Closed").map((a) => a.label)).toEqual(["Reopen"]);
    expect(enabledActions("Classified").map((a) => a.label)).toEqual([
      "Start work",
    ]);
  });
});

describe("rejection banner", () => {
  it("surfaces the violated rule by name", () => {
    const text = describeRejection({
      code: "state_machine",
      message: "incident INC-000001: no transition New->Resolved",
      details: { rule: "New->Resolved not in transition table" },
    });
    expect(text).toContain("New->Resolved not in transition table");
    expect(text).toContain("rule:");
  });

  it("falls back to the message when no rule is named", () => {
    const text = describeRejection({
      code: "validation",
      message: "alert body missing value",
      details: {},
    });
    expect(text).toBe("alert body missing value");
  });
});
