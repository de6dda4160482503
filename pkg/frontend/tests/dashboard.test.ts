import { describe, expect, it } from "vitest";

import {
  closeGate,
  disagreementRows,
  kappaHeadline,
  kappaRows,
  progressBars,
} from "../src/dashboard.js";

describe("progressBars", () => {
  it("passes server counts through and sorts by annotator", () => {
    const bars = progressBars({
      round: 1,
      pairs: 9,
      labels_expected: 18,
      labels_recorded: 10,
      by_annotator: {
        carol: { assigned: 6, labeled: 3 },
        alice: { assigned: 6, labeled: 6 },
      },
    });
    expect(bars.map((b) => b.annotator)).toEqual(["alice", "carol"]);
    expect(bars[0]).toEqual({ annotator: "alice", labeled: 6, assigned: 6, percent: 100 });
    expect(bars[1].percent).toBe(50);
  });

  it("handles zero assignments without dividing by zero", () => {
    const bars = progressBars({
      round: 1, pairs: 0, labels_expected: 0, labels_recorded: 0,
      by_annotator: { x: { assigned: 0, labeled: 0 } },
    });
    expect(bars[0].percent).toBe(0);
  });
});

describe("kappa views", () => {
  const report = {
    per_set: {
      "0": {
        annotators: ["alice", "bob"] as [string, string],
        kappa: 0.791234,
        observed_agreement: 0.9,
        expected_agreement: 0.5,
        n_items: 10,
        degenerate: false,
      },
    },
    weighted_mean: 0.791234,
  };

  it("renders the server's kappa verbatim to three decimals", () => {
    expect(kappaHeadline(report)).toBe("0.791");
    expect(kappaRows(report)[0].kappa).toBe("0.791");
  });

  it("shows n/a when the server has no figure yet", () => {
    expect(kappaHeadline({ per_set: {}, weighted_mean: null })).toBe("n/a");
  });
});

describe("disagreements and the close gate", () => {
  const base = {
    disagreements: [
      {
        pair_id: "p1",
        labels: [0, 1] as [number, number],
        lemma: "chills",
        concept_id: "C1",
      },
    ],
    unresolved: ["p1"],
    closeable: false,
  };

  it("lists unresolved rows", () => {
    const rows = disagreementRows(base);
    expect(rows[0]).toMatchObject({ lemma: "chills", labels: "0 vs 1", resolved: false });
  });

  it("blocks closing while a disagreement is unresolved", () => {
    const gate = closeGate(base);
    expect(gate.enabled).toBe(false);
    expect(gate.reason).toBe("1 unresolved disagreement");
  });

  it("enables closing only when the server says closeable", () => {
    const gate = closeGate({ disagreements: [], unresolved: [], closeable: true });
    expect(gate).toEqual({ enabled: true, unresolved: 0, reason: "" });
  });

  it("reports incomplete labeling distinctly from disagreements", () => {
    const gate = closeGate({ disagreements: [], unresolved: [], closeable: false });
    expect(gate.enabled).toBe(false);
    expect(gate.reason).toBe("labeling incomplete");
  });
});
