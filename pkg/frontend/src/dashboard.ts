/**
 * View models for the round dashboard.
 *
 * Everything here is a straight reshaping of API payloads: agreement,
 * accuracy and assignment figures are computed by the server only.
 */

import {
  DisagreementsResponse,
  KappaReport,
  Progress,
} from "./api.js";

export interface ProgressBar {
  annotator: string;
  labeled: number;
  assigned: number;
  percent: number;
}

export function progressBars(progress: Progress): ProgressBar[] {
  return Object.entries(progress.by_annotator)
    .map(([annotator, counts]) => ({
      annotator,
      labeled: counts.labeled,
      assigned: counts.assigned,
      percent: counts.assigned === 0 ? 0 : Math.round((100 * counts.labeled) / counts.assigned),
    }))
    .sort((a, b) => a.annotator.localeCompare(b.annotator));
}

export interface KappaRow {
  set_index: string;
  annotators: string;
  kappa: string;
  n_items: number;
  degenerate: boolean;
}

export function kappaRows(report: KappaReport): KappaRow[] {
  return Object.entries(report.per_set)
    .sort(([a], [b]) => a.localeCompare(b))
    .map(([setIndex, entry]) => ({
      set_index: setIndex,
      annotators: entry.annotators.join(" / "),
      kappa: entry.kappa.toFixed(3),
      n_items: entry.n_items,
      degenerate: entry.degenerate,
    }));
}

export function kappaHeadline(report: KappaReport): string {
  if (report.weighted_mean === null) {
    return "n/a";
  }
  return report.weighted_mean.toFixed(3);
}

export interface DisagreementRow {
  pair_id: string;
  lemma: string;
  concept_id: string;
  labels: string;
  resolved: boolean;
  resolution: string;
}

export function disagreementRows(resp: DisagreementsResponse): DisagreementRow[] {
  return resp.disagreements.map((d) => ({
    pair_id: d.pair_id,
    lemma: d.lemma,
    concept_id: d.concept_id,
    labels: d.labels.join(" vs "),
    resolved: d.resolution !== undefined,
    resolution: d.resolution === undefined ? "" : String(d.resolution),
  }));
}

export interface CloseGate {
  enabled: boolean;
  unresolved: number;
  reason: string;
}

export function closeGate(resp: DisagreementsResponse): CloseGate {
  if (resp.closeable) {
    return { enabled: true, unresolved: 0, reason: "" };
  }
  const n = resp.unresolved.length;
  const reason =
    n > 0
      ? `${n} unresolved disagreement${n === 1 ? "" : "s"}`
      : "labeling incomplete";
  return { enabled: false, unresolved: n, reason };
}
