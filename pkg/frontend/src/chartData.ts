import { COLUMN_SUM_TOLERANCE } from "./config.js";
import type { BeliefRow, ScoreRow, WhatifPayload } from "./types.js";

// Pure payload -> chart-data transforms. Everything here is arithmetic-free
// beyond cumulative offsets and the display normalization check: all
// probabilities come from the service as-is.

export interface StackedSegment {
  phaseIndex: number;
  label: string;
  value: number;
  // Cumulative fractions in [0, 1]; the renderer maps them to pixels.
  start: number;
  end: number;
}

export interface StackedColumn {
  time: number;
  timeLabel: string;
  segments: StackedSegment[];
}

export interface OverlayPoint {
  time: number;
  value: number;
}

export interface OverlaySeries {
  phaseIndex: number;
  label: string;
  variant: "idle" | "intervened";
  points: OverlayPoint[];
}

/** Throw unless every row sums to one within display tolerance. */
export function assertColumnsNormalized(rows: readonly (readonly number[])[], context: string): void {
  rows.forEach((row, i) => {
    const total = row.reduce((acc, v) => acc + v, 0);
    if (Math.abs(total - 1.0) > COLUMN_SUM_TOLERANCE) {
      throw new Error(`${context}: column ${i} sums to ${total}, expected 1`);
    }
  });
}

/** Label for a time index: t=0 is the prior, t>=1 reads the model's labels. */
export function timeLabelFor(t: number, timeLabels: readonly string[] | null): string {
  if (t === 0) {
    return "start";
  }
  return timeLabels?.[t - 1] ?? `t=${t}`;
}

/**
 * Turn one probability row per time into stacked columns with cumulative
 * segment offsets. Validates normalization before anything renders.
 */
export function stackColumns(
  times: readonly number[],
  rows: readonly (readonly number[])[],
  labels: readonly string[],
  timeLabels: readonly string[] | null,
  context: string,
): StackedColumn[] {
  if (times.length !== rows.length) {
    throw new Error(`${context}: ${times.length} times for ${rows.length} rows`);
  }
  assertColumnsNormalized(rows, context);
  return rows.map((row, i) => {
    let offset = 0;
    const segments = row.map((value, phaseIndex) => {
      const start = offset;
      offset += value;
      return { phaseIndex, label: labels[phaseIndex] ?? `phase ${phaseIndex}`, value, start, end: offset };
    });
    return { time: times[i], timeLabel: timeLabelFor(times[i], timeLabels), segments };
  });
}

/** Stacked columns for a filtered belief series (the timeline feed). */
export function beliefColumns(
  beliefs: readonly BeliefRow[],
  labels: readonly string[],
  timeLabels: readonly string[] | null,
): StackedColumn[] {
  return stackColumns(
    beliefs.map((b) => b.t),
    beliefs.map((b) => b.marginal),
    labels,
    timeLabels,
    "beliefs",
  );
}

/** Default overlay selection: the inactive phase and the first active one. */
export function defaultOverlayPhases(labels: readonly string[]): number[] {
  return labels.length > 1 ? [0, 1] : [0];
}

/**
 * Solid/dashed line series for the selected phases: one idle and one
 * intervened series per phase, sharing the what-if's time axis.
 */
export function overlaySeries(payload: WhatifPayload, phases: readonly number[]): OverlaySeries[] {
  const series: OverlaySeries[] = [];
  for (const phaseIndex of phases) {
    const label = payload.labels[phaseIndex] ?? `phase ${phaseIndex}`;
    for (const variant of ["idle", "intervened"] as const) {
      const rows = payload[variant];
      series.push({
        phaseIndex,
        label,
        variant,
        points: payload.times.map((time, i) => ({ time, value: rows[i][phaseIndex] })),
      });
    }
  }
  return series;
}

export type RankSortKey = "rank" | "score" | "p_success" | "p_foiled_disabled" | "p_foiled_free";

/** Sorted copy of score rows; ties keep the service's rank order. */
export function sortScoreRows(rows: readonly ScoreRow[], key: RankSortKey, dir: 1 | -1): ScoreRow[] {
  return [...rows].sort((a, b) => {
    const delta = a[key] - b[key];
    return delta !== 0 ? dir * delta : a.rank - b.rank;
  });
}
