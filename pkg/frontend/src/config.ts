// One palette for every panel: phase index i always draws in
// PHASE_PALETTE[i % PHASE_PALETTE.length], so idle and intervened
// charts stay visually comparable segment by segment. Index 0 is the
// inactive phase and deliberately reads as "switched off".
export const PHASE_PALETTE = [
  "#9aa0a6", // inactive: neutral grey
  "#4c78a8", // blue
  "#f58518", // orange
  "#54a24b", // green
  "#b279a2", // purple
  "#e45756", // red
  "#72b7b2", // teal
  "#eeca3b", // yellow
] as const;

export function phaseColor(index: number): string {
  return PHASE_PALETTE[index % PHASE_PALETTE.length];
}

// Default API origin; override by serving the page with
// `window.PLOTSMITH_API` set before the bundle loads.
export const DEFAULT_API_BASE = "http://127.0.0.1:8930";

// A stacked column must sum to one before it is drawn; anything worse
// than this is a payload bug, not float noise (the service guarantees
// 1e-9 and JSON round-trips are exact for IEEE doubles).
export const COLUMN_SUM_TOLERANCE = 1e-6;

// Chart geometry (pixels). Fixed constants keep renders deterministic.
export const BAR_WIDTH = 320;
export const BAR_HEIGHT = 16;
export const BAR_GAP = 4;
export const LABEL_WIDTH = 92;
export const LINE_WIDTH = 420;
export const LINE_HEIGHT = 180;
export const LINE_PAD = 28;
