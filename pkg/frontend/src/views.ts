import {
  BAR_GAP,
  BAR_HEIGHT,
  BAR_WIDTH,
  LABEL_WIDTH,
  LINE_HEIGHT,
  LINE_PAD,
  LINE_WIDTH,
  phaseColor,
} from "./config.js";
import {
  OverlaySeries,
  RankSortKey,
  StackedColumn,
  defaultOverlayPhases,
  overlaySeries,
  sortScoreRows,
  stackColumns,
  timeLabelFor,
} from "./chartData.js";
import { el, esc, fmtProb, px } from "./svg.js";
import type { ScoreRow, SessionSummary, WhatifPayload } from "./types.js";

// Pure view renderers: typed chart data in, markup strings out. app.ts
// owns state and event wiring; nothing here touches the DOM or the network.

// ─── Shared pieces ───

export function legendView(labels: readonly string[]): string {
  const items = labels
    .map(
      (label, i) =>
        `<span class="legend-item"><span class="swatch" style="background:${phaseColor(i)}"></span>${esc(label)}</span>`,
    )
    .join("");
  return `<div class="legend">${items}</div>`;
}

function stackedBarsSvg(columns: readonly StackedColumn[]): string {
  const rowPitch = BAR_HEIGHT + BAR_GAP;
  const width = LABEL_WIDTH + BAR_WIDTH;
  const height = Math.max(columns.length * rowPitch, rowPitch);
  const parts: string[] = [];
  columns.forEach((column, i) => {
    const y = i * rowPitch;
    parts.push(
      el(
        "text",
        { x: LABEL_WIDTH - 6, y: y + BAR_HEIGHT / 2 + 4, "text-anchor": "end", class: "tick" },
        esc(column.timeLabel),
      ),
    );
    for (const seg of column.segments) {
      if (seg.value <= 0) {
        continue;
      }
      const title = el("title", {}, esc(`${seg.label} ${fmtProb(seg.value)} at ${column.timeLabel}`));
      parts.push(
        el(
          "rect",
          {
            x: LABEL_WIDTH + seg.start * BAR_WIDTH,
            y,
            width: seg.value * BAR_WIDTH,
            height: BAR_HEIGHT,
            fill: phaseColor(seg.phaseIndex),
          },
          title,
        ),
      );
    }
  });
  return `<svg viewBox="0 0 ${width} ${px(height)}" width="${width}" role="img">${parts.join("")}</svg>`;
}

// ─── Timeline view ───

/** Stacked bar chart of a belief series, one bar per time, newest at the bottom. */
export function timelineView(columns: readonly StackedColumn[]): string {
  return (
    `<figure class="panel timeline"><figcaption>Filtered phase probabilities</figcaption>` +
    stackedBarsSvg(columns) +
    `</figure>`
  );
}

// ─── Comparison view ───

/** The two stacked panels of a what-if, rendered with identical geometry. */
export function whatifPanels(
  payload: WhatifPayload,
  timeLabels: readonly string[] | null,
): { idle: string; intervened: string } {
  const idle = stackColumns(payload.times, payload.idle, payload.labels, timeLabels, "whatif idle");
  const intervened = stackColumns(
    payload.times,
    payload.intervened,
    payload.labels,
    timeLabels,
    "whatif intervened",
  );
  return { idle: stackedBarsSvg(idle), intervened: stackedBarsSvg(intervened) };
}

function overlaySvg(series: readonly OverlaySeries[], timeLabels: readonly string[] | null): string {
  const times = series[0]?.points.map((p) => p.time) ?? [];
  if (times.length === 0) {
    return `<svg viewBox="0 0 ${LINE_WIDTH} ${LINE_HEIGHT}" width="${LINE_WIDTH}" role="img"></svg>`;
  }
  const tMin = times[0];
  const tMax = times[times.length - 1];
  const plotLeft = LINE_PAD;
  const plotRight = LINE_WIDTH - 8;
  const plotTop = 8;
  const plotBottom = LINE_HEIGHT - LINE_PAD;
  const xAt = (t: number) =>
    tMax === tMin ? plotLeft : plotLeft + ((t - tMin) / (tMax - tMin)) * (plotRight - plotLeft);
  const yAt = (p: number) => plotBottom - p * (plotBottom - plotTop);

  const parts: string[] = [];
  for (const grid of [0, 0.5, 1]) {
    const y = yAt(grid);
    parts.push(el("line", { x1: plotLeft, y1: y, x2: plotRight, y2: y, class: "grid" }));
    parts.push(
      el("text", { x: plotLeft - 4, y: y + 3, "text-anchor": "end", class: "tick" }, grid.toFixed(1)),
    );
  }
  parts.push(
    el(
      "text",
      { x: plotLeft, y: plotBottom + 14, "text-anchor": "start", class: "tick" },
      esc(timeLabelFor(tMin, timeLabels)),
    ),
    el(
      "text",
      { x: plotRight, y: plotBottom + 14, "text-anchor": "end", class: "tick" },
      esc(timeLabelFor(tMax, timeLabels)),
    ),
  );
  for (const s of series) {
    const path = s.points
      .map((p, i) => `${i === 0 ? "M" : "L"}${px(xAt(p.time))},${px(yAt(p.value))}`)
      .join("");
    const style: Record<string, string | number> = {
      d: path,
      fill: "none",
      stroke: phaseColor(s.phaseIndex),
      "stroke-width": 2,
    };
    if (s.variant === "intervened") {
      style["stroke-dasharray"] = "6 4";
    }
    parts.push(el("path", style));
  }
  const keys = series
    .map(
      (s) =>
        `<span class="legend-item"><span class="stroke${s.variant === "intervened" ? " dashed" : ""}" ` +
        `style="border-color:${phaseColor(s.phaseIndex)}"></span>${esc(s.label)} (${s.variant})</span>`,
    )
    .join("");
  return (
    `<svg viewBox="0 0 ${LINE_WIDTH} ${LINE_HEIGHT}" width="${LINE_WIDTH}" role="img">${parts.join("")}</svg>` +
    `<div class="legend">${keys}</div>`
  );
}

/**
 * Side-by-side idle/intervened stacks plus solid/dashed line overlays for
 * the selected phases (defaults: inactive and the first active phase).
 */
export function comparisonView(
  payload: WhatifPayload,
  timeLabels: readonly string[] | null,
  selectedPhases?: readonly number[],
): string {
  const phases = selectedPhases ?? defaultOverlayPhases(payload.labels);
  const panels = whatifPanels(payload, timeLabels);
  const overlay = overlaySvg(overlaySeries(payload, phases), timeLabels);
  return (
    `<figure class="panel comparison"><figcaption>Idle vs intervened predictions</figcaption>` +
    `<div class="panes">` +
    `<div class="pane"><h4>idle</h4>${panels.idle}</div>` +
    `<div class="pane"><h4>intervened</h4>${panels.intervened}</div>` +
    `</div>` +
    `<div class="overlay">${overlay}</div>` +
    `</figure>`
  );
}

// ─── Ranking view ───

const RANK_COLUMNS: readonly { key: RankSortKey; heading: string }[] = [
  { key: "p_success", heading: "p(success)" },
  { key: "p_foiled_disabled", heading: "p(foiled, disabled)" },
  { key: "p_foiled_free", heading: "p(foiled, free)" },
  { key: "score", heading: "score" },
  { key: "rank", heading: "rank" },
];

/** Sortable candidate table; every number is the service's verbatim. */
export function rankingView(rows: readonly ScoreRow[], sortKey: RankSortKey, dir: 1 | -1): string {
  const sorted = sortScoreRows(rows, sortKey, dir);
  const headers = RANK_COLUMNS.map(({ key, heading }) => {
    const marker = key === sortKey ? (dir === 1 ? " ▲" : " ▼") : "";
    return `<th data-sort-key="${key}">${esc(heading)}${marker}</th>`;
  }).join("");
  const body = sorted
    .map(
      (row) =>
        `<tr><td>${esc(row.intervention_id)}</td>` +
        `<td>${fmtProb(row.p_success)}</td>` +
        `<td>${fmtProb(row.p_foiled_disabled)}</td>` +
        `<td>${fmtProb(row.p_foiled_free)}</td>` +
        `<td>${fmtProb(row.score)}</td>` +
        `<td>${row.rank}</td></tr>`,
    )
    .join("");
  return (
    `<figure class="panel ranking"><figcaption>Candidate scores</figcaption>` +
    `<table><thead><tr><th>candidate</th>${headers}</tr></thead><tbody>${body}</tbody></table>` +
    `</figure>`
  );
}

// ─── Composer and session chrome ───

export interface ComposerState {
  intervention: string | null;
  profile: string | null;
  cut: number;
  horizon: number | null;
  uD: number;
}

export function composerView(summary: SessionSummary, state: ComposerState): string {
  const interventionOptions = [
    `<option value=""${state.intervention === null ? " selected" : ""}>none (baseline)</option>`,
    ...summary.interventions.map(
      (d) =>
        `<option value="${esc(d.id)}"${state.intervention === d.id ? " selected" : ""}>` +
        `${esc(d.id)} [${esc(d.kind)}]</option>`,
    ),
  ].join("");
  const profileOptions = summary.profiles
    .map(
      (name) =>
        `<option value="${esc(name)}"${state.profile === name ? " selected" : ""}>${esc(name)}</option>`,
    )
    .join("");
  const described = summary.interventions.find((d) => d.id === state.intervention);
  return (
    `<form id="composer" class="panel">` +
    `<figcaption>What-if composer</figcaption>` +
    `<label>intervention <select name="intervention">${interventionOptions}</select></label>` +
    `<p class="hint">${described ? esc(described.description) : "baseline projection, no action"}</p>` +
    `<label>profile <select name="profile">${profileOptions}</select></label>` +
    `<label>cut after <input name="cut" type="number" min="0" max="${summary.observation_count}" ` +
    `value="${state.cut}" /> of ${summary.observation_count} observed</label>` +
    `<label>horizon <input name="horizon" type="number" min="1" max="${summary.horizon}" ` +
    `value="${state.horizon ?? ""}" placeholder="${summary.horizon}" /></label>` +
    `<label>u_d <input name="u_d" type="number" min="0.01" max="0.99" step="0.01" value="${state.uD}" /></label>` +
    `<div class="actions">` +
    `<button type="submit" data-action="whatif">Run what-if</button>` +
    `<button type="button" data-action="score">Score all candidates</button>` +
    `</div>` +
    `</form>`
  );
}

export function observationsView(summary: SessionSummary): string {
  return (
    `<form id="observations" class="panel">` +
    `<figcaption>Append observations</figcaption>` +
    `<textarea name="rows" rows="3" spellcheck="false" ` +
    `placeholder="one slice per line: ${summary.task_labels.length} comma-separated intensity values"></textarea>` +
    `<div class="actions"><button type="submit">Append</button></div>` +
    `</form>`
  );
}

export function sessionHeader(summary: SessionSummary): string {
  return (
    `<header><h1>${esc(summary.title)}</h1>` +
    `<p class="meta">horizon ${summary.horizon} · ${summary.phase_labels.length} phases · ` +
    `${summary.task_labels.length} intensity signals · ${summary.observation_count} observations</p>` +
    `</header>`
  );
}

export function errorBanner(message: string | null): string {
  return message === null ? "" : `<div class="error" role="alert">${esc(message)}</div>`;
}
