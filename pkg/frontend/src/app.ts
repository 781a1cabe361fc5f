import { ApiClient, ApiError } from "./api.js";
import { RankSortKey, beliefColumns } from "./chartData.js";
import { DEFAULT_API_BASE } from "./config.js";
import type { BeliefRow, ScorePayload, SessionSummary, WhatifPayload } from "./types.js";
import {
  ComposerState,
  comparisonView,
  composerView,
  errorBanner,
  legendView,
  observationsView,
  rankingView,
  sessionHeader,
  timelineView,
} from "./views.js";

// Single-page wiring: state in one object, renders via the pure views,
// all data over the /v1/ client. No probability math happens here.

declare global {
  interface Window {
    PLOTSMITH_API?: string;
  }
}

interface AppState {
  summary: SessionSummary | null;
  beliefs: BeliefRow[];
  whatif: WhatifPayload | null;
  score: ScorePayload | null;
  composer: ComposerState;
  sort: { key: RankSortKey; dir: 1 | -1 };
  error: string | null;
}

const state: AppState = {
  summary: null,
  beliefs: [],
  whatif: null,
  score: null,
  composer: { intervention: null, profile: null, cut: 0, horizon: null, uD: 0.6 },
  sort: { key: "rank", dir: 1 },
  error: null,
};

const client = new ApiClient(window.PLOTSMITH_API ?? DEFAULT_API_BASE);
const root = document.getElementById("app") as HTMLElement;

function renderApp(): string {
  const { summary } = state;
  if (summary === null) {
    return errorBanner(state.error) || `<p class="meta">connecting to the service…</p>`;
  }
  const timeline = timelineView(beliefColumns(state.beliefs, summary.phase_labels, summary.time_labels));
  const comparison = state.whatif === null ? "" : comparisonView(state.whatif, summary.time_labels);
  const ranking = state.score === null ? "" : rankingView(state.score.rows, state.sort.key, state.sort.dir);
  return (
    errorBanner(state.error) +
    sessionHeader(summary) +
    legendView(summary.phase_labels) +
    `<main>` +
    `<aside>` +
    composerView(summary, state.composer) +
    observationsView(summary) +
    `</aside>` +
    `<section>${timeline}${comparison}${ranking}</section>` +
    `</main>`
  );
}

function render(): void {
  root.innerHTML = renderApp();
}

function fail(error: unknown): void {
  if (error instanceof ApiError) {
    state.error = error.path ? `${error.code}: ${error.message} (${error.path})` : `${error.code}: ${error.message}`;
  } else {
    state.error = error instanceof Error ? error.message : String(error);
  }
  render();
}

function readComposer(form: HTMLFormElement): ComposerState {
  const data = new FormData(form);
  const intervention = String(data.get("intervention") ?? "");
  const profile = String(data.get("profile") ?? "");
  const horizonRaw = String(data.get("horizon") ?? "").trim();
  return {
    intervention: intervention === "" ? null : intervention,
    profile: profile === "" ? null : profile,
    cut: Number(data.get("cut") ?? 0),
    horizon: horizonRaw === "" ? null : Number(horizonRaw),
    uD: Number(data.get("u_d") ?? 0.6),
  };
}

async function runWhatif(form: HTMLFormElement): Promise<void> {
  const summary = state.summary;
  if (summary === null) {
    return;
  }
  state.composer = readComposer(form);
  try {
    state.whatif = await client.whatif(summary.session_id, {
      cut: state.composer.cut,
      intervention: state.composer.intervention,
      profile: state.composer.profile,
      horizon: state.composer.horizon,
    });
    state.error = null;
  } catch (error) {
    fail(error);
    return;
  }
  render();
}

async function runScore(form: HTMLFormElement): Promise<void> {
  const summary = state.summary;
  if (summary === null) {
    return;
  }
  state.composer = readComposer(form);
  try {
    state.score = await client.score(summary.session_id, {
      u_d: state.composer.uD,
      candidates: null,
      profile: state.composer.profile,
      horizon: state.composer.horizon,
      cut: state.composer.cut,
    });
    state.sort = { key: "rank", dir: 1 };
    state.error = null;
  } catch (error) {
    fail(error);
    return;
  }
  render();
}

function parseObservationRows(text: string, width: number): number[][] {
  const rows: number[][] = [];
  for (const line of text.split("\n")) {
    const trimmed = line.trim();
    if (trimmed === "") {
      continue;
    }
    const values = trimmed.split(",").map((v) => Number(v.trim()));
    if (values.length !== width || values.some((v) => !Number.isFinite(v))) {
      throw new Error(`each row needs ${width} numeric values, got ${JSON.stringify(trimmed)}`);
    }
    rows.push(values);
  }
  return rows;
}

async function appendObservations(form: HTMLFormElement): Promise<void> {
  const summary = state.summary;
  if (summary === null) {
    return;
  }
  const text = String(new FormData(form).get("rows") ?? "");
  try {
    const rows = parseObservationRows(text, summary.task_labels.length);
    if (rows.length === 0) {
      return;
    }
    const payload = await client.appendObservations(summary.session_id, rows);
    state.beliefs = payload.beliefs;
    state.summary = { ...summary, observation_count: payload.observation_count };
    state.composer = { ...state.composer, cut: payload.observation_count };
    // Projections were conditioned on the old history; drop them.
    state.whatif = null;
    state.score = null;
    state.error = null;
  } catch (error) {
    fail(error);
    return;
  }
  render();
}

function wireEvents(): void {
  root.addEventListener("submit", (event) => {
    const form = event.target as HTMLFormElement;
    event.preventDefault();
    if (form.id === "composer") {
      void runWhatif(form);
    } else if (form.id === "observations") {
      void appendObservations(form);
    }
  });
  root.addEventListener("click", (event) => {
    const target = event.target as HTMLElement;
    const action = target.dataset["action"];
    if (action === "score") {
      const form = target.closest("form");
      if (form !== null) {
        void runScore(form);
      }
      return;
    }
    const sortKey = target.dataset["sortKey"] as RankSortKey | undefined;
    if (sortKey !== undefined && state.score !== null) {
      state.sort =
        state.sort.key === sortKey
          ? { key: sortKey, dir: state.sort.dir === 1 ? -1 : 1 }
          : { key: sortKey, dir: 1 };
      render();
    }
  });
}

async function boot(): Promise<void> {
  render();
  wireEvents();
  try {
    const summary = await client.createSession("demo");
    state.summary = summary;
    state.beliefs = summary.beliefs;
    state.composer = {
      intervention: summary.interventions[0]?.id ?? null,
      profile: summary.profiles[0] ?? null,
      cut: summary.observation_count,
      horizon: null,
      uD: 0.6,
    };
    state.error = null;
  } catch (error) {
    fail(error);
    return;
  }
  render();
}

void boot();
