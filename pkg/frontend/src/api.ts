import { z } from "zod";
import {
  AppendPayload,
  BeliefsPayload,
  DeletePayload,
  ScorePayload,
  ScoreRequest,
  SessionSummary,
  WhatifPayload,
  WhatifRequest,
  appendPayloadSchema,
  beliefsPayloadSchema,
  deletePayloadSchema,
  errorEnvelopeSchema,
  scorePayloadSchema,
  sessionSummarySchema,
  whatifPayloadSchema,
} from "./types.js";

export type FetchLike = (input: string, init?: RequestInit) => Promise<Response>;

/** The service's uniform error envelope, surfaced as a throwable. */
export class ApiError extends Error {
  constructor(
    readonly code: string,
    message: string,
    readonly path: string,
    readonly status: number,
  ) {
    super(message);
    this.name = "ApiError";
  }
}

/** JSON with recursively sorted object keys, so equal bodies share one key. */
export function stableStringify(value: unknown): string {
  if (Array.isArray(value)) {
    return `[${value.map(stableStringify).join(",")}]`;
  }
  if (value !== null && typeof value === "object") {
    const entries = Object.entries(value as Record<string, unknown>)
      .sort(([a], [b]) => (a < b ? -1 : a > b ? 1 : 0))
      .map(([k, v]) => `${JSON.stringify(k)}:${stableStringify(v)}`);
    return `{${entries.join(",")}}`;
  }
  return JSON.stringify(value);
}

/**
 * Typed /v1/ client. Concurrent calls with the same method, path, and body
 * share one in-flight request; the map entry clears when it settles, so a
 * later identical call fetches again.
 */
export class ApiClient {
  private pending = new Map<string, Promise<unknown>>();

  constructor(
    private base: string,
    private fetchImpl: FetchLike = (input, init) => fetch(input, init),
  ) {}

  createSession(model: "demo" | Record<string, unknown>): Promise<SessionSummary> {
    return this.request(sessionSummarySchema, "POST", "/v1/sessions", { model });
  }

  appendObservations(sid: string, rows: number[][]): Promise<AppendPayload> {
    return this.request(appendPayloadSchema, "POST", `/v1/sessions/${sid}/observations`, { rows });
  }

  getBeliefs(sid: string): Promise<BeliefsPayload> {
    return this.request(beliefsPayloadSchema, "GET", `/v1/sessions/${sid}/beliefs`);
  }

  whatif(sid: string, body: WhatifRequest): Promise<WhatifPayload> {
    return this.request(whatifPayloadSchema, "POST", `/v1/sessions/${sid}/whatif`, body);
  }

  score(sid: string, body: ScoreRequest): Promise<ScorePayload> {
    return this.request(scorePayloadSchema, "POST", `/v1/sessions/${sid}/score`, body);
  }

  deleteSession(sid: string): Promise<DeletePayload> {
    return this.request(deletePayloadSchema, "DELETE", `/v1/sessions/${sid}`);
  }

  private request<T>(schema: z.ZodType<T>, method: string, path: string, body?: unknown): Promise<T> {
    const key = `${method} ${path} ${body === undefined ? "" : stableStringify(body)}`;
    const running = this.pending.get(key);
    if (running !== undefined) {
      return running as Promise<T>;
    }
    const task = this.dispatch(schema, method, path, body).finally(() => {
      this.pending.delete(key);
    });
    this.pending.set(key, task);
    return task;
  }

  private async dispatch<T>(
    schema: z.ZodType<T>,
    method: string,
    path: string,
    body?: unknown,
  ): Promise<T> {
    const init: RequestInit = { method };
    if (body !== undefined) {
      init.headers = { "content-type": "application/json" };
      init.body = JSON.stringify(body);
    }
    const response = await this.fetchImpl(`${this.base}${path}`, init);
    const text = await response.text();
    if (!response.ok) {
      const parsed = errorEnvelopeSchema.safeParse(safeJson(text));
      if (parsed.success) {
        throw new ApiError(parsed.data.code, parsed.data.message, parsed.data.path, response.status);
      }
      throw new ApiError("http-error", `${method} ${path} failed with ${response.status}`, "", response.status);
    }
    return schema.parse(JSON.parse(text));
  }
}

function safeJson(text: string): unknown {
  try {
    return JSON.parse(text);
  } catch {
    return null;
  }
}
