import { z } from "zod";

// Response schemas for the /v1/ JSON API. Every payload crossing the wire
// is parsed through one of these before any view sees it; the UI never
// computes probabilities of its own, so these types are the whole data
// surface.

export const beliefRowSchema = z.object({
  t: z.number().int().nonnegative(),
  log_evidence: z.number(),
  marginal: z.array(z.number()),
});

export const interventionInfoSchema = z.object({
  id: z.string(),
  kind: z.string(),
  description: z.string(),
});

export const sessionSummarySchema = z.object({
  session_id: z.string(),
  title: z.string(),
  horizon: z.number().int().positive(),
  phase_labels: z.array(z.string()).min(2),
  task_labels: z.array(z.string()),
  time_labels: z.array(z.string()).nullable(),
  interventions: z.array(interventionInfoSchema),
  profiles: z.array(z.string()),
  observation_count: z.number().int().nonnegative(),
  beliefs: z.array(beliefRowSchema),
});

export const beliefsPayloadSchema = z.object({
  observation_count: z.number().int().nonnegative(),
  phase_labels: z.array(z.string()),
  beliefs: z.array(beliefRowSchema),
});

export const appendPayloadSchema = z.object({
  observation_count: z.number().int().nonnegative(),
  beliefs: z.array(beliefRowSchema),
});

export const deletePayloadSchema = z.object({
  deleted: z.boolean(),
});

export const whatifPayloadSchema = z.object({
  times: z.array(z.number().int()),
  labels: z.array(z.string()),
  idle: z.array(z.array(z.number())),
  intervened: z.array(z.array(z.number())),
  diff: z.array(z.array(z.number())),
});

export const scoreRowSchema = z.object({
  intervention_id: z.string(),
  p_success: z.number(),
  p_foiled_disabled: z.number(),
  p_foiled_free: z.number(),
  score: z.number(),
  rank: z.number().int().positive(),
  components: z.array(
    z.object({
      label: z.string(),
      weight: z.number(),
      p_success: z.number(),
      p_foiled_disabled: z.number(),
      p_foiled_free: z.number(),
    }),
  ),
});

export const scorePayloadSchema = z.object({
  u_d: z.number(),
  profile: z.string(),
  rows: z.array(scoreRowSchema),
});

export const errorEnvelopeSchema = z.object({
  code: z.string(),
  message: z.string(),
  path: z.string(),
});

export type BeliefRow = z.infer<typeof beliefRowSchema>;
export type InterventionInfo = z.infer<typeof interventionInfoSchema>;
export type SessionSummary = z.infer<typeof sessionSummarySchema>;
export type BeliefsPayload = z.infer<typeof beliefsPayloadSchema>;
export type AppendPayload = z.infer<typeof appendPayloadSchema>;
export type DeletePayload = z.infer<typeof deletePayloadSchema>;
export type WhatifPayload = z.infer<typeof whatifPayloadSchema>;
export type ScoreRow = z.infer<typeof scoreRowSchema>;
export type ScorePayload = z.infer<typeof scorePayloadSchema>;
export type ErrorEnvelope = z.infer<typeof errorEnvelopeSchema>;

// Request bodies (what the composer submits).

export interface WhatifRequest {
  cut: number;
  intervention: string | null;
  profile: string | null;
  horizon: number | null;
}

export interface ScoreRequest {
  u_d: number;
  candidates: string[] | null;
  profile: string | null;
  horizon: number | null;
  cut: number | null;
}
