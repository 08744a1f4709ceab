// Wire protocol types shared by the reducer and the socket layer.
// Every frame is one JSON object {op, seq, payload}; seq is strictly
// increasing per direction.

export type Role = "tutor" | "learner" | "observer";

export interface WireMessage {
  op: string;
  seq: number;
  payload: Record<string, unknown>;
}

export interface ScenePayload {
  scenario_id: string;
  state_id: string | null;
  kind: "story" | "quiz" | null;
  phase: string;
  paused: boolean;
  clock_ms: number;
  prompt?: string;
  options?: string[];
  text?: string;
  media?: string | null;
}

export interface ScenarioMeta {
  id: string;
  title: string;
  target_words: string[];
}

export interface WordStats {
  exposures: number;
  quiz_attempts: number;
  quiz_correct: number;
  mean_response_time_ms: number | null;
}

export interface SummaryPayload {
  scenario_id: string;
  per_word: Record<string, WordStats>;
  attention_flags: { state_id: string; reason: string }[];
  totals: {
    quizzes_shown: number;
    answered: number;
    correct: number;
    paused_count: number;
    active_duration_ms: number;
  };
}

export interface WelcomePayload {
  scenario: ScenarioMeta;
  role: Role;
  pause_authority?: boolean;
  state: ScenePayload;
  summary?: SummaryPayload | null;
}

export type AUMap = Record<string, number>;

export function decodeFrame(text: string): WireMessage | null {
  let raw: unknown;
  try {
    raw = JSON.parse(text);
  } catch {
    return null;
  }
  if (typeof raw !== "object" || raw === null || Array.isArray(raw)) {
    return null;
  }
  const obj = raw as Record<string, unknown>;
  if (typeof obj.op !== "string" || typeof obj.seq !== "number") {
    return null;
  }
  const payload = obj.payload ?? {};
  if (typeof payload !== "object" || payload === null || Array.isArray(payload)) {
    return null;
  }
  return { op: obj.op, seq: obj.seq, payload: payload as Record<string, unknown> };
}

export function encodeFrame(msg: WireMessage): string {
  return JSON.stringify({ op: msg.op, seq: msg.seq, payload: msg.payload });
}
