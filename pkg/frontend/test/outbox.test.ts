// Outbound gating: sequencing, the double-answer lock, connection drops.

import { describe, expect, it } from "vitest";

import { Outbox } from "../src/outbox.js";
import type { ScenePayload } from "../src/protocol.js";
import { initialView, type ViewModel } from "../src/state.js";

function quizView(overrides: Partial<ViewModel> = {}): ViewModel {
  const scene: ScenePayload = {
    scenario_id: "s",
    state_id: "q1",
    kind: "quiz",
    phase: "awaiting_input",
    paused: false,
    clock_ms: 1000,
    prompt: "?",
    options: ["a", "b", "c"],
  };
  return { ...initialView, connection: "open", current: scene, ...overrides };
}

function capture(): { frames: string[]; outbox: Outbox } {
  const frames: string[] = [];
  return { frames, outbox: new Outbox((f) => frames.push(f)) };
}

describe("outbox", () => {
  it("emits a correctly shaped, sequenced answer", () => {
    const { frames, outbox } = capture();
    outbox.hello("tutor");
    const msg = outbox.sendAnswer(quizView(), 2);
    expect(msg).not.toBeNull();
    expect(JSON.parse(frames[1])).toEqual({
      op: "action",
      seq: 2,
      payload: { type: "answer", choice: 2 },
    });
  });

  it("a double click emits exactly one action message", () => {
    const { frames, outbox } = capture();
    const view = quizView();
    expect(outbox.sendAnswer(view, 1)).not.toBeNull();
    expect(outbox.sendAnswer(view, 1)).toBeNull(); // second click of the double
    expect(frames).toHaveLength(1);
  });

  it("unlocks answers on the next state message", () => {
    const { frames, outbox } = capture();
    expect(outbox.sendAnswer(quizView(), 0)).not.toBeNull();
    expect(outbox.sendAnswer(quizView(), 0)).toBeNull();
    outbox.noteMessage({ op: "state", seq: 9, payload: { paused: false } });
    expect(outbox.sendAnswer(quizView(), 1)).not.toBeNull();
    expect(frames).toHaveLength(2);
  });

  it("refuses answers when paused, on stories, or after the summary", () => {
    const { frames, outbox } = capture();
    expect(outbox.sendAnswer(quizView({ paused: true }), 0)).toBeNull();
    const story = quizView();
    story.current = { ...story.current!, kind: "story" };
    expect(outbox.sendAnswer(story, 0)).toBeNull();
    const summarized = quizView({
      summary: {
        scenario_id: "s",
        per_word: {},
        attention_flags: [],
        totals: {
          quizzes_shown: 0, answered: 0, correct: 0,
          paused_count: 0, active_duration_ms: 0,
        },
      },
    });
    expect(outbox.sendAnswer(summarized, 0)).toBeNull();
    expect(frames).toHaveLength(0);
  });

  it("drops input while the connection is lost", () => {
    const { frames, outbox } = capture();
    expect(outbox.sendAnswer(quizView({ connection: "lost" }), 0)).toBeNull();
    expect(outbox.sendPauseToggle(quizView({ connection: "lost" }))).toBeNull();
    expect(frames).toHaveLength(0);
  });

  it("pause toggling is stateless: the engine decides resume", () => {
    const { frames, outbox } = capture();
    expect(outbox.sendPauseToggle(quizView({ paused: true }))).not.toBeNull();
    expect(JSON.parse(frames[0]).payload).toEqual({ type: "pause_toggle" });
  });
});
