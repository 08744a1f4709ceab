// Outbound actions. Only user gestures produce messages, each with the
// next seq; answers lock until the next state message so a double click
// can never submit twice.

import { encodeFrame, type Role, type WireMessage } from "./protocol.js";
import { optionsEnabled, type ViewModel } from "./state.js";

export class Outbox {
  private seq = 0;
  private answerLocked = false;

  constructor(private transmit: (frame: string) => void) {}

  get isAnswerLocked(): boolean {
    return this.answerLocked;
  }

  /** Call for every inbound message; state messages unlock answers. */
  noteMessage(msg: WireMessage): void {
    if (msg.op === "state") {
      this.answerLocked = false;
    }
  }

  noteReconnected(): void {
    this.answerLocked = false;
  }

  hello(role: Role): WireMessage {
    return this.send("hello", { role });
  }

  sendAnswer(view: ViewModel, choice: number): WireMessage | null {
    if (view.connection !== "open" || !optionsEnabled(view) || this.answerLocked) {
      return null;
    }
    this.answerLocked = true;
    return this.send("action", { type: "answer", choice });
  }

  sendPauseToggle(view: ViewModel): WireMessage | null {
    if (view.connection !== "open") {
      return null; // dropped; the caller shows the connection notice
    }
    return this.send("action", { type: "pause_toggle" });
  }

  private send(op: string, payload: Record<string, unknown>): WireMessage {
    const msg: WireMessage = { op, seq: ++this.seq, payload };
    this.transmit(encodeFrame(msg));
    return msg;
  }
}
