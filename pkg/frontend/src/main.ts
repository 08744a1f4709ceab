// Entry point: websocket wiring, inbound reducer dispatch, viseme-timed
// mouth animation, and user gesture handlers.

import { Outbox } from "./outbox.js";
import { decodeFrame, type Role } from "./protocol.js";
import { applyConnection, applyMessage, initialView, type ViewModel } from "./state.js";
import { grabDom, render } from "./view.js";

const params = new URLSearchParams(window.location.search);
const roleParam = params.get("role");
const role: Role = roleParam === "learner" || roleParam === "observer"
  ? roleParam : "tutor";
const server = params.get("server") ?? window.location.host;

const dom = grabDom(document);
let view: ViewModel = initialView;
let socket: WebSocket | null = null;
let retryMs = 500;
let mouthOverride: number | null = null;
let mouthTimers: number[] = [];

const outbox = new Outbox((frame) => socket?.send(frame));

function repaint(): void {
  render(dom, view, outbox.isAnswerLocked, onAnswer, mouthOverride);
}

function update(next: ViewModel): void {
  if (next !== view) {
    view = next;
    repaint();
  }
}

function onAnswer(choice: number): void {
  if (outbox.sendAnswer(view, choice) !== null) {
    repaint(); // buttons lock until the next state message
  }
}

dom.pauseButton.addEventListener("click", () => {
  if (outbox.sendPauseToggle(view) === null) {
    update({ ...view, toast: "not connected; pause not sent" });
  }
});

function animateMouth(visemes: unknown): void {
  for (const timer of mouthTimers) {
    window.clearTimeout(timer);
  }
  mouthTimers = [];
  mouthOverride = null;
  if (!Array.isArray(visemes)) {
    return;
  }
  for (const event of visemes) {
    if (!Array.isArray(event) || event.length !== 2) {
      continue;
    }
    const [at, openness] = event as [number, number];
    mouthTimers.push(window.setTimeout(() => {
      mouthOverride = openness > 0 ? openness : null;
      repaint();
    }, at));
  }
}

function tryPlayAudio(assetId: string): void {
  const audio = new Audio(`assets/audio/${assetId}.wav`);
  audio.play().catch(() => undefined); // silent when files are not deployed
}

function connect(): void {
  update(applyConnection(view, "connecting"));
  const scheme = window.location.protocol === "https:" ? "wss" : "ws";
  socket = new WebSocket(`${scheme}://${server}/ws`);

  socket.onopen = () => {
    retryMs = 500;
    outbox.noteReconnected();
    update(applyConnection(view, "open"));
    outbox.hello(role);
  };

  socket.onmessage = (event) => {
    const msg = decodeFrame(String(event.data));
    if (msg === null) {
      update({ ...view, toast: "undecodable frame from server" });
      return;
    }
    outbox.noteMessage(msg);
    if (msg.op === "effect" && msg.payload.kind === "play_audio") {
      const asset = msg.payload.asset as { id?: string } | undefined;
      if (asset?.id) {
        tryPlayAudio(asset.id);
      }
      animateMouth(msg.payload.visemes);
    }
    update(applyMessage(view, msg));
  };

  socket.onclose = () => {
    update(applyConnection(view, "lost"));
    window.setTimeout(connect, retryMs);
    retryMs = Math.min(retryMs * 2, 8000);
  };

  socket.onerror = () => socket?.close();
}

repaint();
connect();
