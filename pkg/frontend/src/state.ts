// The console's entire view state and its pure reducer. The view derives
// solely from received wire messages; nothing here simulates the engine.

import type {
  AUMap,
  ScenarioMeta,
  ScenePayload,
  SummaryPayload,
  WelcomePayload,
  WireMessage,
} from "./protocol.js";

export type Connection = "connecting" | "open" | "lost";

export interface ViewModel {
  connection: Connection;
  scenario: ScenarioMeta | null;
  current: ScenePayload | null;
  paused: boolean;
  face: AUMap;
  summary: SummaryPayload | null;
  pauseAuthority: boolean;
  toast: string | null;
}

export const initialView: ViewModel = {
  connection: "connecting",
  scenario: null,
  current: null,
  paused: false,
  face: {},
  summary: null,
  pauseAuthority: false,
  toast: null,
};

export function optionsEnabled(view: ViewModel): boolean {
  return (
    view.current !== null &&
    view.current.kind === "quiz" &&
    !view.paused &&
    view.summary === null
  );
}

export function applyMessage(view: ViewModel, msg: WireMessage): ViewModel {
  switch (msg.op) {
    case "welcome": {
      const p = msg.payload as unknown as WelcomePayload;
      return {
        ...view,
        scenario: p.scenario,
        current: p.state,
        paused: p.state.paused,
        pauseAuthority: p.pause_authority === true,
        summary: p.summary ?? null,
        toast: null,
      };
    }
    case "state": {
      const scene = msg.payload as unknown as ScenePayload;
      return { ...view, current: scene, paused: scene.paused };
    }
    case "effect": {
      if (msg.payload.kind === "face") {
        return { ...view, face: (msg.payload.au as AUMap) ?? {} };
      }
      return view;
    }
    case "summary":
      return { ...view, summary: msg.payload as unknown as SummaryPayload };
    case "status": {
      const paused = msg.payload.paused;
      if (typeof paused === "boolean" && paused !== view.paused) {
        return { ...view, paused };
      }
      return view;
    }
    case "error": {
      const text = msg.payload.message ?? msg.payload.code ?? "protocol error";
      return { ...view, toast: String(text) };
    }
    default:
      // Unknown server ops never block the console, they just surface.
      return { ...view, toast: `unrecognized message op "${msg.op}"` };
  }
}

export function applyConnection(view: ViewModel, connection: Connection): ViewModel {
  if (connection === view.connection) {
    return view;
  }
  return { ...view, connection };
}
