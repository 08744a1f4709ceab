// DOM rendering of the ViewModel: learner pane (scene, options), tutor
// strip (pause, summary), connection badge, face canvas.

import { drawFace } from "./face.js";
import type { SummaryPayload } from "./protocol.js";
import { optionsEnabled, type ViewModel } from "./state.js";

export interface Dom {
  connection: HTMLElement;
  title: HTMLElement;
  media: HTMLElement;
  text: HTMLElement;
  options: HTMLElement;
  pauseButton: HTMLButtonElement;
  pauseIndicator: HTMLElement;
  summary: HTMLElement;
  toast: HTMLElement;
  faceCanvas: HTMLCanvasElement;
}

export function grabDom(root: Document): Dom {
  const get = (id: string) => {
    const el = root.getElementById(id);
    if (!el) throw new Error(`missing #${id}`);
    return el;
  };
  return {
    connection: get("connection"),
    title: get("title"),
    media: get("media"),
    text: get("scene-text"),
    options: get("options"),
    pauseButton: get("pause-btn") as HTMLButtonElement,
    pauseIndicator: get("pause-indicator"),
    summary: get("summary-panel"),
    toast: get("toast"),
    faceCanvas: get("face") as HTMLCanvasElement,
  };
}

export function render(
  dom: Dom,
  view: ViewModel,
  answerLocked: boolean,
  onAnswer: (choice: number) => void,
  mouthOverride: number | null = null,
): void {
  dom.connection.textContent = view.connection;
  dom.connection.className = `badge ${view.connection}`;
  dom.title.textContent = view.scenario ? view.scenario.title : "connecting...";

  const scene = view.current;
  dom.media.textContent = scene?.media ? `[${scene.media}]` : "";
  dom.text.textContent = scene?.kind === "quiz" ? scene.prompt ?? "" : scene?.text ?? "";

  dom.options.replaceChildren();
  if (scene?.kind === "quiz") {
    const enabled = optionsEnabled(view) && !answerLocked && view.connection === "open";
    (scene.options ?? []).forEach((option, index) => {
      const button = document.createElement("button");
      button.textContent = option;
      button.disabled = !enabled;
      button.addEventListener("click", () => onAnswer(index));
      dom.options.appendChild(button);
    });
  }

  dom.pauseIndicator.textContent = view.paused ? "paused" : "";
  dom.pauseIndicator.classList.toggle("on", view.paused);
  dom.pauseButton.textContent = view.paused ? "Resume" : "Pause";
  dom.pauseButton.disabled = view.connection !== "open" || view.summary !== null;

  dom.toast.textContent = view.toast ?? "";
  dom.toast.classList.toggle("visible", view.toast !== null);

  renderSummary(dom.summary, view.summary);

  const ctx = dom.faceCanvas.getContext("2d");
  if (ctx) {
    drawFace(ctx, dom.faceCanvas.width, dom.faceCanvas.height, view.face,
             mouthOverride);
  }
}

function renderSummary(panel: HTMLElement, summary: SummaryPayload | null): void {
  panel.replaceChildren();
  if (summary === null) {
    panel.classList.remove("visible");
    return;
  }
  panel.classList.add("visible");
  const heading = document.createElement("h2");
  heading.textContent = "Session summary";
  panel.appendChild(heading);

  const table = document.createElement("table");
  const head = table.insertRow();
  for (const label of ["word", "exposures", "attempts", "correct", "mean rt"]) {
    const th = document.createElement("th");
    th.textContent = label;
    head.appendChild(th);
  }
  for (const word of Object.keys(summary.per_word).sort()) {
    const stats = summary.per_word[word];
    const row = table.insertRow();
    const rt = stats.mean_response_time_ms;
    for (const value of [word, stats.exposures, stats.quiz_attempts,
                         stats.quiz_correct,
                         rt === null ? "-" : `${Math.round(rt)}ms`]) {
      row.insertCell().textContent = String(value);
    }
  }
  panel.appendChild(table);

  if (summary.attention_flags.length > 0) {
    const flags = document.createElement("p");
    flags.textContent = "Attention: " + summary.attention_flags
      .map((f) => `${f.state_id} (${f.reason.replaceAll("_", " ")})`)
      .join(", ");
    panel.appendChild(flags);
  }
  const totals = document.createElement("p");
  totals.textContent =
    `${summary.totals.answered}/${summary.totals.quizzes_shown} quizzes answered, ` +
    `${summary.totals.correct} correct, ${summary.totals.paused_count} pause(s)`;
  panel.appendChild(totals);
}
