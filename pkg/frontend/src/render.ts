import type { NarrationStep, SchemaInfo } from "./api.js";
import type { AudioState, QaEntry } from "./state.js";

export function escapeHtml(text: string): string {
  return text.replace(/[&<>"']/g, (ch) => {
    switch (ch) {
      case "&": return "&amp;";
      case "<": return "&lt;";
      case ">": return "&gt;";
      case '"': return "&quot;";
      default: return "&#39;";
    }
  });
}

export function schemaHtml(schema: SchemaInfo | null, live: boolean): string {
  if (!live) {
    return '<p class="hint">File session: no database schema to browse.</p>';
  }
  if (schema === null) {
    return '<p class="hint">Loading schema...</p>';
  }
  if (schema.tables.length === 0) {
    return '<p class="hint">The connected database has no user tables.</p>';
  }
  const tables = schema.tables.map((table) => {
    const columns = table.columns
      .map((c) => `<li><code>${escapeHtml(c.name)}</code> ${escapeHtml(c.type)}</li>`)
      .join("");
    return `<details><summary>${escapeHtml(table.name)}</summary><ul>${columns}</ul></details>`;
  });
  return tables.join("");
}

// Step numbers come from the service verbatim; the list is not auto-numbered
// so the display can never drift from the API's step ids.
export function stepsHtml(steps: NarrationStep[], audioAvailable: boolean): string {
  if (steps.length === 0) {
    return '<p class="hint">No plan loaded yet.</p>';
  }
  const items = steps.map((step) => {
    const playButton = audioAvailable
      ? `<button class="play-step" data-step="${step.step_id}" title="Play from this step">&#9654;</button>`
      : "";
    return (
      `<li class="step" data-step="${step.step_id}">` +
      `<span class="step-number">${step.step_id}.</span> ` +
      `<span class="step-text">${escapeHtml(step.text)}</span>${playButton}</li>`
    );
  });
  return `<ul class="steps">${items.join("")}</ul>`;
}

export function audioControlsHtml(
  state: AudioState,
  audioAvailable: boolean,
  hasSteps: boolean,
): string {
  if (!audioAvailable || !hasSteps) {
    return "";
  }
  const status =
    state.kind === "playing"
      ? `Playing step ${state.step}`
      : state.kind === "paused"
        ? `Paused at step ${state.step}`
        : "";
  const playLabel = state.kind === "paused" ? "Resume" : "Play";
  return (
    '<div class="audio-buttons">' +
    `<button id="audio-play">${playLabel}</button>` +
    `<button id="audio-pause"${state.kind === "playing" ? "" : " disabled"}>Pause</button>` +
    '<button id="audio-replay">Replay</button>' +
    `<span class="audio-status">${escapeHtml(status)}</span>` +
    "</div>"
  );
}

export function chatHtml(history: QaEntry[]): string {
  if (history.length === 0) {
    return '<p class="hint">Ask about the plan: row counts, timings, operators, definitions.</p>';
  }
  const entries = history.map(
    (entry) =>
      '<div class="chat-entry">' +
      `<div class="chat-question">${escapeHtml(entry.question)}</div>` +
      `<div class="chat-answer">${escapeHtml(entry.answer)}</div>` +
      "</div>",
  );
  return entries.join("");
}

export function prettyPlan(rawPlan: string): string {
  try {
    return JSON.stringify(JSON.parse(rawPlan), null, 2);
  } catch {
    return rawPlan;
  }
}
