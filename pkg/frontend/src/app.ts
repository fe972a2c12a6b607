import { ApiClient, ServiceError } from "./api.js";
import type { Narration } from "./api.js";
import { ElementSink, HttpClipSource, SequencePlayer } from "./audio.js";
import type { AudioSink, ClipSource } from "./audio.js";
import {
  audioControlsHtml,
  chatHtml,
  escapeHtml,
  prettyPlan,
  schemaHtml,
  stepsHtml,
} from "./render.js";
import {
  initialState,
  withAudioAvailable,
  withAudioState,
  withNarration,
  withQa,
  withSchema,
  withSession,
} from "./state.js";
import type { SessionState } from "./state.js";

const SKELETON = `
<div class="layout">
  <section id="panel-connection" class="panel">
    <h2>Connection</h2>
    <input id="dsn-input" type="text"
      placeholder="postgresql://user@host/db (leave empty for file mode)">
    <button id="connect-button">Start session</button>
    <div id="connection-status" class="hint">No session yet.</div>
  </section>
  <section id="panel-schema" class="panel">
    <h2>Schema</h2>
    <div id="schema-body"><p class="hint">Start a session first.</p></div>
  </section>
  <section id="panel-editor" class="panel">
    <h2>SQL</h2>
    <textarea id="sql-input" rows="6" placeholder="select ..."></textarea>
    <label class="inline">
      <input type="checkbox" id="analyze-toggle" checked> run with ANALYZE
    </label>
    <button id="generate-button" disabled>Generate</button>
    <h3>Or paste a plan</h3>
    <textarea id="plan-input" rows="6"
      placeholder="EXPLAIN (ANALYZE, FORMAT JSON) output"></textarea>
    <button id="narrate-file-button" disabled>Narrate plan</button>
    <div id="editor-error" class="error-banner" hidden></div>
  </section>
  <section id="panel-narration" class="panel">
    <h2>Narration</h2>
    <div id="audio-controls"></div>
    <div id="steps-body"><p class="hint">No plan loaded yet.</p></div>
    <button id="view-plan-toggle" hidden>View plan</button>
    <pre id="raw-plan" hidden></pre>
  </section>
  <section id="panel-chat" class="panel">
    <h2>Questions</h2>
    <div id="chat-log"></div>
    <input id="question-input" type="text" disabled
      placeholder="Load a plan first">
    <button id="ask-button" disabled>Ask</button>
  </section>
</div>
`;

export class App {
  state: SessionState = initialState();

  private sink: AudioSink;
  private clipSource: ClipSource | null = null;
  private player: SequencePlayer | null = null;
  private narrateBusy = false;
  private qaQueue: string[] = [];
  private qaDraining = false;
  private rawPlanShown = false;

  constructor(
    private root: HTMLElement,
    private api: ApiClient,
    sink?: AudioSink,
  ) {
    this.sink = sink ?? new ElementSink();
  }

  mount(): void {
    this.root.innerHTML = SKELETON;
    this.element("connect-button").addEventListener("click", () => {
      void this.connect(this.inputValue("dsn-input"));
    });
    this.element("generate-button").addEventListener("click", () => {
      void this.generate(this.inputValue("sql-input"));
    });
    this.element("narrate-file-button").addEventListener("click", () => {
      void this.narrateFromFile(this.inputValue("plan-input"));
    });
    this.element("ask-button").addEventListener("click", () => {
      this.ask(this.inputValue("question-input"));
    });
    this.element("question-input").addEventListener("keydown", (event) => {
      if ((event as KeyboardEvent).key === "Enter") {
        this.ask(this.inputValue("question-input"));
      }
    });
    this.element("view-plan-toggle").addEventListener("click", () => {
      void this.toggleRawPlan();
    });
    // Audio buttons are re-rendered with the state, so delegate from the
    // stable container; the same goes for per-step play buttons.
    this.element("audio-controls").addEventListener("click", (event) => {
      const target = event.target as HTMLElement;
      if (target.id === "audio-play") {
        const from = this.state.audio.kind === "paused" ? this.state.audio.step : 1;
        void this.playFrom(from);
      } else if (target.id === "audio-pause") {
        this.pauseAudio();
      } else if (target.id === "audio-replay") {
        void this.replayAudio();
      }
    });
    this.element("steps-body").addEventListener("click", (event) => {
      const target = event.target as HTMLElement;
      if (target.classList.contains("play-step")) {
        const step = Number(target.getAttribute("data-step"));
        if (Number.isFinite(step)) {
          void this.playFrom(step);
        }
      }
    });
  }

  async connect(dsn: string): Promise<void> {
    try {
      const info = await this.api.createSession(dsn.trim() || undefined);
      this.state = withSession(this.state, info.session_id, info.live);
      this.setText(
        "connection-status",
        info.live ? "Connected to the database." : "File session started.",
      );
      this.buttonEnabled("generate-button", info.live);
      this.buttonEnabled("narrate-file-button", true);
      if (info.live) {
        await this.loadSchema();
      } else {
        this.renderSchema();
      }
      this.clearError();
    } catch (error) {
      this.setText("connection-status", this.messageOf(error));
    }
  }

  private async loadSchema(): Promise<void> {
    const sessionId = this.state.sessionId;
    if (sessionId === null) {
      return;
    }
    try {
      const schema = await this.api.schema(sessionId);
      this.state = withSchema(this.state, schema);
    } catch (error) {
      this.element("schema-body").innerHTML =
        `<p class="hint">${escapeHtml(this.messageOf(error))}</p>`;
      return;
    }
    this.renderSchema();
  }

  generate(sql: string): Promise<void> {
    return this.runNarrate(() => {
      const analyze = (this.element("analyze-toggle") as HTMLInputElement).checked;
      return this.api.narrate(this.requireSession(), sql, analyze);
    });
  }

  narrateFromFile(planText: string): Promise<void> {
    return this.runNarrate(() =>
      this.api.narrateFile(this.requireSession(), planText),
    );
  }

  // At most one narrate request is ever in flight; extra clicks are dropped.
  private async runNarrate(request: () => Promise<Narration>): Promise<void> {
    if (this.narrateBusy || this.state.sessionId === null) {
      return;
    }
    this.narrateBusy = true;
    this.buttonEnabled("generate-button", false);
    this.buttonEnabled("narrate-file-button", false);
    try {
      const narration = await request();
      await this.applyNarration(narration);
      this.clearError();
    } catch (error) {
      this.showError(this.messageOf(error));
    } finally {
      this.narrateBusy = false;
      this.buttonEnabled("generate-button", this.state.live);
      this.buttonEnabled("narrate-file-button", true);
    }
  }

  private async applyNarration(narration: Narration): Promise<void> {
    this.player?.reset();
    this.state = withNarration(this.state, narration);
    this.rawPlanShown = false;
    const sessionId = this.requireSession();
    this.clipSource = new HttpClipSource(this.api, sessionId, narration.plan_id);
    this.player = new SequencePlayer(this.clipSource, this.sink, (audio) => {
      this.state = withAudioState(this.state, audio);
      this.renderAudioControls();
    });
    await this.probeAudio();
    this.renderSteps();
    this.renderChat();
    const question = this.element("question-input") as HTMLInputElement;
    question.disabled = false;
    question.placeholder = "Ask about the plan";
    this.buttonEnabled("ask-button", true);
    const toggle = this.element("view-plan-toggle");
    toggle.hidden = false;
    toggle.textContent = "View plan";
    (this.element("raw-plan") as HTMLElement).hidden = true;
  }

  // One probe request decides whether audio controls exist at all. A 501
  // means the deployment has no speech endpoint; the fetched clip is cached
  // by the source, so nothing is wasted when audio is enabled.
  private async probeAudio(): Promise<void> {
    if (this.clipSource === null || this.state.steps.length === 0) {
      this.state = withAudioAvailable(this.state, false);
      return;
    }
    try {
      await this.clipSource.clipUrl(1);
      this.state = withAudioAvailable(this.state, true);
    } catch (error) {
      if (error instanceof ServiceError && error.status === 501) {
        this.state = withAudioAvailable(this.state, false);
      } else {
        this.state = withAudioAvailable(this.state, true);
      }
    }
  }

  playFrom(step: number): Promise<void> {
    if (this.player === null || !this.state.audioAvailable) {
      return Promise.resolve();
    }
    return this.player.play(step, this.lastStep());
  }

  pauseAudio(): void {
    this.player?.pause();
  }

  replayAudio(): Promise<void> {
    if (this.player === null || !this.state.audioAvailable) {
      return Promise.resolve();
    }
    return this.player.replay(this.lastStep());
  }

  // Questions are queued first-in first-out; one request at a time keeps
  // the chat log in the order the user asked.
  ask(question: string): void {
    const text = question.trim();
    if (text === "" || this.state.currentPlanId === null) {
      return;
    }
    const input = this.element("question-input") as HTMLInputElement;
    input.value = "";
    this.qaQueue.push(text);
    void this.drainQa();
  }

  private async drainQa(): Promise<void> {
    if (this.qaDraining) {
      return;
    }
    this.qaDraining = true;
    try {
      while (this.qaQueue.length > 0) {
        const question = this.qaQueue.shift() as string;
        const sessionId = this.state.sessionId;
        const planId = this.state.currentPlanId;
        if (sessionId === null || planId === null) {
          break;
        }
        let answer: string;
        try {
          const reply = await this.api.ask(sessionId, planId, question);
          answer = reply.answer_text;
        } catch (error) {
          answer = this.messageOf(error);
        }
        this.state = withQa(this.state, question, answer);
        this.renderChat();
      }
    } finally {
      this.qaDraining = false;
    }
  }

  async toggleRawPlan(): Promise<void> {
    const pre = this.element("raw-plan") as HTMLElement;
    const toggle = this.element("view-plan-toggle");
    if (this.rawPlanShown) {
      pre.hidden = true;
      this.rawPlanShown = false;
      toggle.textContent = "View plan";
      return;
    }
    const sessionId = this.state.sessionId;
    const planId = this.state.currentPlanId;
    if (sessionId === null || planId === null) {
      return;
    }
    try {
      const raw = await this.api.rawPlan(sessionId, planId);
      pre.textContent = prettyPlan(raw);
      pre.hidden = false;
      this.rawPlanShown = true;
      toggle.textContent = "Hide plan";
    } catch (error) {
      this.showError(this.messageOf(error));
    }
  }

  private lastStep(): number {
    const steps = this.state.steps;
    return steps.length === 0 ? 0 : steps[steps.length - 1].step_id;
  }

  private requireSession(): string {
    const sessionId = this.state.sessionId;
    if (sessionId === null) {
      throw new Error("no session");
    }
    return sessionId;
  }

  private renderSchema(): void {
    this.element("schema-body").innerHTML = schemaHtml(
      this.state.schema,
      this.state.live,
    );
  }

  private renderSteps(): void {
    this.element("steps-body").innerHTML = stepsHtml(
      this.state.steps,
      this.state.audioAvailable,
    );
    this.renderAudioControls();
  }

  private renderAudioControls(): void {
    this.element("audio-controls").innerHTML = audioControlsHtml(
      this.state.audio,
      this.state.audioAvailable,
      this.state.steps.length > 0,
    );
  }

  private renderChat(): void {
    this.element("chat-log").innerHTML = chatHtml(this.state.qaHistory);
  }

  private showError(message: string): void {
    const banner = this.element("editor-error");
    banner.textContent = message;
    banner.hidden = false;
  }

  private clearError(): void {
    const banner = this.element("editor-error");
    banner.textContent = "";
    banner.hidden = true;
  }

  private messageOf(error: unknown): string {
    if (error instanceof ServiceError) {
      return error.message;
    }
    return error instanceof Error ? error.message : String(error);
  }

  private element(id: string): HTMLElement {
    const found = this.root.querySelector(`#${id}`);
    if (found === null) {
      throw new Error(`missing element #${id}`);
    }
    return found as HTMLElement;
  }

  private inputValue(id: string): string {
    return (this.element(id) as HTMLInputElement | HTMLTextAreaElement).value;
  }

  private setText(id: string, text: string): void {
    this.element(id).textContent = text;
  }

  private buttonEnabled(id: string, enabled: boolean): void {
    (this.element(id) as HTMLButtonElement).disabled = !enabled;
  }
}
