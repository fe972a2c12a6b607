import { beforeEach, describe, expect, it } from "vitest";

import { ApiClient } from "../src/api.js";
import { App } from "../src/app.js";
import type { AudioSink } from "../src/audio.js";
import { FakeService, NARRATION, deferred, tick } from "./fake_service.js";

class ManualSink implements AudioSink {
  played: string[] = [];
  private pending: { resolve: () => void; reject: (e: Error) => void } | null = null;

  play(url: string): Promise<void> {
    this.played.push(url);
    return new Promise((resolve, reject) => {
      this.pending = { resolve, reject };
    });
  }

  stop(): void {
    if (this.pending !== null) {
      const pending = this.pending;
      this.pending = null;
      pending.reject(new Error("stopped"));
    }
  }

  finishClip(): void {
    if (this.pending !== null) {
      const pending = this.pending;
      this.pending = null;
      pending.resolve();
    }
  }
}

function makeApp(fake: FakeService, sink?: AudioSink): App {
  document.body.innerHTML = '<div id="app"></div>';
  const root = document.getElementById("app") as HTMLElement;
  const app = new App(root, new ApiClient(fake.fetch), sink ?? new ManualSink());
  app.mount();
  return app;
}

async function loadFixturePlan(app: App): Promise<void> {
  await app.connect("");
  await app.narrateFromFile("pasted plan text");
}

function text(selector: string): string {
  const found = document.querySelector(selector);
  return found === null ? "" : (found.textContent ?? "");
}

beforeEach(() => {
  document.body.innerHTML = "";
});

describe("panels", () => {
  it("populates all five panels once a fixture plan is loaded", async () => {
    const fake = new FakeService();
    const app = makeApp(fake);
    await loadFixturePlan(app);

    for (const id of [
      "panel-connection",
      "panel-schema",
      "panel-editor",
      "panel-narration",
      "panel-chat",
    ]) {
      expect(document.getElementById(id)).not.toBeNull();
    }
    expect(text("#connection-status")).toBe("File session started.");
    expect(text("#panel-schema")).toContain("File session");
    expect(document.querySelectorAll("#steps-body .step")).toHaveLength(6);
    expect(
      (document.getElementById("question-input") as HTMLInputElement).disabled,
    ).toBe(false);
    expect(
      (document.getElementById("view-plan-toggle") as HTMLElement).hidden,
    ).toBe(false);
  });

  it("renders step numbers exactly as the service numbered them", async () => {
    const fake = new FakeService();
    const app = makeApp(fake);
    await loadFixturePlan(app);

    const rendered = Array.from(
      document.querySelectorAll("#steps-body .step-number"),
      (el) => el.textContent,
    );
    expect(rendered).toEqual(NARRATION.steps.map((s) => `${s.step_id}.`));
    const texts = Array.from(
      document.querySelectorAll("#steps-body .step-text"),
      (el) => el.textContent,
    );
    expect(texts).toEqual(NARRATION.steps.map((s) => s.text));
  });

  it("browses the schema of a live session", async () => {
    const fake = new FakeService();
    fake.live = true;
    const app = makeApp(fake);
    await app.connect("postgresql://u@h/db");

    expect(text("#connection-status")).toBe("Connected to the database.");
    expect(text("#schema-body")).toContain("orders");
    expect(text("#schema-body")).toContain("o_orderkey");
    expect(
      (document.getElementById("generate-button") as HTMLButtonElement).disabled,
    ).toBe(false);
  });

  it("narrates sql on a live session", async () => {
    const fake = new FakeService();
    fake.live = true;
    const app = makeApp(fake);
    await app.connect("postgresql://u@h/db");
    await app.generate("select count(*) from orders");

    const narrate = fake.requests.find((r) => r.path === "/api/narrate");
    expect(narrate).toBeDefined();
    expect(narrate?.body).toEqual({
      session_id: "sess-1",
      sql: "select count(*) from orders",
      analyze: true,
    });
    expect(document.querySelectorAll("#steps-body .step")).toHaveLength(6);
  });

  it("shows the server message when sql fails", async () => {
    const fake = new FakeService();
    fake.live = true;
    fake.sqlError = 'relation "nope" does not exist';
    const app = makeApp(fake);
    await app.connect("postgresql://u@h/db");
    await app.generate("select * from nope");

    const banner = document.getElementById("editor-error") as HTMLElement;
    expect(banner.hidden).toBe(false);
    expect(banner.textContent).toContain('relation "nope" does not exist');
    expect(document.querySelectorAll("#steps-body .step")).toHaveLength(0);
  });
});

describe("question panel", () => {
  const QUESTIONS: [string, string][] = [
    ["What is a hash semi join?", "hash semi join: a join that checks for a match without producing duplicates."],
    ["How many tuples left after Step 5?", "Step 5 produced 5 rows."],
    ["Which operators appear in this plan?", "The plan uses these operators: Seq Scan, Hash Semi Join, Aggregate, Sort, Limit."],
    ["How long did step 3 take?", "Step 3 took 45 ms itself (130 ms including its inputs)."],
    ["What is the most expensive operation?", "The most expensive operation is Seq Scan, with 85 ms total at steps 1 and 2."],
  ];

  it("renders each category answer exactly as served on the wire", async () => {
    const fake = new FakeService();
    for (const [question, answer] of QUESTIONS) {
      fake.qaReplies.set(question, {
        category: "any",
        answer_text: answer,
        payload: null,
      });
    }
    const app = makeApp(fake);
    await loadFixturePlan(app);

    for (const [question] of QUESTIONS) {
      app.ask(question);
      await tick();
    }

    const answers = Array.from(
      document.querySelectorAll("#chat-log .chat-answer"),
      (el) => el.textContent,
    );
    expect(answers).toEqual(QUESTIONS.map(([, answer]) => answer));
    const asked = fake.requests
      .filter((r) => r.path === "/api/qa")
      .map((r) => (r.body as { question: string }).question);
    expect(asked).toEqual(QUESTIONS.map(([question]) => question));
  });

  it("sends nothing for empty input", async () => {
    const fake = new FakeService();
    const app = makeApp(fake);
    await loadFixturePlan(app);

    app.ask("");
    app.ask("   ");
    (document.getElementById("question-input") as HTMLInputElement).value = "";
    (document.getElementById("ask-button") as HTMLButtonElement).click();
    await tick();

    expect(fake.countRequests("/api/qa")).toBe(0);
  });

  it("keeps the input disabled with a hint until a plan is loaded", async () => {
    const fake = new FakeService();
    const app = makeApp(fake);
    await app.connect("");

    const input = document.getElementById("question-input") as HTMLInputElement;
    expect(input.disabled).toBe(true);
    expect(input.placeholder).toBe("Load a plan first");

    app.ask("How many rows?");
    await tick();
    expect(fake.countRequests("/api/qa")).toBe(0);
  });

  it("answers questions first-in first-out, one request at a time", async () => {
    const fake = new FakeService();
    const gate = deferred<void>();
    fake.qaGate = gate.promise;
    const app = makeApp(fake);
    await loadFixturePlan(app);

    app.ask("first?");
    app.ask("second?");
    await tick();
    expect(fake.countRequests("/api/qa")).toBe(1);

    gate.resolve();
    await tick();
    await tick();

    const asked = fake.requests
      .filter((r) => r.path === "/api/qa")
      .map((r) => (r.body as { question: string }).question);
    expect(asked).toEqual(["first?", "second?"]);
    const questions = Array.from(
      document.querySelectorAll("#chat-log .chat-question"),
      (el) => el.textContent,
    );
    expect(questions).toEqual(["first?", "second?"]);
  });

  it("clears the chat when a new plan is loaded", async () => {
    const fake = new FakeService();
    const app = makeApp(fake);
    await loadFixturePlan(app);
    app.ask("anything?");
    await tick();
    expect(document.querySelectorAll("#chat-log .chat-entry")).toHaveLength(1);

    await app.narrateFromFile("pasted plan text again");
    expect(document.querySelectorAll("#chat-log .chat-entry")).toHaveLength(0);
  });
});

describe("narrate plumbing", () => {
  it("allows only one narrate request in flight", async () => {
    const fake = new FakeService();
    const gate = deferred<void>();
    fake.narrateGate = gate.promise;
    const app = makeApp(fake);
    await app.connect("");

    const first = app.narrateFromFile("plan one");
    const second = app.narrateFromFile("plan two");
    await tick();
    expect(fake.countRequests("/api/narrate-file")).toBe(1);
    expect(
      (document.getElementById("narrate-file-button") as HTMLButtonElement).disabled,
    ).toBe(true);

    gate.resolve();
    await Promise.all([first, second]);
    expect(document.querySelectorAll("#steps-body .step")).toHaveLength(6);
    expect(
      (document.getElementById("narrate-file-button") as HTMLButtonElement).disabled,
    ).toBe(false);
  });

  it("shows the raw plan pretty-printed but content-equal", async () => {
    const fake = new FakeService();
    const app = makeApp(fake);
    await loadFixturePlan(app);

    await app.toggleRawPlan();
    const pre = document.getElementById("raw-plan") as HTMLElement;
    expect(pre.hidden).toBe(false);
    const shown = pre.textContent ?? "";
    expect(shown).not.toBe(NARRATION.raw_plan);
    expect(JSON.parse(shown)).toEqual(JSON.parse(NARRATION.raw_plan));
    expect(fake.countRequests(`/api/plan/${NARRATION.plan_id}/raw`)).toBe(1);

    await app.toggleRawPlan();
    expect(pre.hidden).toBe(true);
  });
});

describe("audio controls", () => {
  it("walks idle to playing to paused and back, replay restarting at 1", async () => {
    const fake = new FakeService();
    const sink = new ManualSink();
    const app = makeApp(fake, sink);
    await loadFixturePlan(app);

    expect(app.state.audioAvailable).toBe(true);
    expect(document.getElementById("audio-play")).not.toBeNull();

    const playing = app.playFrom(1);
    await tick();
    expect(app.state.audio).toEqual({ kind: "playing", step: 1 });
    expect(text("#audio-controls")).toContain("Playing step 1");

    app.pauseAudio();
    await playing;
    expect(app.state.audio).toEqual({ kind: "paused", step: 1 });
    expect(text("#audio-controls")).toContain("Paused at step 1");
    expect(text("#audio-controls")).toContain("Resume");

    const replaying = app.replayAudio();
    await tick();
    expect(app.state.audio).toEqual({ kind: "playing", step: 1 });
    for (let i = 0; i < NARRATION.steps.length; i += 1) {
      sink.finishClip();
      await tick();
    }
    await replaying;
    expect(app.state.audio).toEqual({ kind: "idle" });

    // step 1 was fetched once by the availability probe and then reused
    expect(fake.audioRequests()).toEqual([1, 2, 3, 4, 5, 6]);
  });

  it("hides the controls when the deployment has no speech endpoint", async () => {
    const fake = new FakeService();
    fake.ttsEnabled = false;
    const app = makeApp(fake);
    await loadFixturePlan(app);

    expect(app.state.audioAvailable).toBe(false);
    expect(document.getElementById("audio-play")).toBeNull();
    expect(document.querySelectorAll("#steps-body .play-step")).toHaveLength(0);
    expect(document.querySelectorAll("#steps-body .step")).toHaveLength(6);

    app.ask("still working?");
    await tick();
    expect(fake.countRequests("/api/qa")).toBe(1);
  });
});
