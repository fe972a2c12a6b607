import { describe, expect, it } from "vitest";

import { ApiClient } from "../src/api.js";
import { HttpClipSource, SequencePlayer } from "../src/audio.js";
import type { AudioSink, ClipSource } from "../src/audio.js";
import type { AudioState } from "../src/state.js";
import { FakeService, NARRATION, deferred, tick } from "./fake_service.js";

class FakeSource implements ClipSource {
  calls: number[] = [];
  gates = new Map<number, Promise<string>>();
  failing = new Set<number>();

  async clipUrl(step: number): Promise<string> {
    this.calls.push(step);
    if (this.failing.has(step)) {
      throw new Error("no clip");
    }
    const gate = this.gates.get(step);
    if (gate !== undefined) {
      return gate;
    }
    return `url-${step}`;
  }
}

// One controllable clip at a time: stop() rejects the pending play promise
// the way a real sink does when cut off, finishClip() completes it.
class ManualSink implements AudioSink {
  played: string[] = [];
  stops = 0;
  private pending: { resolve: () => void; reject: (e: Error) => void } | null = null;

  play(url: string): Promise<void> {
    this.played.push(url);
    return new Promise((resolve, reject) => {
      this.pending = { resolve, reject };
    });
  }

  stop(): void {
    this.stops += 1;
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

function makePlayer(source: ClipSource, sink: AudioSink) {
  const states: AudioState[] = [];
  const player = new SequencePlayer(source, sink, (s) => states.push(s));
  return { player, states };
}

describe("sequential playback", () => {
  it("plays each step to the end and finishes idle", async () => {
    const source = new FakeSource();
    const sink = new ManualSink();
    const { player, states } = makePlayer(source, sink);

    const done = player.play(1, 3);
    await tick();
    sink.finishClip();
    await tick();
    sink.finishClip();
    await tick();
    sink.finishClip();
    await done;

    expect(sink.played).toEqual(["url-1", "url-2", "url-3"]);
    expect(states).toEqual([
      { kind: "playing", step: 1 },
      { kind: "playing", step: 2 },
      { kind: "playing", step: 3 },
      { kind: "idle" },
    ]);
  });

  it("starts mid-plan when asked", async () => {
    const source = new FakeSource();
    const sink = new ManualSink();
    const { player } = makePlayer(source, sink);

    const done = player.play(2, 3);
    await tick();
    sink.finishClip();
    await tick();
    sink.finishClip();
    await done;

    expect(source.calls).toEqual([2, 3]);
  });

  it("pause mid-clip keeps the position and stops the sink", async () => {
    const source = new FakeSource();
    const sink = new ManualSink();
    const { player, states } = makePlayer(source, sink);

    const done = player.play(1, 3);
    await tick();
    player.pause();
    await done;

    expect(player.state).toEqual({ kind: "paused", step: 1 });
    expect(sink.stops).toBeGreaterThan(0);
    expect(sink.played).toEqual(["url-1"]);
    expect(states).toEqual([
      { kind: "playing", step: 1 },
      { kind: "paused", step: 1 },
    ]);
  });

  it("resumes from the paused step", async () => {
    const source = new FakeSource();
    const sink = new ManualSink();
    const { player } = makePlayer(source, sink);

    const first = player.play(1, 2);
    await tick();
    player.pause();
    await first;

    const second = player.play(player.state.kind === "paused" ? player.state.step : 1, 2);
    await tick();
    sink.finishClip();
    await tick();
    sink.finishClip();
    await second;

    expect(player.state).toEqual({ kind: "idle" });
    expect(sink.played).toEqual(["url-1", "url-1", "url-2"]);
  });

  it("pause during the clip fetch still lands on paused", async () => {
    const source = new FakeSource();
    const gate = deferred<string>();
    source.gates.set(1, gate.promise);
    const sink = new ManualSink();
    const { player } = makePlayer(source, sink);

    const done = player.play(1, 3);
    await tick();
    player.pause();
    gate.resolve("url-1");
    await done;

    expect(player.state).toEqual({ kind: "paused", step: 1 });
    expect(sink.played).toEqual([]);
  });

  it("a failed clip fetch ends the sequence in idle", async () => {
    const source = new FakeSource();
    source.failing.add(2);
    const sink = new ManualSink();
    const { player, states } = makePlayer(source, sink);

    const done = player.play(1, 3);
    await tick();
    sink.finishClip();
    await done;

    expect(sink.played).toEqual(["url-1"]);
    expect(states[states.length - 1]).toEqual({ kind: "idle" });
  });

  it("a new play supersedes the one in flight", async () => {
    const source = new FakeSource();
    const sink = new ManualSink();
    const { player, states } = makePlayer(source, sink);

    const first = player.play(1, 3);
    await tick();
    const second = player.play(3, 3);
    await tick();
    sink.finishClip();
    await Promise.all([first, second]);

    expect(player.state).toEqual({ kind: "idle" });
    expect(states[states.length - 2]).toEqual({ kind: "playing", step: 3 });
  });

  it("replay starts again from step 1", async () => {
    const source = new FakeSource();
    const sink = new ManualSink();
    const { player, states } = makePlayer(source, sink);

    const done = player.replay(2);
    await tick();
    sink.finishClip();
    await tick();
    sink.finishClip();
    await done;

    expect(states[0]).toEqual({ kind: "playing", step: 1 });
    expect(source.calls).toEqual([1, 2]);
  });
});

describe("clip fetching", () => {
  it("caches clips so a step is fetched once", async () => {
    const fake = new FakeService();
    const source = new HttpClipSource(new ApiClient(fake.fetch), "sess-1", NARRATION.plan_id);

    const first = await source.clipUrl(1);
    const again = await source.clipUrl(1);
    const other = await source.clipUrl(2);

    expect(again).toBe(first);
    expect(other).not.toBe(first);
    expect(fake.audioRequests()).toEqual([1, 2]);
  });

  it("produces a data url carrying the served bytes", async () => {
    const fake = new FakeService();
    const source = new HttpClipSource(new ApiClient(fake.fetch), "sess-1", NARRATION.plan_id);

    const url = await source.clipUrl(3);

    expect(url.startsWith("data:audio/mpeg;base64,")).toBe(true);
    const decoded = atob(url.split(",")[1]);
    expect(decoded).toBe("clip-3");
  });
});
