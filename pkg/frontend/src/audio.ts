import { ApiClient } from "./api.js";
import type { AudioState } from "./state.js";

// Turns step numbers into playable clip URLs. The HTTP source caches per
// step, so replaying never refetches a clip the browser already holds.
export interface ClipSource {
  clipUrl(step: number): Promise<string>;
}

// Plays one clip at a time. play() resolves when the clip finishes and
// rejects when stop() cuts it off mid-clip.
export interface AudioSink {
  play(url: string): Promise<void>;
  stop(): void;
}

function toDataUrl(contentType: string, data: ArrayBuffer): string {
  const bytes = new Uint8Array(data);
  let binary = "";
  for (let i = 0; i < bytes.length; i += 1) {
    binary += String.fromCharCode(bytes[i]);
  }
  return `data:${contentType};base64,${btoa(binary)}`;
}

export class HttpClipSource implements ClipSource {
  private cache = new Map<number, string>();

  constructor(
    private api: ApiClient,
    private sessionId: string,
    private planId: string,
  ) {}

  async clipUrl(step: number): Promise<string> {
    const cached = this.cache.get(step);
    if (cached !== undefined) {
      return cached;
    }
    const clip = await this.api.stepAudio(this.sessionId, this.planId, step);
    const url = toDataUrl(clip.contentType, clip.data);
    this.cache.set(step, url);
    return url;
  }
}

export class ElementSink implements AudioSink {
  private element: HTMLAudioElement | null = null;
  private rejectCurrent: ((reason: Error) => void) | null = null;

  play(url: string): Promise<void> {
    this.stop();
    return new Promise<void>((resolve, reject) => {
      const element = new Audio(url);
      this.element = element;
      this.rejectCurrent = reject;
      element.onended = () => {
        this.element = null;
        this.rejectCurrent = null;
        resolve();
      };
      element.onerror = () => {
        this.element = null;
        this.rejectCurrent = null;
        reject(new Error("audio playback failed"));
      };
      element.play().catch(reject);
    });
  }

  stop(): void {
    if (this.element !== null) {
      this.element.pause();
      this.element = null;
    }
    if (this.rejectCurrent !== null) {
      const reject = this.rejectCurrent;
      this.rejectCurrent = null;
      reject(new Error("stopped"));
    }
  }
}

// Sequential narration playback: fetch each step's clip and play it to the
// end, step k through the last step. Pause keeps the position; a new play
// or reset invalidates any sequence still in flight via the run token.
export class SequencePlayer {
  state: AudioState = { kind: "idle" };
  private run = 0;

  constructor(
    private source: ClipSource,
    private sink: AudioSink,
    private onChange: (state: AudioState) => void = () => {},
  ) {}

  private setState(next: AudioState): void {
    this.state = next;
    this.onChange(next);
  }

  async play(fromStep: number, lastStep: number): Promise<void> {
    this.run += 1;
    const token = this.run;
    this.sink.stop();
    for (let step = fromStep; step <= lastStep; step += 1) {
      this.setState({ kind: "playing", step });
      let url: string;
      try {
        url = await this.source.clipUrl(step);
      } catch {
        if (token === this.run) {
          this.setState({ kind: "idle" });
        }
        return;
      }
      if (token !== this.run) {
        return;
      }
      try {
        await this.sink.play(url);
      } catch {
        // Stopped mid-clip: pause() or a newer sequence owns the state now.
        if (token === this.run) {
          this.setState({ kind: "idle" });
        }
        return;
      }
      if (token !== this.run) {
        return;
      }
    }
    this.setState({ kind: "idle" });
  }

  pause(): void {
    if (this.state.kind !== "playing") {
      return;
    }
    const step = this.state.step;
    this.run += 1;
    this.sink.stop();
    this.setState({ kind: "paused", step });
  }

  replay(lastStep: number): Promise<void> {
    return this.play(1, lastStep);
  }

  reset(): void {
    this.run += 1;
    this.sink.stop();
    this.setState({ kind: "idle" });
  }
}
