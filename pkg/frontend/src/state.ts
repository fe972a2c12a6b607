import type { Narration, NarrationStep, SchemaInfo } from "./api.js";

// Playback is a three-state machine. The only legal moves are
// idle <-> playing and playing <-> paused; the helpers below refuse
// anything else by returning the state unchanged.
export type AudioState =
  | { kind: "idle" }
  | { kind: "playing"; step: number }
  | { kind: "paused"; step: number };

export interface QaEntry {
  question: string;
  answer: string;
}

export interface SessionState {
  sessionId: string | null;
  live: boolean;
  schema: SchemaInfo | null;
  currentPlanId: string | null;
  steps: NarrationStep[];
  rawPlan: string;
  qaHistory: QaEntry[];
  audio: AudioState;
  audioAvailable: boolean;
}

export function initialState(): SessionState {
  return {
    sessionId: null,
    live: false,
    schema: null,
    currentPlanId: null,
    steps: [],
    rawPlan: "",
    qaHistory: [],
    audio: { kind: "idle" },
    audioAvailable: false,
  };
}

export function audioPlay(state: AudioState, step: number): AudioState {
  return { kind: "playing", step };
}

export function audioPause(state: AudioState): AudioState {
  if (state.kind !== "playing") {
    return state;
  }
  return { kind: "paused", step: state.step };
}

export function audioStop(state: AudioState): AudioState {
  return { kind: "idle" };
}

export function withSession(
  state: SessionState,
  sessionId: string,
  live: boolean,
): SessionState {
  return { ...state, sessionId, live };
}

export function withSchema(state: SessionState, schema: SchemaInfo): SessionState {
  return { ...state, schema };
}

// Loading a plan starts a fresh conversation: history and playback reset.
export function withNarration(state: SessionState, narration: Narration): SessionState {
  return {
    ...state,
    currentPlanId: narration.plan_id,
    steps: narration.steps,
    rawPlan: narration.raw_plan,
    qaHistory: [],
    audio: { kind: "idle" },
  };
}

export function withQa(
  state: SessionState,
  question: string,
  answer: string,
): SessionState {
  return { ...state, qaHistory: [...state.qaHistory, { question, answer }] };
}

export function withAudioState(state: SessionState, audio: AudioState): SessionState {
  return { ...state, audio };
}

export function withAudioAvailable(state: SessionState, available: boolean): SessionState {
  return { ...state, audioAvailable: available };
}
