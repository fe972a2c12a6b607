// Typed client for the narration service. Every displayed answer string in
// the UI originates from one of these calls; nothing is computed locally.

export type FetchLike = (input: string, init?: RequestInit) => Promise<Response>;

export interface SessionInfo {
  session_id: string;
  live: boolean;
}

export interface SchemaColumn {
  name: string;
  type: string;
}

export interface SchemaTable {
  name: string;
  columns: SchemaColumn[];
}

export interface SchemaInfo {
  tables: SchemaTable[];
}

export interface NarrationStep {
  step_id: number;
  text: string;
  output_label: string;
  node_type: string;
  actual_rows: number | null;
  actual_loops: number | null;
  inclusive_ms: number | null;
  exclusive_ms: number | null;
  exclusive_clamped: boolean;
}

export interface Narration {
  plan_id: string;
  final_label: string | null;
  steps: NarrationStep[];
  raw_plan: string;
}

export interface QaAnswer {
  category: string;
  answer_text: string;
  payload: unknown;
}

export interface AudioClip {
  contentType: string;
  data: ArrayBuffer;
}

export class ServiceError extends Error {
  constructor(
    readonly code: string,
    message: string,
    readonly status: number,
  ) {
    super(message);
    this.name = "ServiceError";
  }
}

async function errorFrom(response: Response): Promise<ServiceError> {
  let code = "internal";
  let message = `request failed with status ${response.status}`;
  try {
    const body = await response.json();
    if (body && body.error) {
      code = body.error.code ?? code;
      message = body.error.message ?? message;
    }
  } catch {
    // non-JSON error body, keep the fallback text
  }
  return new ServiceError(code, message, response.status);
}

export class ApiClient {
  private fetchFn: FetchLike;

  constructor(fetchFn?: FetchLike, private base: string = "") {
    this.fetchFn = fetchFn ?? ((input, init) => fetch(input, init));
  }

  private async requestOk(path: string, init?: RequestInit): Promise<Response> {
    const response = await this.fetchFn(this.base + path, init);
    if (!response.ok) {
      throw await errorFrom(response);
    }
    return response;
  }

  private async postJson<T>(path: string, body: unknown): Promise<T> {
    const response = await this.requestOk(path, {
      method: "POST",
      headers: { "Content-Type": "application/json" },
      body: JSON.stringify(body),
    });
    return (await response.json()) as T;
  }

  createSession(dsn?: string): Promise<SessionInfo> {
    return this.postJson("/api/session", dsn ? { dsn } : {});
  }

  async schema(sessionId: string): Promise<SchemaInfo> {
    const response = await this.requestOk(
      `/api/schema?session_id=${encodeURIComponent(sessionId)}`,
    );
    return (await response.json()) as SchemaInfo;
  }

  narrate(sessionId: string, sql: string, analyze = true): Promise<Narration> {
    return this.postJson("/api/narrate", {
      session_id: sessionId,
      sql,
      analyze,
    });
  }

  narrateFile(sessionId: string, planText: string): Promise<Narration> {
    return this.postJson("/api/narrate-file", {
      session_id: sessionId,
      plan: planText,
    });
  }

  ask(sessionId: string, planId: string, question: string): Promise<QaAnswer> {
    return this.postJson("/api/qa", {
      session_id: sessionId,
      plan_id: planId,
      question,
    });
  }

  async rawPlan(sessionId: string, planId: string): Promise<string> {
    const response = await this.requestOk(
      `/api/plan/${planId}/raw?session_id=${encodeURIComponent(sessionId)}`,
    );
    return response.text();
  }

  async stepAudio(
    sessionId: string,
    planId: string,
    stepId: number,
  ): Promise<AudioClip> {
    const response = await this.requestOk(
      `/api/plan/${planId}/step/${stepId}/audio?session_id=${encodeURIComponent(sessionId)}`,
    );
    return {
      contentType: response.headers.get("Content-Type") ?? "application/octet-stream",
      data: await response.arrayBuffer(),
    };
  }
}
