// In-memory stand-in for the narration service: implements the same routes
// behind a FetchLike, records every request, and lets tests gate or fail
// individual endpoints. All content the UI shows must trace back to what
// this fake served.

import type { FetchLike, Narration, QaAnswer } from "../src/api.js";

export interface Deferred<T> {
  promise: Promise<T>;
  resolve: (value: T) => void;
  reject: (reason: unknown) => void;
}

export function deferred<T>(): Deferred<T> {
  let resolve!: (value: T) => void;
  let reject!: (reason: unknown) => void;
  const promise = new Promise<T>((res, rej) => {
    resolve = res;
    reject = rej;
  });
  return { promise, resolve, reject };
}

export function tick(): Promise<void> {
  return new Promise((resolve) => setTimeout(resolve, 0));
}

export const NARRATION: Narration = {
  plan_id: "a1b2c3d4e5f60718",
  final_label: "T6",
  steps: [
    {
      step_id: 1,
      text: "Perform sequential scan on table orders and filter on (o_orderdate >= '1993-07-01') to get intermediate table T1.",
      output_label: "T1",
      node_type: "Seq Scan",
      actual_rows: 5600,
      actual_loops: 1,
      inclusive_ms: 25.0,
      exclusive_ms: 25.0,
      exclusive_clamped: false,
    },
    {
      step_id: 2,
      text: "Perform sequential scan on table lineitem and filter on (l_commitdate < l_receiptdate) to get intermediate table T2.",
      output_label: "T2",
      node_type: "Seq Scan",
      actual_rows: 75000,
      actual_loops: 1,
      inclusive_ms: 60.0,
      exclusive_ms: 60.0,
      exclusive_clamped: false,
    },
    {
      step_id: 3,
      text: "Perform hash semi join between T1 and T2 (hashing T2) on condition (orders.o_orderkey = lineitem.l_orderkey) to get intermediate table T3.",
      output_label: "T3",
      node_type: "Hash Semi Join",
      actual_rows: 5200,
      actual_loops: 1,
      inclusive_ms: 130.0,
      exclusive_ms: 45.0,
      exclusive_clamped: false,
    },
    {
      step_id: 4,
      text: "Group T3 by orders.o_orderpriority and compute the aggregate to get intermediate table T4.",
      output_label: "T4",
      node_type: "Aggregate",
      actual_rows: 5,
      actual_loops: 1,
      inclusive_ms: 140.0,
      exclusive_ms: 10.0,
      exclusive_clamped: false,
    },
    {
      step_id: 5,
      text: "Sort T4 by orders.o_orderpriority to get intermediate table T5.",
      output_label: "T5",
      node_type: "Sort",
      actual_rows: 5,
      actual_loops: 1,
      inclusive_ms: 141.0,
      exclusive_ms: 1.0,
      exclusive_clamped: false,
    },
    {
      step_id: 6,
      text: "Keep only the first requested number of rows of T5 to get intermediate table T6.",
      output_label: "T6",
      node_type: "Limit",
      actual_rows: 5,
      actual_loops: 1,
      inclusive_ms: 141.2,
      exclusive_ms: 0.2,
      exclusive_clamped: false,
    },
  ],
  raw_plan: JSON.stringify([
    {
      Plan: { "Node Type": "Limit", "Actual Rows": 5 },
      "Execution Time": 142.0,
    },
  ]),
};

export interface RecordedRequest {
  method: string;
  path: string;
  body: unknown;
}

function jsonResponse(body: unknown, status = 200): Response {
  return new Response(JSON.stringify(body), {
    status,
    headers: { "Content-Type": "application/json" },
  });
}

function envelope(code: string, message: string, status: number): Response {
  return jsonResponse({ error: { code, message } }, status);
}

export class FakeService {
  requests: RecordedRequest[] = [];
  live = false;
  ttsEnabled = true;
  sqlError: string | null = null;
  narrateGate: Promise<void> | null = null;
  qaGate: Promise<void> | null = null;
  qaReplies = new Map<string, QaAnswer>();
  schemaPayload = {
    tables: [
      {
        name: "orders",
        columns: [
          { name: "o_orderkey", type: "integer" },
          { name: "o_orderdate", type: "date" },
        ],
      },
      { name: "lineitem", columns: [{ name: "l_orderkey", type: "integer" }] },
    ],
  };

  get fetch(): FetchLike {
    return (input, init) => this.handle(input, init);
  }

  audioRequests(): number[] {
    return this.requests
      .map((r) => /^\/api\/plan\/[^/]+\/step\/(\d+)\/audio/.exec(r.path))
      .filter((m): m is RegExpExecArray => m !== null)
      .map((m) => Number(m[1]));
  }

  countRequests(pathPrefix: string): number {
    return this.requests.filter((r) => r.path.startsWith(pathPrefix)).length;
  }

  private async handle(input: string, init?: RequestInit): Promise<Response> {
    const method = (init?.method ?? "GET").toUpperCase();
    const path = input;
    let body: unknown = null;
    if (typeof init?.body === "string") {
      body = JSON.parse(init.body);
    }
    this.requests.push({ method, path, body });

    if (method === "POST" && path === "/api/session") {
      return jsonResponse({ session_id: "sess-1", live: this.live });
    }
    if (method === "GET" && path.startsWith("/api/schema")) {
      if (!this.live) {
        return envelope("no_live_connection", "This session has no database connection, so there is no schema.", 409);
      }
      return jsonResponse(this.schemaPayload);
    }
    if (method === "POST" && path === "/api/narrate") {
      if (this.narrateGate !== null) {
        await this.narrateGate;
      }
      if (this.sqlError !== null) {
        return envelope("query_error", this.sqlError, 400);
      }
      return jsonResponse(NARRATION);
    }
    if (method === "POST" && path === "/api/narrate-file") {
      if (this.narrateGate !== null) {
        await this.narrateGate;
      }
      return jsonResponse(NARRATION);
    }
    if (method === "POST" && path === "/api/qa") {
      if (this.qaGate !== null) {
        await this.qaGate;
      }
      const question = (body as { question: string }).question;
      const reply = this.qaReplies.get(question) ?? {
        category: "ROW_COUNT",
        answer_text: `answer to: ${question}`,
        payload: null,
      };
      return jsonResponse(reply);
    }
    const rawMatch = /^\/api\/plan\/([^/]+)\/raw/.exec(path);
    if (method === "GET" && rawMatch !== null) {
      return new Response(NARRATION.raw_plan, {
        status: 200,
        headers: { "Content-Type": "application/json" },
      });
    }
    const audioMatch = /^\/api\/plan\/[^/]+\/step\/(\d+)\/audio/.exec(path);
    if (method === "GET" && audioMatch !== null) {
      if (!this.ttsEnabled) {
        return envelope("feature_disabled", "Text-to-speech is not configured; set TTS_ENDPOINT to enable it.", 501);
      }
      const clip = `clip-${audioMatch[1]}`;
      const bytes = new TextEncoder().encode(clip);
      return new Response(bytes, {
        status: 200,
        headers: { "Content-Type": "audio/mpeg" },
      });
    }
    return envelope("bad_request", `no route for ${method} ${path}`, 400);
  }
}
