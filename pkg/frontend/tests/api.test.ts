import { describe, expect, it } from "vitest";

import { ApiClient, ServiceError } from "../src/api.js";
import type { FetchLike } from "../src/api.js";
import { FakeService, NARRATION } from "./fake_service.js";

interface Captured {
  url: string;
  method: string;
  body: unknown;
}

function capturing(respond: () => Response): { log: Captured[]; fetch: FetchLike } {
  const log: Captured[] = [];
  const fetch: FetchLike = async (url, init) => {
    log.push({
      url,
      method: init?.method ?? "GET",
      body: typeof init?.body === "string" ? JSON.parse(init.body) : null,
    });
    return respond();
  };
  return { log, fetch };
}

function okJson(body: unknown): () => Response {
  return () =>
    new Response(JSON.stringify(body), {
      status: 200,
      headers: { "Content-Type": "application/json" },
    });
}

describe("request shapes", () => {
  it("creates a file session with an empty body", async () => {
    const { log, fetch } = capturing(okJson({ session_id: "s", live: false }));
    await new ApiClient(fetch).createSession();
    expect(log[0]).toEqual({ url: "/api/session", method: "POST", body: {} });
  });

  it("passes the dsn through when given", async () => {
    const { log, fetch } = capturing(okJson({ session_id: "s", live: true }));
    await new ApiClient(fetch).createSession("postgresql://u@h/db");
    expect(log[0].body).toEqual({ dsn: "postgresql://u@h/db" });
  });

  it("sends narrate with session, sql and the analyze flag", async () => {
    const { log, fetch } = capturing(okJson(NARRATION));
    await new ApiClient(fetch).narrate("sess-1", "select 1", false);
    expect(log[0]).toEqual({
      url: "/api/narrate",
      method: "POST",
      body: { session_id: "sess-1", sql: "select 1", analyze: false },
    });
  });

  it("defaults analyze to true", async () => {
    const { log, fetch } = capturing(okJson(NARRATION));
    await new ApiClient(fetch).narrate("sess-1", "select 1");
    expect((log[0].body as { analyze: boolean }).analyze).toBe(true);
  });

  it("sends the plan text for file narration", async () => {
    const { log, fetch } = capturing(okJson(NARRATION));
    await new ApiClient(fetch).narrateFile("sess-1", "{\"Plan\": {}}");
    expect(log[0].url).toBe("/api/narrate-file");
    expect(log[0].body).toEqual({ session_id: "sess-1", plan: "{\"Plan\": {}}" });
  });

  it("sends questions with the plan id", async () => {
    const { log, fetch } = capturing(
      okJson({ category: "ROW_COUNT", answer_text: "x", payload: null }),
    );
    await new ApiClient(fetch).ask("sess-1", "plan-9", "how many rows?");
    expect(log[0].body).toEqual({
      session_id: "sess-1",
      plan_id: "plan-9",
      question: "how many rows?",
    });
  });

  it("url-encodes the session id in query strings", async () => {
    const { log, fetch } = capturing(okJson({ tables: [] }));
    await new ApiClient(fetch).schema("has space");
    expect(log[0].url).toBe("/api/schema?session_id=has%20space");
  });
});

describe("responses", () => {
  it("returns the raw plan text verbatim", async () => {
    const fake = new FakeService();
    const raw = await new ApiClient(fake.fetch).rawPlan("sess-1", NARRATION.plan_id);
    expect(raw).toBe(NARRATION.raw_plan);
  });

  it("returns audio bytes with their content type", async () => {
    const fake = new FakeService();
    const clip = await new ApiClient(fake.fetch).stepAudio("sess-1", NARRATION.plan_id, 3);
    expect(clip.contentType).toBe("audio/mpeg");
    expect(new TextDecoder().decode(clip.data)).toBe("clip-3");
  });

  it("turns the error envelope into a ServiceError", async () => {
    const { fetch } = capturing(() =>
      new Response(
        JSON.stringify({ error: { code: "malformed_plan", message: "not a plan" } }),
        { status: 400, headers: { "Content-Type": "application/json" } },
      ),
    );
    const failure = await new ApiClient(fetch)
      .narrateFile("sess-1", "junk")
      .catch((error) => error);
    expect(failure).toBeInstanceOf(ServiceError);
    expect(failure.code).toBe("malformed_plan");
    expect(failure.message).toBe("not a plan");
    expect(failure.status).toBe(400);
  });

  it("copes with a non-json error body", async () => {
    const { fetch } = capturing(() => new Response("boom", { status: 502 }));
    const failure = await new ApiClient(fetch)
      .schema("sess-1")
      .catch((error) => error);
    expect(failure).toBeInstanceOf(ServiceError);
    expect(failure.code).toBe("internal");
    expect(failure.status).toBe(502);
  });
});
