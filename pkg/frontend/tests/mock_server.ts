/** Scripted in-memory server implementing the session API contract. */

import type { FetchLike, SessionResponse, VersionSummary } from "../src/api.js";

export const ORIGINAL_CODE = "digraph flow {\n  a -> b;\n}";
export const EDITED_CODE = "digraph flow {\n  a -> b [style=dashed];\n}";
export const RECOVERED_CODE = "digraph flow {\n  a [label=\"input\"];\n  a -> b;\n}";

function json(status: number, body: unknown): Response {
  return new Response(JSON.stringify(body), {
    status,
    headers: { "content-type": "application/json" },
  });
}

export class MockServer {
  calls: { method: string; path: string }[] = [];
  busy = false;
  private versions: VersionSummary[] = [];
  private counter = 0;

  get fetch(): FetchLike {
    return (url, init) => this.handle(url, init);
  }

  workflowCalls(): { method: string; path: string }[] {
    return this.calls.filter(
      (c) =>
        c.path.endsWith("/generate") ||
        c.path.endsWith("/edit") ||
        c.path.endsWith("/code"),
    );
  }

  private session(): SessionResponse {
    return { session_id: "s1", status: "idle", versions: this.versions };
  }

  private addVersion(code: string, createdFrom: number | null): void {
    this.counter += 1;
    this.versions.push({
      index: this.counter,
      created_from: createdFrom,
      language: "dot",
      code,
      compile_ok: true,
      rounds_used: 1,
      verify_verdict: "complete",
      image: "f".repeat(64),
      error_excerpts: [],
    });
  }

  private async handle(url: string, init?: RequestInit): Promise<Response> {
    const method = init?.method ?? "GET";
    const path = url.replace(/^https?:\/\/[^/]+/, "");
    this.calls.push({ method, path });
    if (this.busy && method === "POST" && path !== "/v1/sessions") {
      return json(409, {
        code: "busy",
        message: "session is busy",
        detail: "",
      });
    }
    if (method === "POST" && path === "/v1/sessions") {
      return json(201, this.session());
    }
    if (method === "GET" && path === "/v1/sessions/s1") {
      return json(200, this.session());
    }
    if (method === "POST" && path === "/v1/sessions/s1/generate") {
      this.addVersion(ORIGINAL_CODE, null);
      return json(200, this.session());
    }
    if (method === "POST" && path === "/v1/sessions/s1/edit") {
      if (this.versions.length === 0) {
        return json(422, {
          code: "no_original",
          message: "session has no versions",
          detail: "",
        });
      }
      this.addVersion(EDITED_CODE, this.versions.length);
      return json(200, this.session());
    }
    if (method === "POST" && path === "/v1/sessions/s1/code") {
      return json(200, {
        session_id: "s1",
        language: "dot",
        source: RECOVERED_CODE,
        compile_ok: true,
        image: "e".repeat(64),
      });
    }
    return json(404, { code: "not_found", message: "no route", detail: path });
  }
}
