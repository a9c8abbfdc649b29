import { describe, expect, it } from "vitest";

import { ApiClient, ApiError } from "../src/api.js";
import { MockServer, RECOVERED_CODE } from "./mock_server.js";

describe("ApiClient", () => {
  it("creates and fetches sessions", async () => {
    const server = new MockServer();
    const api = new ApiClient("", server.fetch);
    const created = await api.createSession();
    expect(created.session_id).toBe("s1");
    const fetched = await api.getSession("s1");
    expect(fetched.versions).toEqual([]);
    expect(server.calls).toEqual([
      { method: "POST", path: "/v1/sessions" },
      { method: "GET", path: "/v1/sessions/s1" },
    ]);
  });

  it("generate sends the instruction as JSON", async () => {
    let captured: RequestInit | undefined;
    const server = new MockServer();
    const api = new ApiClient("", (url, init) => {
      captured = init;
      return server.fetch(url, init);
    });
    await api.generate("s1", "draw a flow");
    expect(captured?.headers).toEqual({ "content-type": "application/json" });
    expect(JSON.parse(String(captured?.body))).toEqual({
      instruction: "draw a flow",
    });
  });

  it("upload posts multipart and returns the code panel", async () => {
    const server = new MockServer();
    const api = new ApiClient("", server.fetch);
    const file = new File([new Uint8Array([137, 80])], "g.png", {
      type: "image/png",
    });
    const panel = await api.uploadCode("s1", file);
    expect(panel.source).toBe(RECOVERED_CODE);
    expect(panel.compile_ok).toBe(true);
  });

  it("structured errors become ApiError with code and detail", async () => {
    const server = new MockServer();
    const api = new ApiClient("", server.fetch);
    const error = await api.edit("s1", "dash it").catch((e) => e);
    expect(error).toBeInstanceOf(ApiError);
    expect(error.status).toBe(422);
    expect(error.code).toBe("no_original");
  });

  it("non-JSON error bodies still raise ApiError", async () => {
    const api = new ApiClient("", async () => new Response("boom", { status: 500 }));
    const error = await api.getSession("s1").catch((e) => e);
    expect(error).toBeInstanceOf(ApiError);
    expect(error.code).toBe("http_error");
    expect(error.message).toBe("HTTP 500");
  });

  it("artifact URLs are digest-addressed", () => {
    const api = new ApiClient("http://x");
    expect(api.artifactUrl("ab".repeat(32))).toBe(
      "http://x/v1/artifacts/" + "ab".repeat(32),
    );
  });
});
