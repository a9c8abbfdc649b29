/** Typed client for the diagramforge HTTP/JSON API. */

export interface VersionSummary {
  index: number;
  created_from: number | null;
  language: string;
  code: string;
  compile_ok: boolean;
  rounds_used: number;
  verify_verdict: string;
  image: string | null;
  error_excerpts: string[];
}

export interface SessionResponse {
  session_id: string;
  status: string;
  versions: VersionSummary[];
}

export interface CodeResponse {
  session_id: string;
  language: string;
  source: string;
  compile_ok: boolean;
  image: string | null;
}

export class ApiError extends Error {
  constructor(
    public status: number,
    public code: string,
    message: string,
    public detail: string = "",
  ) {
    super(message);
  }
}

export type FetchLike = (url: string, init?: RequestInit) => Promise<Response>;

async function unwrap<T>(response: Response): Promise<T> {
  if (!response.ok) {
    let code = "http_error";
    let message = `HTTP ${response.status}`;
    let detail = "";
    try {
      const body = await response.json();
      code = body.code ?? code;
      message = body.message ?? message;
      detail = body.detail ?? "";
    } catch {
      /* non-JSON error body */
    }
    throw new ApiError(response.status, code, message, detail);
  }
  return (await response.json()) as T;
}

export class ApiClient {
  constructor(
    private baseUrl: string = "",
    private fetchFn: FetchLike = (url, init) => globalThis.fetch(url, init),
  ) {}

  createSession(): Promise<SessionResponse> {
    return this.request("POST", "/v1/sessions");
  }

  getSession(sessionId: string): Promise<SessionResponse> {
    return this.request("GET", `/v1/sessions/${sessionId}`);
  }

  listSessions(): Promise<{ sessions: string[] }> {
    return this.request("GET", "/v1/sessions");
  }

  generate(sessionId: string, instruction: string): Promise<SessionResponse> {
    return this.request("POST", `/v1/sessions/${sessionId}/generate`, {
      instruction,
    });
  }

  edit(sessionId: string, instruction: string): Promise<SessionResponse> {
    return this.request("POST", `/v1/sessions/${sessionId}/edit`, {
      instruction,
    });
  }

  async uploadCode(sessionId: string, file: File): Promise<CodeResponse> {
    const form = new FormData();
    form.append("image", file, file.name);
    const response = await this.fetchFn(
      `${this.baseUrl}/v1/sessions/${sessionId}/code`,
      { method: "POST", body: form },
    );
    return unwrap<CodeResponse>(response);
  }

  artifactUrl(digest: string): string {
    return `${this.baseUrl}/v1/artifacts/${digest}`;
  }

  private async request<T>(
    method: string,
    path: string,
    body?: unknown,
  ): Promise<T> {
    const init: RequestInit = { method };
    if (body !== undefined) {
      init.headers = { "content-type": "application/json" };
      init.body = JSON.stringify(body);
    }
    const response = await this.fetchFn(this.baseUrl + path, init);
    return unwrap<T>(response);
  }
}
