/** Typed client for the diagramforge HTTP/JSON API. */
export class ApiError extends Error {
    constructor(status, code, message, detail = "") {
        super(message);
        this.status = status;
        this.code = code;
        this.detail = detail;
    }
}
async function unwrap(response) {
    if (!response.ok) {
        let code = "http_error";
        let message = `HTTP ${response.status}`;
        let detail = "";
        try {
            const body = await response.json();
            code = body.code ?? code;
            message = body.message ?? message;
            detail = body.detail ?? "";
        }
        catch {
            /* non-JSON error body */
        }
        throw new ApiError(response.status, code, message, detail);
    }
    return (await response.json());
}
export class ApiClient {
    constructor(baseUrl = "", fetchFn = (url, init) => globalThis.fetch(url, init)) {
        this.baseUrl = baseUrl;
        this.fetchFn = fetchFn;
    }
    createSession() {
        return this.request("POST", "/v1/sessions");
    }
    getSession(sessionId) {
        return this.request("GET", `/v1/sessions/${sessionId}`);
    }
    listSessions() {
        return this.request("GET", "/v1/sessions");
    }
    generate(sessionId, instruction) {
        return this.request("POST", `/v1/sessions/${sessionId}/generate`, {
            instruction,
        });
    }
    edit(sessionId, instruction) {
        return this.request("POST", `/v1/sessions/${sessionId}/edit`, {
            instruction,
        });
    }
    async uploadCode(sessionId, file) {
        const form = new FormData();
        form.append("image", file, file.name);
        const response = await this.fetchFn(`${this.baseUrl}/v1/sessions/${sessionId}/code`, { method: "POST", body: form });
        return unwrap(response);
    }
    artifactUrl(digest) {
        return `${this.baseUrl}/v1/artifacts/${digest}`;
    }
    async request(method, path, body) {
        const init = { method };
        if (body !== undefined) {
            init.headers = { "content-type": "application/json" };
            init.body = JSON.stringify(body);
        }
        const response = await this.fetchFn(this.baseUrl + path, init);
        return unwrap(response);
    }
}
