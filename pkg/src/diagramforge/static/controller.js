/** Application state machine; one API request per user action. */
import { ApiError } from "./api.js";
import { fromSession } from "./state.js";
const POLL_INTERVAL_MS = 1000;
export class AppController {
    constructor(api, polling = true) {
        this.api = api;
        this.polling = polling;
        this.state = {
            view: null,
            codePanel: null,
            banner: null,
            busy: false,
            pendingInput: "",
        };
        this.listeners = [];
        this.pollTimer = null;
    }
    subscribe(listener) {
        this.listeners.push(listener);
    }
    emit() {
        for (const listener of this.listeners)
            listener(this.state);
    }
    async openSession(sessionId) {
        const response = sessionId
            ? await this.api.getSession(sessionId)
            : await this.api.createSession();
        this.state = { ...this.state, view: fromSession(response), banner: null };
        this.emit();
    }
    /** Generate or edit; exactly one API call either way. */
    async submitInstruction(text, mode) {
        const view = this.requireView();
        if (text.trim() === "") {
            this.setBanner({ code: "empty_input", message: "Enter an instruction.", detail: "" }, text);
            return;
        }
        if (mode === "edit" && view.cards.length === 0) {
            this.setBanner({
                code: "no_original",
                message: "Nothing to edit yet — generate a diagram first.",
                detail: "",
            }, text);
            return;
        }
        this.setBusy(true);
        try {
            const response = mode === "generate"
                ? await this.api.generate(view.sessionId, text)
                : await this.api.edit(view.sessionId, text);
            this.state = {
                ...this.state,
                view: fromSession(response),
                banner: null,
                pendingInput: "",
                busy: false,
            };
            this.stopPolling();
            this.emit();
        }
        catch (error) {
            this.setBusy(false);
            this.failWith(error, text);
        }
    }
    async uploadDiagram(file) {
        const view = this.requireView();
        if (!/\.(png|jpe?g)$/i.test(file.name)) {
            this.setBanner({
                code: "unsupported_file",
                message: "Only PNG or JPEG images are supported.",
                detail: file.name,
            }, this.state.pendingInput);
            return;
        }
        this.setBusy(true);
        try {
            const panel = await this.api.uploadCode(view.sessionId, file);
            this.state = {
                ...this.state,
                codePanel: panel,
                banner: null,
                busy: false,
            };
            this.stopPolling();
            this.emit();
        }
        catch (error) {
            this.setBusy(false);
            this.failWith(error, this.state.pendingInput);
        }
    }
    viewVersion(activeIndex) {
        const view = this.requireView();
        if (activeIndex < 0 || activeIndex >= view.cards.length) {
            throw new RangeError(`version index ${activeIndex} out of range`);
        }
        this.state = { ...this.state, view: { ...view, activeIndex } };
        this.emit();
    }
    async refresh() {
        const view = this.requireView();
        const response = await this.api.getSession(view.sessionId);
        this.state = {
            ...this.state,
            view: fromSession(response, view.activeIndex),
        };
        this.emit();
    }
    requireView() {
        if (this.state.view === null)
            throw new Error("no open session");
        return this.state.view;
    }
    setBusy(busy) {
        this.state = { ...this.state, busy };
        if (busy && this.polling && this.pollTimer === null) {
            this.pollTimer = setInterval(() => {
                this.refresh().catch(() => undefined);
            }, POLL_INTERVAL_MS);
        }
        if (!busy)
            this.stopPolling();
        this.emit();
    }
    stopPolling() {
        if (this.pollTimer !== null) {
            clearInterval(this.pollTimer);
            this.pollTimer = null;
        }
    }
    setBanner(banner, keepInput) {
        this.state = { ...this.state, banner, pendingInput: keepInput };
        this.emit();
    }
    failWith(error, keepInput) {
        if (error instanceof ApiError) {
            this.setBanner({ code: error.code, message: error.message, detail: error.detail }, keepInput);
        }
        else {
            this.setBanner({
                code: "network_error",
                message: "Request failed — check the server and retry.",
                detail: String(error),
            }, keepInput);
        }
    }
}
