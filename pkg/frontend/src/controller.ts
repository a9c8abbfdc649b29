/** Application state machine; one API request per user action. */

import { ApiClient, ApiError, CodeResponse } from "./api.js";
import { SessionView, fromSession } from "./state.js";

export interface Banner {
  code: string;
  message: string;
  detail: string;
}

export interface AppState {
  view: SessionView | null;
  codePanel: CodeResponse | null;
  banner: Banner | null;
  busy: boolean;
  pendingInput: string; // preserved instruction text after an error
}

export type Listener = (state: AppState) => void;

const POLL_INTERVAL_MS = 1000;

export class AppController {
  state: AppState = {
    view: null,
    codePanel: null,
    banner: null,
    busy: false,
    pendingInput: "",
  };
  private listeners: Listener[] = [];
  private pollTimer: ReturnType<typeof setInterval> | null = null;

  constructor(
    public api: ApiClient,
    private polling: boolean = true,
  ) {}

  subscribe(listener: Listener): void {
    this.listeners.push(listener);
  }

  private emit(): void {
    for (const listener of this.listeners) listener(this.state);
  }

  async openSession(sessionId?: string): Promise<void> {
    const response = sessionId
      ? await this.api.getSession(sessionId)
      : await this.api.createSession();
    this.state = { ...this.state, view: fromSession(response), banner: null };
    this.emit();
  }

  /** Generate or edit; exactly one API call either way. */
  async submitInstruction(
    text: string,
    mode: "generate" | "edit",
  ): Promise<void> {
    const view = this.requireView();
    if (text.trim() === "") {
      this.setBanner(
        { code: "empty_input", message: "Enter an instruction.", detail: "" },
        text,
      );
      return;
    }
    if (mode === "edit" && view.cards.length === 0) {
      this.setBanner(
        {
          code: "no_original",
          message: "Nothing to edit yet — generate a diagram first.",
          detail: "",
        },
        text,
      );
      return;
    }
    this.setBusy(true);
    try {
      const response =
        mode === "generate"
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
    } catch (error) {
      this.setBusy(false);
      this.failWith(error, text);
    }
  }

  async uploadDiagram(file: File): Promise<void> {
    const view = this.requireView();
    if (!/\.(png|jpe?g)$/i.test(file.name)) {
      this.setBanner(
        {
          code: "unsupported_file",
          message: "Only PNG or JPEG images are supported.",
          detail: file.name,
        },
        this.state.pendingInput,
      );
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
    } catch (error) {
      this.setBusy(false);
      this.failWith(error, this.state.pendingInput);
    }
  }

  viewVersion(activeIndex: number): void {
    const view = this.requireView();
    if (activeIndex < 0 || activeIndex >= view.cards.length) {
      throw new RangeError(`version index ${activeIndex} out of range`);
    }
    this.state = { ...this.state, view: { ...view, activeIndex } };
    this.emit();
  }

  async refresh(): Promise<void> {
    const view = this.requireView();
    const response = await this.api.getSession(view.sessionId);
    this.state = {
      ...this.state,
      view: fromSession(response, view.activeIndex),
    };
    this.emit();
  }

  private requireView(): SessionView {
    if (this.state.view === null) throw new Error("no open session");
    return this.state.view;
  }

  private setBusy(busy: boolean): void {
    this.state = { ...this.state, busy };
    if (busy && this.polling && this.pollTimer === null) {
      this.pollTimer = setInterval(() => {
        this.refresh().catch(() => undefined);
      }, POLL_INTERVAL_MS);
    }
    if (!busy) this.stopPolling();
    this.emit();
  }

  private stopPolling(): void {
    if (this.pollTimer !== null) {
      clearInterval(this.pollTimer);
      this.pollTimer = null;
    }
  }

  private setBanner(banner: Banner, keepInput: string): void {
    this.state = { ...this.state, banner, pendingInput: keepInput };
    this.emit();
  }

  private failWith(error: unknown, keepInput: string): void {
    if (error instanceof ApiError) {
      this.setBanner(
        { code: error.code, message: error.message, detail: error.detail },
        keepInput,
      );
    } else {
      this.setBanner(
        {
          code: "network_error",
          message: "Request failed — check the server and retry.",
          detail: String(error),
        },
        keepInput,
      );
    }
  }
}
