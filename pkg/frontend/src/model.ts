import { ApiClient, ApiError } from "./api.js";
import type { SessionView } from "./types.js";

/** What the panels render. Everything displayed comes from the last server
 * view; the client never fabricates scores and keeps at most one command
 * in flight per session. */
export interface UiState {
  view: SessionView | null;
  pendingCommand: string;
  inFlight: boolean;
  /** Session-over notice, shown when a command hits a terminal session. */
  endedBanner: boolean;
  /** Last request failure; the previous view stays on screen unchanged. */
  errorToast: string | null;
  /** A refresh failed, so the data on screen may be out of date. */
  stale: boolean;
  lastLatencyMs: number | null;
}

export function initialState(): UiState {
  return {
    view: null,
    pendingCommand: "",
    inFlight: false,
    endedBanner: false,
    errorToast: null,
    stale: false,
    lastLatencyMs: null,
  };
}

const SATISFIED_FALLBACK_TEXT = "satisfied, thanks!";

type Listener = (state: UiState) => void;
type Clock = () => number;

export class SessionModel {
  private state: UiState = initialState();
  private listeners: Listener[] = [];

  constructor(
    private readonly api: ApiClient,
    private readonly now: Clock = () => Date.now(),
  ) {}

  getState(): UiState {
    return this.state;
  }

  subscribe(listener: Listener): () => void {
    this.listeners.push(listener);
    return () => {
      this.listeners = this.listeners.filter((l) => l !== listener);
    };
  }

  private update(partial: Partial<UiState>): void {
    this.state = { ...this.state, ...partial };
    for (const listener of this.listeners) listener(this.state);
  }

  canSubmit(): boolean {
    const { view, inFlight, pendingCommand } = this.state;
    return (
      view !== null &&
      view.status === "active" &&
      !inFlight &&
      pendingCommand.trim().length > 0
    );
  }

  setPendingCommand(text: string): void {
    this.update({ pendingCommand: text });
  }

  /** Clicking feed card N inserts the grammar's deictic reference to it. */
  insertDeictic(position: number): void {
    const phrase = `like the #${position} one`;
    const current = this.state.pendingCommand.trim();
    this.update({ pendingCommand: current ? `${current}, ${phrase}` : phrase });
  }

  async start(userId: string, history: string[] = []): Promise<void> {
    this.update({ ...initialState(), inFlight: true });
    try {
      const view = await this.api.createSession({ user_id: userId, history });
      this.update({ view, inFlight: false });
    } catch (error) {
      this.update({ inFlight: false, errorToast: describe(error) });
    }
  }

  /** Submit the pending command; the view swaps atomically on success. */
  async submitCommand(): Promise<void> {
    if (!this.canSubmit()) return;
    await this.send(this.state.pendingCommand.trim(), false);
  }

  /** The satisfied button: same endpoint, explicit satisfaction flag. */
  async markSatisfied(): Promise<void> {
    const { view, inFlight } = this.state;
    if (!view || view.status !== "active" || inFlight) return;
    const text = this.state.pendingCommand.trim() || SATISFIED_FALLBACK_TEXT;
    await this.send(text, true);
  }

  private async send(text: string, satisfied: boolean): Promise<void> {
    const sessionId = this.state.view?.session_id;
    if (!sessionId) return;
    this.update({ inFlight: true, errorToast: null });
    const started = this.now();
    try {
      const view = await this.api.postCommand(sessionId, text, satisfied);
      // One atomic swap: feed, preferences, and trace all come from the
      // same response.
      this.update({
        view,
        inFlight: false,
        pendingCommand: "",
        endedBanner: view.status !== "active",
        stale: false,
        lastLatencyMs: this.now() - started,
      });
    } catch (error) {
      if (error instanceof ApiError && error.status === 409) {
        this.update({ inFlight: false, endedBanner: true });
        await this.refresh();
        return;
      }
      // 502 and friends: keep the current view untouched, surface a toast.
      this.update({ inFlight: false, errorToast: describe(error) });
    }
  }

  async refresh(): Promise<void> {
    const sessionId = this.state.view?.session_id;
    if (!sessionId) return;
    try {
      const view = await this.api.getSession(sessionId);
      this.update({ view, stale: false });
    } catch (error) {
      this.update({ stale: true, errorToast: describe(error) });
    }
  }
}

function describe(error: unknown): string {
  if (error instanceof ApiError) {
    return error.status ? `request failed (${error.status}): ${error.message}` : error.message;
  }
  return error instanceof Error ? error.message : String(error);
}
