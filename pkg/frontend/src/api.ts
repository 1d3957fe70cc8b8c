import type { SessionView } from "./types.js";

/** HTTP error carrying the status code so callers can branch on 409/502. */
export class ApiError extends Error {
  constructor(
    public readonly status: number,
    message: string,
  ) {
    super(message);
    this.name = "ApiError";
  }
}

export interface CreateSessionBody {
  user_id: string;
  history?: string[];
  session_id?: string;
  k?: number;
  t_max?: number;
}

type FetchLike = (input: string, init?: RequestInit) => Promise<Response>;

/** Thin typed client for the session API; the base URL is the only config. */
export class ApiClient {
  constructor(
    private readonly baseUrl: string,
    private readonly fetchFn: FetchLike = (input, init) => fetch(input, init),
  ) {}

  private async request<T>(path: string, init?: RequestInit): Promise<T> {
    let response: Response;
    try {
      response = await this.fetchFn(`${this.baseUrl}${path}`, init);
    } catch (error) {
      const message = error instanceof Error ? error.message : String(error);
      throw new ApiError(0, `network error: ${message}`);
    }
    if (!response.ok) {
      let detail = `${response.status}`;
      try {
        const body = (await response.json()) as { detail?: string };
        if (body.detail) detail = body.detail;
      } catch {
        // non-JSON error body; keep the status code
      }
      throw new ApiError(response.status, detail);
    }
    return (await response.json()) as T;
  }

  createSession(body: CreateSessionBody): Promise<SessionView> {
    return this.request<SessionView>("/sessions", {
      method: "POST",
      headers: { "content-type": "application/json" },
      body: JSON.stringify(body),
    });
  }

  postCommand(sessionId: string, text: string, satisfied = false): Promise<SessionView> {
    return this.request<SessionView>(`/sessions/${sessionId}/commands`, {
      method: "POST",
      headers: { "content-type": "application/json" },
      body: JSON.stringify({ text, satisfied }),
    });
  }

  getSession(sessionId: string): Promise<SessionView> {
    return this.request<SessionView>(`/sessions/${sessionId}`);
  }

  health(): Promise<{ status: string; catalog_size: number }> {
    return this.request("/healthz");
  }
}
