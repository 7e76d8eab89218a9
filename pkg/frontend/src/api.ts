// Thin client for the lattice service. In-flight /graph requests are
// aborted when a newer one supersedes them, so slider drags never apply
// stale responses out of order.

import type {
  GenerationsResponse,
  GraphResponse,
  ViewParams,
} from "./types.js";
import { viewToQuery } from "./urlState.js";

type FetchLike = (input: string, init?: RequestInit) => Promise<Response>;

export class ApiError extends Error {
  constructor(
    readonly code: string,
    message: string,
  ) {
    super(message);
  }
}

export class LatticeClient {
  private inflightGraph: AbortController | null = null;

  constructor(
    readonly baseUrl: string,
    private readonly fetchFn: FetchLike = (input, init) => fetch(input, init),
  ) {}

  graphUrl(sessionId: string, view: ViewParams): string {
    const query = viewToQuery(view);
    return `${this.baseUrl}/sessions/${sessionId}/graph${query ? `?${query}` : ""}`;
  }

  private async request<T>(url: string, init?: RequestInit): Promise<T> {
    const resp = await this.fetchFn(url, init);
    const body = await resp.json();
    if (!resp.ok) {
      const err = body?.error ?? {};
      throw new ApiError(err.code ?? "internal", err.message ?? resp.statusText);
    }
    return body as T;
  }

  createSession(): Promise<{ session_id: string }> {
    return this.request(`${this.baseUrl}/sessions`, { method: "POST" });
  }

  addPrompt(
    sessionId: string,
    body: Record<string, unknown>,
  ): Promise<{ job_id: string; prompt_id: string; status: string }> {
    return this.request(`${this.baseUrl}/sessions/${sessionId}/prompts`, {
      method: "POST",
      headers: { "Content-Type": "application/json" },
      body: JSON.stringify(body),
    });
  }

  jobStatus(jobId: string): Promise<{ status: string; error: string | null }> {
    return this.request(`${this.baseUrl}/jobs/${jobId}`);
  }

  /** Fetch the graph, cancelling any not-yet-resolved previous fetch. */
  getGraph(sessionId: string, view: ViewParams): Promise<GraphResponse> {
    this.inflightGraph?.abort();
    const controller = new AbortController();
    this.inflightGraph = controller;
    return this.request<GraphResponse>(this.graphUrl(sessionId, view), {
      signal: controller.signal,
    }).finally(() => {
      if (this.inflightGraph === controller) this.inflightGraph = null;
    });
  }

  getGenerations(
    sessionId: string,
    view: ViewParams,
  ): Promise<GenerationsResponse> {
    const selection = view.selection.join(",");
    const query = selection ? `?selection=${encodeURIComponent(selection)}` : "";
    return this.request(
      `${this.baseUrl}/sessions/${sessionId}/generations${query}`,
    );
  }
}
