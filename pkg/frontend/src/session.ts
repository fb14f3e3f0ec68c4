/** HTTP side of the server protocol. */

import type { IntervalMessage, SummaryJson } from "./protocol.js";

export type FetchLike = (url: string, init?: RequestInit) => Promise<Response>;

export class HttpError extends Error {
  constructor(
    readonly status: number,
    readonly code: string,
    readonly detail: string,
  ) {
    super(`${code}: ${detail}`);
    this.name = "HttpError";
  }
}

export class SessionClient {
  constructor(
    private readonly baseUrl: string,
    private readonly fetchImpl: FetchLike = (url, init) => fetch(url, init),
  ) {}

  private async request(path: string, init?: RequestInit): Promise<Response> {
    const res = await this.fetchImpl(this.baseUrl + path, init);
    if (!res.ok) {
      let code = "http_error";
      let detail = res.statusText;
      try {
        const body = await res.json();
        if (typeof body.error === "string") code = body.error;
        if (typeof body.detail === "string") detail = body.detail;
      } catch {
        // non-JSON error body; keep the status text
      }
      throw new HttpError(res.status, code, detail);
    }
    return res;
  }

  async create(
    mapping: Record<string, string>,
    config?: Record<string, number>,
  ): Promise<{ session_id: string; started_at: string }> {
    const res = await this.request("/sessions", {
      method: "POST",
      headers: { "content-type": "application/json" },
      body: JSON.stringify(config ? { mapping, config } : { mapping }),
    });
    return res.json();
  }

  async start(id: string): Promise<void> {
    await this.request(`/sessions/${id}/start`, { method: "POST" });
  }

  async stop(id: string): Promise<IntervalMessage[]> {
    const res = await this.request(`/sessions/${id}/stop`, { method: "POST" });
    const body = await res.json();
    return body.intervals as IntervalMessage[];
  }

  async summary(id: string): Promise<SummaryJson> {
    const res = await this.request(`/sessions/${id}/summary`);
    return res.json();
  }

  /** Exact bytes of the server's CSV export; never re-encoded. */
  async exportCsv(id: string): Promise<Uint8Array> {
    const res = await this.request(`/sessions/${id}/export.csv`);
    return new Uint8Array(await res.arrayBuffer());
  }

  wsUrl(id: string): string {
    return this.baseUrl.replace(/^http/, "ws") + `/ws/sessions/${id}`;
  }
}
