import type { AssetMeta, EventRow, JobMsg, SceneSummary } from "./types.js";

export class ApiError extends Error {
  constructor(public status: number, public detail: string) {
    super(`HTTP ${status}: ${detail}`);
  }
}

type FetchLike = (input: string, init?: RequestInit) => Promise<Response>;

export class ApiClient {
  constructor(
    private base = "",
    private fetchFn: FetchLike = (input, init) => fetch(input, init),
  ) {}

  private async request(method: string, path: string, body?: unknown): Promise<any> {
    const init: RequestInit = { method };
    if (body !== undefined) {
      init.headers = { "content-type": "application/json" };
      init.body = JSON.stringify(body);
    }
    const response = await this.fetchFn(this.base + path, init);
    if (!response.ok) {
      let detail = response.statusText;
      try {
        const payload = await response.json();
        detail = payload.detail ?? payload.error ?? detail;
      } catch {
        // non-JSON error body; keep the status text
      }
      throw new ApiError(response.status, detail);
    }
    return response.json();
  }

  session(): Promise<SceneSummary> {
    return this.request("GET", "/session");
  }

  events(): Promise<EventRow[]> {
    return this.request("GET", "/events");
  }

  candidates(eventId: string): Promise<{ methods: Record<string, AssetMeta[]> }> {
    return this.request("GET", `/events/${eventId}/candidates`);
  }

  alternatives(eventId: string, method: string): Promise<{ assets: AssetMeta[] }> {
    return this.request("GET", `/events/${eventId}/alternatives?method=${method}`);
  }

  select(eventId: string, assetId: string): Promise<{ asset_id: string }> {
    return this.request("POST", `/events/${eventId}/select`, { asset_id: assetId });
  }

  transfer(
    eventId: string,
    assetId: string,
    prompt: string,
    mode: "transfer" | "similar" = "transfer",
  ): Promise<JobMsg> {
    return this.request("POST", `/events/${eventId}/transfer`, {
      asset_id: assetId,
      prompt,
      mode,
    });
  }

  injectAction(action: Record<string, unknown>): Promise<{ accepted: boolean }> {
    return this.request("POST", "/actions", action);
  }

  audioUrl(assetId: string): string {
    return `${this.base}/assets/${assetId}/audio`;
  }
}
