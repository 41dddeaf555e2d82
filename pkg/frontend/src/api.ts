// Thin typed client over the service's HTTP/JSON API. No other backends.

import type {
  AttributeCatalog,
  Bbox,
  EditDirective,
  SessionResponse,
} from "./types.js";

export class ApiError extends Error {
  constructor(
    readonly status: number,
    detail: string,
  ) {
    super(detail);
    this.name = "ApiError";
  }
}

export type FetchLike = (url: string, init?: RequestInit) => Promise<Response>;

export class ApiClient {
  constructor(
    private readonly baseUrl: string,
    private readonly fetchImpl: FetchLike = (...a) => fetch(...a),
  ) {}

  private async request<T>(path: string, init?: RequestInit): Promise<T> {
    const resp = await this.fetchImpl(this.baseUrl + path, {
      headers: { "content-type": "application/json" },
      ...init,
    });
    const body = await resp.json().catch(() => ({}));
    if (!resp.ok) {
      const detail =
        typeof body?.detail === "string" ? body.detail : JSON.stringify(body?.detail ?? resp.status);
      throw new ApiError(resp.status, detail);
    }
    return body as T;
  }

  attributes(): Promise<{ facets: AttributeCatalog }> {
    return this.request("/attributes");
  }

  createSession(
    scenePng: string,
    maskPng: string,
    bbox: Bbox,
    text: string,
  ): Promise<SessionResponse> {
    return this.request("/sessions", {
      method: "POST",
      body: JSON.stringify({
        scene_png: scenePng,
        mask_png: maskPng,
        bbox: [bbox.x1, bbox.y1, bbox.x2, bbox.y2],
        text,
      }),
    });
  }

  edit(sessionId: string, directive: EditDirective): Promise<SessionResponse> {
    return this.request(`/sessions/${sessionId}/edit`, {
      method: "POST",
      body: JSON.stringify(directive),
    });
  }

  getSession(sessionId: string): Promise<SessionResponse> {
    return this.request(`/sessions/${sessionId}`);
  }

  deleteSession(sessionId: string): Promise<{ deleted: string }> {
    return this.request(`/sessions/${sessionId}`, { method: "DELETE" });
  }
}
