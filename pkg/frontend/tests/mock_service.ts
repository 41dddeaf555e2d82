// In-memory stand-in for the editing service, faithful to the HTTP contract:
// identity edits echo the current render; facet edits move the codes digest;
// content edits change only the text. Responses can be held back to exercise
// out-of-order delivery.

import type { FetchLike } from "../src/api.js";

interface SessionState {
  text: string;
  codes: Record<string, unknown>;
}

export const CATALOG = {
  rotation: ["-10", "0", "10"],
  font: ["demo", "other"],
  color: ["blue", "green", "red"],
};

function json(status: number, body: unknown): Response {
  return new Response(JSON.stringify(body), {
    status,
    headers: { "content-type": "application/json" },
  });
}

export class MockService {
  sessions = new Map<string, SessionState>();
  calls: Array<{ method: string; path: string; body: unknown }> = [];
  manual = false; // when set, responses wait for release()
  failNext: { status: number; detail: string } | null = null;
  rejectNext = false;

  private nextId = 0;
  private pending: Array<() => void> = [];

  readonly fetch: FetchLike = async (url, init) => {
    const method = init?.method ?? "GET";
    const body = init?.body ? JSON.parse(init.body as string) : null;
    this.calls.push({ method, path: url, body });
    if (this.rejectNext) {
      this.rejectNext = false;
      throw new TypeError("fetch failed");
    }
    if (this.failNext) {
      const f = this.failNext;
      this.failNext = null;
      return json(f.status, { detail: f.detail });
    }
    // the server processes at arrival time; only delivery is delayed
    const response = this.route(method, url, body);
    if (this.manual) {
      await new Promise<void>((resolve) => this.pending.push(resolve));
    }
    return response;
  };

  /** Deliver the i-th held-back response (issue order). */
  release(i: number): void {
    const r = this.pending[i];
    if (!r) throw new Error(`no pending response ${i}`);
    r();
  }

  editCalls(): Array<{ path: string; body: unknown }> {
    return this.calls.filter((c) => c.path.endsWith("/edit"));
  }

  private payload(id: string): unknown {
    const s = this.sessions.get(id)!;
    const digest = JSON.stringify(s.codes);
    return {
      session_id: id,
      text: s.text,
      codes_digest: digest,
      image_png: `img[${digest}|${s.text}]`,
      attributes: CATALOG,
    };
  }

  private route(method: string, url: string, body: unknown): Response {
    if (method === "POST" && url.endsWith("/sessions")) {
      const b = body as { text: string; bbox: number[] };
      const id = `s${++this.nextId}`;
      this.sessions.set(id, { text: b.text, codes: {} });
      return json(200, this.payload(id));
    }
    const edit = url.match(/\/sessions\/([^/]+)\/edit$/);
    if (method === "POST" && edit) {
      const s = this.sessions.get(edit[1]!);
      if (!s) return json(404, { detail: "no such session" });
      const d = body as Record<string, unknown>;
      if (typeof d.content === "string") s.text = d.content;
      for (const facet of ["rotation", "font", "color"]) {
        if (d[facet] !== undefined) s.codes[facet] = d[facet];
      }
      return json(200, this.payload(edit[1]!));
    }
    const plain = url.match(/\/sessions\/([^/]+)$/);
    if (plain) {
      if (!this.sessions.has(plain[1]!)) return json(404, { detail: "no such session" });
      if (method === "DELETE") {
        this.sessions.delete(plain[1]!);
        return json(200, { deleted: plain[1] });
      }
      return json(200, this.payload(plain[1]!));
    }
    if (url.endsWith("/attributes")) return json(200, { facets: CATALOG });
    return json(404, { detail: `no route ${method} ${url}` });
  }
}
