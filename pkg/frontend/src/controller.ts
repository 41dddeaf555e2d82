// Session lifecycle and edit flow. Every preview pixel comes from a service
// response; this layer never synthesizes imagery.

import { ApiClient, ApiError } from "./api.js";
import { debounce, type Debounced } from "./debounce.js";
import { minimalDirective, validBlend, validMix } from "./directive.js";
import type {
  Bbox,
  ColorMix,
  EditDirective,
  FacetBlend,
  FacetControls,
  HistoryEntry,
  UiEditState,
} from "./types.js";
import { emptyControls, initialState } from "./types.js";

export const DEBOUNCE_MS = 150;

export class EditorController {
  state: UiEditState = initialState();
  onChange: ((state: UiEditState) => void) | null = null;

  private seq = 0; // next directive sequence number
  private applied = 0; // newest sequence rendered; older responses are stale
  private acked: FacetControls = emptyControls();
  private readonly scheduleFlush: Debounced<[]>;

  constructor(
    private readonly api: ApiClient,
    waitMs: number = DEBOUNCE_MS,
  ) {
    this.scheduleFlush = debounce(() => void this.flush(), waitMs);
  }

  private notify(): void {
    this.onChange?.(this.state);
  }

  private fail(error: unknown, retryable: boolean): void {
    this.state.error = error instanceof Error ? error.message : String(error);
    this.state.retryable = retryable;
    this.notify();
  }

  /** Client-side guard: a dragged bbox must enclose area. */
  static bboxValid(bbox: Bbox): boolean {
    return bbox.x2 > bbox.x1 && bbox.y2 > bbox.y1;
  }

  async createSession(
    scenePng: string,
    maskPng: string,
    bbox: Bbox,
    text: string,
  ): Promise<boolean> {
    if (!EditorController.bboxValid(bbox)) {
      this.fail(new Error("bounding box has zero area"), false);
      return false; // validation error: no request goes out
    }
    try {
      const resp = await this.api.createSession(scenePng, maskPng, bbox, text);
      this.state = initialState();
      this.state.sessionId = resp.session_id;
      this.state.attributes = resp.attributes ?? {};
      this.state.content = resp.text;
      this.state.previewPng = resp.image_png;
      this.state.codesDigest = resp.codes_digest;
      // the creation render doubles as the identity entry in history
      this.state.history.push({
        directive: {},
        imagePng: resp.image_png,
        codesDigest: resp.codes_digest,
      });
      this.seq = 0;
      this.applied = 0;
      this.acked = emptyControls();
      this.acked.content = resp.text;
      this.notify();
      return true;
    } catch (e) {
      // no partial state: a failed create leaves everything as it was
      this.fail(e, !(e instanceof ApiError));
      return false;
    }
  }

  /** Empty-effect directive; the service echoes the current render. */
  async identityEdit(): Promise<void> {
    await this.issue({});
  }

  setContent(text: string): void {
    this.state.controls.content = text;
    this.state.content = text;
    this.scheduleFlush();
  }

  setFacetBlend(facet: "rotation" | "font", blend: FacetBlend): void {
    if (!validBlend(blend)) {
      this.fail(new Error(`invalid ${facet} blend`), false);
      return;
    }
    this.state.controls[facet] = blend;
    this.scheduleFlush();
  }

  setColorBlend(blend: FacetBlend): void {
    if (!validBlend(blend)) {
      this.fail(new Error("invalid color blend"), false);
      return;
    }
    this.state.controls.color = blend;
    this.scheduleFlush();
  }

  setColorMix(mix: ColorMix): void {
    if (!validMix(mix)) {
      this.fail(new Error("color mix gammas must lie in [-1, 1]"), false);
      return;
    }
    this.state.controls.color = mix;
    this.scheduleFlush();
  }

  /** Issue whatever changed since the last acknowledged render, if anything. */
  private async flush(): Promise<void> {
    const directive = minimalDirective(this.state.controls, this.acked);
    if (directive === null) return;
    await this.issue(directive);
  }

  private async issue(directive: EditDirective): Promise<void> {
    const sid = this.state.sessionId;
    if (sid === null) {
      this.fail(new Error("no live session"), false);
      return;
    }
    const mySeq = ++this.seq;
    const snapshot: FacetControls = { ...this.state.controls };
    try {
      const resp = await this.api.edit(sid, directive);
      if (mySeq <= this.applied) return; // superseded: discard stale response
      this.applied = mySeq;
      this.acked = snapshot;
      this.state.content = resp.text;
      this.state.previewPng = resp.image_png;
      this.state.codesDigest = resp.codes_digest;
      this.state.history.push({
        directive,
        imagePng: resp.image_png,
        codesDigest: resp.codes_digest,
      });
      this.state.error = null;
      this.state.retryable = false;
      this.notify();
    } catch (e) {
      if (mySeq <= this.applied) return;
      this.fail(e, !(e instanceof ApiError));
    }
  }

  /** Side-by-side panes for what-if comparison; null when hidden/disabled. */
  compare(i: number, j: number): { left: HistoryEntry; right: HistoryEntry } | null {
    const h = this.state.history;
    if (h.length === 0) return null; // feature hidden on empty history
    const left = h[i];
    const right = h[j];
    if (left === undefined || right === undefined) return null;
    return { left, right };
  }

  async close(): Promise<void> {
    this.scheduleFlush.cancel();
    const sid = this.state.sessionId;
    if (sid !== null) {
      await this.api.deleteSession(sid).catch(() => undefined);
    }
    this.state = initialState();
    this.notify();
  }
}
