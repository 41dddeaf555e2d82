// Wire types for the editing service; shapes mirror the HTTP JSON contract.

export interface FacetBlend {
  from: string;
  to: string;
  gamma: number; // 0 renders the "from" centroid, 1 the "to" centroid
}

export interface ColorMix {
  gammas: [number, number, number]; // over the red/green/blue centroids
}

export interface EditDirective {
  content?: string;
  rotation?: FacetBlend;
  font?: FacetBlend;
  color?: FacetBlend | ColorMix;
}

export type AttributeCatalog = Record<string, string[]>;

export interface SessionResponse {
  session_id: string;
  text: string;
  codes_digest: string;
  image_png: string; // base64 PNG
  attributes?: AttributeCatalog;
}

export interface Bbox {
  x1: number;
  y1: number;
  x2: number;
  y2: number;
}

export interface HistoryEntry {
  directive: EditDirective;
  imagePng: string;
  codesDigest: string;
}

/** Slider positions as the user left them; not yet a directive. */
export interface FacetControls {
  rotation: FacetBlend | null;
  font: FacetBlend | null;
  color: FacetBlend | ColorMix | null;
  content: string | null;
}

export interface UiEditState {
  sessionId: string | null;
  attributes: AttributeCatalog;
  content: string;
  controls: FacetControls;
  previewPng: string | null;
  codesDigest: string | null;
  history: HistoryEntry[]; // append-only within a session
  error: string | null;
  retryable: boolean;
}

export function emptyControls(): FacetControls {
  return { rotation: null, font: null, color: null, content: null };
}

export function initialState(): UiEditState {
  return {
    sessionId: null,
    attributes: {},
    content: "",
    controls: emptyControls(),
    previewPng: null,
    codesDigest: null,
    history: [],
    error: null,
    retryable: false,
  };
}
