// bbox drag-selection helpers and the default mask (the bbox rectangle).

import type { Bbox } from "./types.js";

/** Normalize a drag gesture into an ordered, integer bbox. */
export function bboxFromDrag(
  startX: number,
  startY: number,
  endX: number,
  endY: number,
): Bbox {
  return {
    x1: Math.round(Math.min(startX, endX)),
    y1: Math.round(Math.min(startY, endY)),
    x2: Math.round(Math.max(startX, endX)),
    y2: Math.round(Math.max(startY, endY)),
  };
}

export function clampBbox(bbox: Bbox, width: number, height: number): Bbox {
  const clamp = (v: number, hi: number) => Math.max(0, Math.min(v, hi));
  return {
    x1: clamp(bbox.x1, width),
    y1: clamp(bbox.y1, height),
    x2: clamp(bbox.x2, width),
    y2: clamp(bbox.y2, height),
  };
}

function stripDataUrl(url: string): string {
  const comma = url.indexOf(",");
  return comma >= 0 ? url.slice(comma + 1) : url;
}

/** Scene PNG (base64) from an uploaded image drawn to a canvas. */
export function encodeImage(img: HTMLImageElement): string {
  const canvas = document.createElement("canvas");
  canvas.width = img.naturalWidth;
  canvas.height = img.naturalHeight;
  const ctx = canvas.getContext("2d");
  if (!ctx) throw new Error("canvas 2d context unavailable");
  ctx.drawImage(img, 0, 0);
  return stripDataUrl(canvas.toDataURL("image/png"));
}

/** White-on-black bbox rectangle, encoded as base64 PNG. */
export function maskFromBbox(width: number, height: number, bbox: Bbox): string {
  const canvas = document.createElement("canvas");
  canvas.width = width;
  canvas.height = height;
  const ctx = canvas.getContext("2d");
  if (!ctx) throw new Error("canvas 2d context unavailable");
  ctx.fillStyle = "#000";
  ctx.fillRect(0, 0, width, height);
  ctx.fillStyle = "#fff";
  ctx.fillRect(bbox.x1, bbox.y1, bbox.x2 - bbox.x1, bbox.y2 - bbox.y1);
  return stripDataUrl(canvas.toDataURL("image/png"));
}

export function drawSelection(
  ctx: CanvasRenderingContext2D,
  img: HTMLImageElement | null,
  bbox: Bbox | null,
): void {
  ctx.clearRect(0, 0, ctx.canvas.width, ctx.canvas.height);
  if (img) ctx.drawImage(img, 0, 0);
  if (bbox) {
    ctx.strokeStyle = "#2f81f7";
    ctx.lineWidth = 2;
    ctx.strokeRect(bbox.x1, bbox.y1, bbox.x2 - bbox.x1, bbox.y2 - bbox.y1);
  }
}
