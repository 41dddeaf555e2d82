// Building minimal directives: only facets the user changed since the last
// acknowledged render go on the wire.

import type { ColorMix, EditDirective, FacetBlend, FacetControls } from "./types.js";

function isMix(v: FacetBlend | ColorMix): v is ColorMix {
  return "gammas" in v;
}

function sameFacet(
  a: FacetBlend | ColorMix | null,
  b: FacetBlend | ColorMix | null,
): boolean {
  if (a === null || b === null) return a === b;
  if (isMix(a) !== isMix(b)) return false;
  if (isMix(a) && isMix(b)) {
    return a.gammas.every((g, i) => g === b.gammas[i]);
  }
  const x = a as FacetBlend;
  const y = b as FacetBlend;
  return x.from === y.from && x.to === y.to && x.gamma === y.gamma;
}

/**
 * Diff current controls against the last acknowledged ones.
 * Returns null when nothing changed (no request should be issued).
 */
export function minimalDirective(
  controls: FacetControls,
  acked: FacetControls,
): EditDirective | null {
  const directive: EditDirective = {};
  if (controls.content !== null && controls.content !== acked.content) {
    directive.content = controls.content;
  }
  if (controls.rotation && !sameFacet(controls.rotation, acked.rotation)) {
    directive.rotation = controls.rotation;
  }
  if (controls.font && !sameFacet(controls.font, acked.font)) {
    directive.font = controls.font;
  }
  if (controls.color && !sameFacet(controls.color, acked.color)) {
    directive.color = controls.color;
  }
  return Object.keys(directive).length > 0 ? directive : null;
}

export function validBlend(blend: FacetBlend): boolean {
  return (
    blend.from.length > 0 &&
    blend.to.length > 0 &&
    Number.isFinite(blend.gamma) &&
    blend.gamma >= 0 &&
    blend.gamma <= 1
  );
}

export function validMix(mix: ColorMix): boolean {
  return mix.gammas.every((g) => Number.isFinite(g) && g >= -1 && g <= 1);
}
