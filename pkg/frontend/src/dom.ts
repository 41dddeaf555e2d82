// View layer: plain DOM wiring around the controller. All imagery shown here
// is decoded straight from service responses.

import { bboxFromDrag, clampBbox, drawSelection, encodeImage, maskFromBbox } from "./canvas.js";
import { EditorController } from "./controller.js";
import type { Bbox, HistoryEntry, UiEditState } from "./types.js";

function el<K extends keyof HTMLElementTagNameMap>(
  tag: K,
  attrs: Record<string, string> = {},
  text = "",
): HTMLElementTagNameMap[K] {
  const node = document.createElement(tag);
  for (const [k, v] of Object.entries(attrs)) node.setAttribute(k, v);
  if (text) node.textContent = text;
  return node;
}

function pngUrl(b64: string): string {
  return `data:image/png;base64,${b64}`;
}

interface FacetRow {
  root: HTMLElement;
  from: HTMLSelectElement;
  to: HTMLSelectElement;
  slider: HTMLInputElement;
  readout: HTMLSpanElement;
}

function facetRow(label: string): FacetRow {
  const root = el("div", { class: "facet-row" });
  root.append(el("label", {}, label));
  const from = el("select", { class: `${label}-from` });
  const to = el("select", { class: `${label}-to` });
  const slider = el("input", {
    type: "range",
    min: "0",
    max: "1",
    step: "0.01",
    value: "0",
    class: `${label}-gamma`,
  });
  const readout = el("span", { class: "gamma-readout" }, "0.00");
  root.append(from, el("span", {}, "→"), to, slider, readout);
  return { root, from, to, slider, readout };
}

function fillSelect(select: HTMLSelectElement, labels: string[]): void {
  select.replaceChildren();
  for (const label of labels) select.append(el("option", { value: label }, label));
}

export function mount(root: HTMLElement, controller: EditorController): void {
  // --- upload + bbox selection -------------------------------------------
  const uploadPanel = el("section", { class: "upload" });
  const fileInput = el("input", { type: "file", accept: "image/png" });
  const textInput = el("input", {
    type: "text",
    placeholder: "text in the box",
    class: "scene-text",
  });
  const canvas = el("canvas", { class: "scene-canvas", width: "0", height: "0" });
  const createBtn = el("button", {}, "create session");
  const banner = el("div", { class: "error-banner", hidden: "" });
  const retryBtn = el("button", { class: "retry", hidden: "" }, "retry");
  uploadPanel.append(fileInput, textInput, canvas, createBtn, banner, retryBtn);

  let img: HTMLImageElement | null = null;
  let bbox: Bbox | null = null;
  let dragStart: { x: number; y: number } | null = null;

  const ctx = canvas.getContext("2d");
  const redraw = () => {
    if (ctx) drawSelection(ctx, img, bbox);
  };

  fileInput.addEventListener("change", () => {
    const file = fileInput.files?.[0];
    if (!file) return;
    const url = URL.createObjectURL(file);
    const image = new Image();
    image.onload = () => {
      img = image;
      canvas.width = image.naturalWidth;
      canvas.height = image.naturalHeight;
      bbox = null;
      redraw();
      URL.revokeObjectURL(url);
    };
    image.src = url;
  });

  const canvasPoint = (ev: PointerEvent) => {
    const rect = canvas.getBoundingClientRect();
    return { x: ev.clientX - rect.left, y: ev.clientY - rect.top };
  };
  canvas.addEventListener("pointerdown", (ev) => {
    dragStart = canvasPoint(ev);
  });
  canvas.addEventListener("pointermove", (ev) => {
    if (!dragStart) return;
    const p = canvasPoint(ev);
    bbox = clampBbox(
      bboxFromDrag(dragStart.x, dragStart.y, p.x, p.y),
      canvas.width,
      canvas.height,
    );
    redraw();
  });
  canvas.addEventListener("pointerup", () => {
    dragStart = null;
  });

  const doCreate = async () => {
    if (!img || !bbox) {
      banner.textContent = "pick an image and drag a bounding box first";
      banner.hidden = false;
      return;
    }
    if (!EditorController.bboxValid(bbox)) {
      banner.textContent = "bounding box has zero area";
      banner.hidden = false;
      return; // client-side: nothing goes on the wire
    }
    const scenePng = encodeImage(img);
    const maskPng = maskFromBbox(canvas.width, canvas.height, bbox);
    await controller.createSession(scenePng, maskPng, bbox, textInput.value);
  };
  createBtn.addEventListener("click", () => void doCreate());
  retryBtn.addEventListener("click", () => void doCreate());

  // --- edit controls -------------------------------------------------------
  const editPanel = el("section", { class: "editor", hidden: "" });
  const contentInput = el("input", { type: "text", class: "content-field" });
  contentInput.addEventListener("input", () => controller.setContent(contentInput.value));

  const rotation = facetRow("rotation");
  const font = facetRow("font");
  for (const [name, row] of [
    ["rotation", rotation],
    ["font", font],
  ] as const) {
    const push = () => {
      row.readout.textContent = Number(row.slider.value).toFixed(2);
      controller.setFacetBlend(name, {
        from: row.from.value,
        to: row.to.value,
        gamma: Number(row.slider.value), // slider maps linearly to gamma
      });
    };
    row.slider.addEventListener("input", push);
    row.from.addEventListener("change", push);
    row.to.addEventListener("change", push);
  }

  // color mixer: three signed sliders over the red/green/blue centroids
  const mixer = el("div", { class: "color-mixer" });
  const mixSliders: HTMLInputElement[] = [];
  const mixReadouts: HTMLSpanElement[] = [];
  for (const channel of ["g0", "g1", "g2"]) {
    const slider = el("input", {
      type: "range",
      min: "-1",
      max: "1",
      step: "0.01",
      value: "0",
      class: `mix-${channel}`,
    });
    const readout = el("span", { class: "gamma-readout" }, "0.00");
    slider.addEventListener("input", () => {
      mixReadouts.forEach((r, i) => {
        r.textContent = Number(mixSliders[i]!.value).toFixed(2);
      });
      controller.setColorMix({
        gammas: [
          Number(mixSliders[0]!.value),
          Number(mixSliders[1]!.value),
          Number(mixSliders[2]!.value),
        ],
      });
    });
    mixer.append(el("label", {}, channel), slider, readout);
    mixSliders.push(slider);
    mixReadouts.push(readout);
  }

  const preview = el("img", { class: "preview", alt: "preview" });
  editPanel.append(contentInput, rotation.root, font.root, mixer, preview);

  // --- history compare ------------------------------------------------------
  const historyPanel = el("section", { class: "history", hidden: "" });
  const selectI = el("select", { class: "history-i" });
  const selectJ = el("select", { class: "history-j" });
  const panes = el("div", { class: "compare-panes" });
  historyPanel.append(selectI, selectJ, panes);

  const pane = (entry: HistoryEntry) => {
    const box = el("figure", { class: "compare-pane" });
    const image = el("img", { alt: "history render" });
    image.src = pngUrl(entry.imagePng);
    box.append(image, el("figcaption", {}, JSON.stringify(entry.directive)));
    return box;
  };
  const renderCompare = () => {
    const got = controller.compare(Number(selectI.value), Number(selectJ.value));
    panes.replaceChildren();
    if (got) panes.append(pane(got.left), pane(got.right));
  };
  selectI.addEventListener("change", renderCompare);
  selectJ.addEventListener("change", renderCompare);

  // --- render loop -----------------------------------------------------------
  const render = (state: UiEditState) => {
    banner.hidden = state.error === null;
    banner.textContent = state.error ?? "";
    retryBtn.hidden = !state.retryable;
    editPanel.hidden = state.sessionId === null;
    if (state.previewPng) preview.src = pngUrl(state.previewPng);
    for (const [facet, row] of [
      ["rotation", rotation],
      ["font", font],
    ] as const) {
      const labels = state.attributes[facet] ?? [];
      if (row.from.options.length !== labels.length) {
        fillSelect(row.from, labels);
        fillSelect(row.to, labels);
      }
    }
    historyPanel.hidden = state.history.length === 0; // hidden when empty
    const indices = state.history.map((_, i) => String(i));
    if (selectI.options.length !== indices.length) {
      fillSelect(selectI, indices);
      fillSelect(selectJ, indices);
    }
  };
  controller.onChange = render;

  root.append(uploadPanel, editPanel, historyPanel);
  render(controller.state);
}
