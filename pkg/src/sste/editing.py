"""Latent-space editing: layer swaps, interpolation, centroids, color mixing.

Layer codes bind to style facets by level: w0 carries rotation, w1..w3 carry
the font (a 3072-d slice), w4 carries color. Edits replace or interpolate
the bound levels and re-render; text edits re-render and re-encode the
content image while keeping every layer code untouched.
"""

from __future__ import annotations

import json
import os
from dataclasses import dataclass, field, replace
from typing import Callable, Optional

import numpy as np
import torch
import torch.nn.functional as F

from .errors import ContractViolation
from .generator import CODE_DIM, CODE_ROWS, FACET_LEVELS, N_LEVELS, LayerCodes
from .model import EditingModel
from .records import StyleAttributeLabel


def swap_layers(a: LayerCodes, b: LayerCodes,
                levels: tuple[int, ...]) -> tuple[LayerCodes, LayerCodes]:
    """Exchange the given levels between two code stacks. Involutive."""
    if not levels:
        raise ContractViolation("swap_layers needs at least one level")
    out_a, out_b = a.clone(), b.clone()
    for lvl in levels:
        if not 0 <= lvl < N_LEVELS:
            raise ContractViolation(f"swap level {lvl} out of range")
        out_a.stack[:, lvl] = b.stack[:, lvl]
        out_b.stack[:, lvl] = a.stack[:, lvl]
    return out_a, out_b


def interpolate(frm: LayerCodes, to: LayerCodes, gamma: float,
                levels: Optional[tuple[int, ...]] = None) -> LayerCodes:
    """gamma * frm + (1 - gamma) * to, on all levels or a subset."""
    if not 0.0 <= gamma <= 1.0:
        raise ContractViolation(f"interpolation gamma {gamma} outside [0, 1]")
    if levels is None:
        return LayerCodes(gamma * frm.stack + (1.0 - gamma) * to.stack)
    out = to.clone()
    for lvl in levels:
        if not 0 <= lvl < N_LEVELS:
            raise ContractViolation(f"interpolation level {lvl} out of range")
        out.stack[:, lvl] = gamma * frm.stack[:, lvl] + (1.0 - gamma) * to.stack[:, lvl]
    return out


def centroid(codes: LayerCodes, member: torch.Tensor) -> torch.Tensor:
    """Mean stack [5, 2, 512] over the records selected by the boolean mask."""
    if member.dtype != torch.bool or member.shape[0] != codes.stack.shape[0]:
        raise ContractViolation("centroid needs a boolean member mask over the batch")
    if not bool(member.any()):
        raise ContractViolation("centroid over an empty group")
    return codes.stack[member].mean(dim=0)


def mix_colors(red: LayerCodes, green: LayerCodes, blue: LayerCodes,
               gammas: tuple[float, float, float]) -> torch.Tensor:
    """Color-level blend 0.5 * (g0*red + g1*green + g2*blue) -> [B, 2, 512]."""
    if len(gammas) != 3:
        raise ContractViolation("mix_colors needs exactly three gammas")
    (lvl,) = FACET_LEVELS["color"]
    g0, g1, g2 = gammas
    return 0.5 * (g0 * red.level(lvl) + g1 * green.level(lvl) + g2 * blue.level(lvl))


def project_embeddings(vectors: np.ndarray, seed: int = 0) -> np.ndarray:
    """2-D t-SNE projection of style vectors or flattened codes."""
    from sklearn.manifold import TSNE

    arr = np.asarray(vectors, dtype=np.float64)
    if arr.ndim != 2 or arr.shape[0] < 3:
        raise ContractViolation("project_embeddings needs [N >= 3, D] vectors")
    perplexity = min(30.0, (arr.shape[0] - 1) / 3.0)
    tsne = TSNE(n_components=2, random_state=seed, init="pca",
                perplexity=max(2.0, perplexity))
    return tsne.fit_transform(arr)


# --- centroid store ----------------------------------------------------------


class CentroidStore:
    """Per-facet, per-label mean codes at that facet's bound levels."""

    def __init__(self, centroids: Optional[dict[str, dict[str, torch.Tensor]]] = None):
        self.centroids = centroids or {}

    def get(self, facet: str, label: str) -> torch.Tensor:
        try:
            return self.centroids[facet][label]
        except KeyError:
            raise ContractViolation(f"no centroid for {facet}={label!r}") from None

    def labels(self, facet: str) -> list[str]:
        return sorted(self.centroids.get(facet, {}))

    def save(self, path: str) -> None:
        doc = {facet: {label: code.tolist() for label, code in by_label.items()}
               for facet, by_label in self.centroids.items()}
        with open(path, "w") as f:
            json.dump({"format": "centroid-store", "version": 1, "facets": doc}, f)

    @classmethod
    def load(cls, path: str) -> "CentroidStore":
        if not os.path.isfile(path):
            raise ContractViolation(f"centroid store does not exist: {path}")
        with open(path) as f:
            doc = json.load(f)
        cents = {facet: {label: torch.tensor(code, dtype=torch.float32)
                         for label, code in by_label.items()}
                 for facet, by_label in doc["facets"].items()}
        return cls(cents)


def facet_label_key(facet: str, label: StyleAttributeLabel) -> str:
    if facet == "rotation":
        return f"{label.rotation_deg:g}"
    if facet == "font":
        return label.font_id
    if facet == "color":
        return label.color_id
    raise ContractViolation(f"unknown facet {facet!r}")


def compute_centroids(codes: LayerCodes,
                      labels: list[StyleAttributeLabel]) -> CentroidStore:
    """Group codes by each facet's label and average the bound levels."""
    if codes.stack.shape[0] != len(labels):
        raise ContractViolation("one label per code row required")
    store: dict[str, dict[str, torch.Tensor]] = {}
    for facet, levels in FACET_LEVELS.items():
        groups: dict[str, list[int]] = {}
        for i, lab in enumerate(labels):
            groups.setdefault(facet_label_key(facet, lab), []).append(i)
        store[facet] = {}
        for key, idxs in groups.items():
            member = torch.zeros(len(labels), dtype=torch.bool)
            member[idxs] = True
            store[facet][key] = centroid(codes, member)[list(levels)]
    return CentroidStore(store)


# --- sessions ----------------------------------------------------------------


@dataclass
class EditRequest:
    """One edit: change text and/or move facets toward target level codes.

    facets maps facet name to level codes shaped [n_levels(facet), 2, 512];
    gamma interpolates toward those targets (1.0 replaces outright).
    """

    text: Optional[str] = None
    facets: dict[str, torch.Tensor] = field(default_factory=dict)
    gamma: float = 1.0


@dataclass
class EditSession:
    model: EditingModel
    style: torch.Tensor        # [1, 3, 64, w] original style crop
    background: torch.Tensor   # [1, 3, 64, w] recovered background
    f_s: torch.Tensor          # style feature map
    z: torch.Tensor            # [1, 512]
    codes: LayerCodes
    text: str
    content: torch.Tensor      # [1, 3, 64, w] canonical content render
    render_text: Callable[[str], torch.Tensor]

    @property
    def w(self) -> int:
        return int(self.style.shape[-1])

    def image(self) -> torch.Tensor:
        """Render the session's current state to a [1, 3, 64, w] image."""
        self.model.eval()
        with torch.no_grad():
            f_c = self.model.encode_content(self.content, style=self.style)
            return self.model.render(f_c, self.codes, self.background,
                                     style_map=self.f_s)


def open_session(model: EditingModel, scene: torch.Tensor, mask: torch.Tensor,
                 style: torch.Tensor, bbox: torch.Tensor, text: str,
                 render_text: Callable[[str], torch.Tensor]) -> EditSession:
    """Encode one record into an editable session (batch size 1)."""
    if scene.shape[0] != 1:
        raise ContractViolation("sessions hold exactly one record")
    model.eval()
    with torch.no_grad():
        content = render_text(text)
        background, _ = model.recover_background(scene, mask, bbox, style.shape[-1])
        f_s, z = model.encode_style(style, content=content)
        codes = model.map_codes(z)
    return EditSession(model=model, style=style, background=background, f_s=f_s,
                       z=z, codes=codes, text=text, content=content,
                       render_text=render_text)


def apply_edit(session: EditSession, edit: EditRequest) -> tuple[EditSession, torch.Tensor]:
    """Apply one edit; returns the updated session and the rendered image."""
    if not 0.0 <= edit.gamma <= 1.0:
        raise ContractViolation(f"edit gamma {edit.gamma} outside [0, 1]")
    codes = session.codes.clone()
    for facet, target in edit.facets.items():
        levels = FACET_LEVELS.get(facet)
        if levels is None:
            raise ContractViolation(f"unknown facet {facet!r}")
        target = torch.as_tensor(target, dtype=codes.stack.dtype)
        want = (len(levels), CODE_ROWS, CODE_DIM)
        if tuple(target.shape) != want:
            raise ContractViolation(
                f"{facet} codes must be {want}, got {tuple(target.shape)}")
        for i, lvl in enumerate(levels):
            codes.stack[:, lvl] = (edit.gamma * target[i]
                                   + (1.0 - edit.gamma) * codes.stack[:, lvl])
    text = session.text
    content = session.content
    if edit.text is not None and edit.text != session.text:
        text = edit.text
        content = session.render_text(text)
    out = replace(session, codes=codes, text=text, content=content)
    return out, out.image()


def content_tensor(pixels: np.ndarray, w: int) -> torch.Tensor:
    """Resize a rendered content image to the session width as a unit tensor."""
    from .data.collate import to_unit_tensor

    t = to_unit_tensor(pixels).unsqueeze(0)
    if t.shape[-1] != w:
        t = F.interpolate(t, size=(t.shape[-2], w), mode="bilinear", align_corners=False)
    return t
