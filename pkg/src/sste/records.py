"""Core dataset record types.

Images live in records as 8-bit RGB numpy arrays exactly as stored on disk;
conversion to [-1, 1] float tensors happens at the collation boundary.
"""

from __future__ import annotations

import json
import os
from dataclasses import dataclass, field
from typing import Optional

import numpy as np
from PIL import Image

from .errors import ConfigurationError, ContractViolation

BBox = tuple[int, int, int, int]  # x1, y1, x2, y2 (exclusive right/bottom)


@dataclass
class StyleAttributeLabel:
    rotation_deg: float
    font_id: str
    color_id: str

    def to_dict(self) -> dict:
        return {"rotation_deg": self.rotation_deg, "font_id": self.font_id,
                "color_id": self.color_id}

    @classmethod
    def from_dict(cls, d: dict) -> "StyleAttributeLabel":
        return cls(rotation_deg=float(d["rotation_deg"]), font_id=d["font_id"],
                   color_id=d["color_id"])


@dataclass
class ContentRender:
    """A word rendered in the canonical font on a constant gray background."""

    pixels: np.ndarray  # (64, w, 3) uint8
    text: str
    font_id: str


@dataclass
class SceneRecord:
    """One editing instance: large scene, text mask, style crop, strings.

    Synthetic records carry both ground truths; real records carry neither.
    """

    id: str
    scene: np.ndarray       # (H, W2, 3) uint8
    mask: np.ndarray        # (H, W2) uint8 in {0, 1}, 1 = text pixel
    style_crop: np.ndarray  # (h, w, 3) uint8
    bbox: BBox              # location of style_crop inside scene
    text: str
    target_text: str
    background_gt: Optional[np.ndarray] = None    # (h, w, 3) uint8
    target_style_gt: Optional[np.ndarray] = None  # (h, w, 3) uint8
    source_tag: str = "synthetic"
    label: Optional[StyleAttributeLabel] = None

    def validate(self) -> None:
        h, w2 = self.scene.shape[:2]
        x1, y1, x2, y2 = self.bbox
        if not (0 <= x1 < x2 <= w2 and 0 <= y1 < y2 <= h):
            raise ContractViolation(f"bbox {self.bbox} outside scene {w2}x{h}")
        if self.mask.shape != (h, w2):
            raise ContractViolation("mask and scene spatial sizes differ")
        crop = self.scene[y1:y2, x1:x2]
        if crop.shape != self.style_crop.shape or not np.array_equal(crop, self.style_crop):
            raise ContractViolation("style_crop is not the bbox crop of scene")
        outside = self.mask.copy()
        outside[y1:y2, x1:x2] = 0
        if outside.any():
            raise ContractViolation("mask has nonzero pixels outside bbox")
        synthetic = self.background_gt is not None and self.target_style_gt is not None
        neither = self.background_gt is None and self.target_style_gt is None
        if not (synthetic or neither):
            raise ContractViolation("ground truths must be both present or both absent")

    @property
    def is_synthetic(self) -> bool:
        return self.source_tag == "synthetic"


def _save_png(path: str, arr: np.ndarray) -> None:
    Image.fromarray(arr).save(path, format="PNG")


def _load_png(path: str) -> np.ndarray:
    return np.asarray(Image.open(path).convert("RGB"))


def save_record(record: SceneRecord, t_c1: ContentRender, t_c2: ContentRender,
                out_dir: str) -> None:
    """One directory per record: i_s / t_c1 / t_c2 / i_ls / i_ms (+ gt) + meta.json."""
    os.makedirs(out_dir, exist_ok=True)
    _save_png(os.path.join(out_dir, "i_s.png"), record.style_crop)
    _save_png(os.path.join(out_dir, "t_c1.png"), t_c1.pixels)
    _save_png(os.path.join(out_dir, "t_c2.png"), t_c2.pixels)
    _save_png(os.path.join(out_dir, "i_ls.png"), record.scene)
    Image.fromarray(record.mask * 255).save(os.path.join(out_dir, "i_ms.png"), format="PNG")
    if record.background_gt is not None:
        _save_png(os.path.join(out_dir, "g_b.png"), record.background_gt)
    if record.target_style_gt is not None:
        _save_png(os.path.join(out_dir, "gt_c2.png"), record.target_style_gt)
    meta = {
        "id": record.id,
        "bbox": list(record.bbox),
        "text": record.text,
        "target_text": record.target_text,
        "source_tag": record.source_tag,
        "content_font": t_c1.font_id,
    }
    if record.label is not None:
        meta["label"] = record.label.to_dict()
    with open(os.path.join(out_dir, "meta.json"), "w") as f:
        json.dump(meta, f, indent=2, sort_keys=True)


def load_record(record_dir: str) -> tuple[SceneRecord, ContentRender, ContentRender]:
    with open(os.path.join(record_dir, "meta.json")) as f:
        meta = json.load(f)
    mask = np.asarray(Image.open(os.path.join(record_dir, "i_ms.png")).convert("L"))
    mask = (mask > 127).astype(np.uint8)
    bg_path = os.path.join(record_dir, "g_b.png")
    gt_path = os.path.join(record_dir, "gt_c2.png")
    record = SceneRecord(
        id=meta["id"],
        scene=_load_png(os.path.join(record_dir, "i_ls.png")),
        mask=mask,
        style_crop=_load_png(os.path.join(record_dir, "i_s.png")),
        bbox=tuple(meta["bbox"]),
        text=meta["text"],
        target_text=meta["target_text"],
        background_gt=_load_png(bg_path) if os.path.exists(bg_path) else None,
        target_style_gt=_load_png(gt_path) if os.path.exists(gt_path) else None,
        source_tag=meta.get("source_tag", "unknown"),
        label=StyleAttributeLabel.from_dict(meta["label"]) if "label" in meta else None,
    )
    font_id = meta.get("content_font", "")
    t1 = ContentRender(_load_png(os.path.join(record_dir, "t_c1.png")), meta["text"], font_id)
    t2 = ContentRender(_load_png(os.path.join(record_dir, "t_c2.png")), meta["target_text"], font_id)
    return record, t1, t2


def load_dataset(root: str) -> list[tuple[SceneRecord, tuple[ContentRender, ContentRender]]]:
    """Load every record directory (sorted) under a dataset root."""
    if not os.path.isdir(root):
        raise ConfigurationError(f"dataset root does not exist: {root}")
    samples = []
    for name in sorted(os.listdir(root)):
        child = os.path.join(root, name)
        if os.path.isfile(os.path.join(child, "meta.json")):
            record, t1, t2 = load_record(child)
            samples.append((record, (t1, t2)))
    return samples
