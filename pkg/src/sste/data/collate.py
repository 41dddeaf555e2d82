"""Batch collation: width law and tensor conversion.

The batch width w is the average post-scaling style-crop width, rounded up to
a multiple of 32 and clamped to [64, 512], so the stride-32 encoders always
see an integral w/32. Scenes and masks become 128 x 2w, everything else
64 x w, all as float tensors in [-1, 1] (masks stay binary 0/1).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np
import torch
import torch.nn.functional as F

from ..errors import ContractViolation
from ..records import ContentRender, SceneRecord

W_FLOOR = 64
W_CEIL = 512
STYLE_H = 64
SCENE_H = 128


@dataclass
class Batch:
    scene: torch.Tensor        # [B, 3, 128, 2w]
    mask: torch.Tensor         # [B, 1, 128, 2w] in {0, 1}
    style: torch.Tensor        # [B, 3, 64, w]
    t_c1: torch.Tensor         # [B, 3, 64, w]
    t_c2: torch.Tensor         # [B, 3, 64, w]
    bboxes: torch.Tensor       # [B, 4] in scaled scene coordinates (x1, y1, x2, y2)
    texts: list[str]
    target_texts: list[str]
    is_synthetic: torch.Tensor  # [B] bool
    background_gt: Optional[torch.Tensor] = None    # [B, 3, 64, w] where synthetic
    target_style_gt: Optional[torch.Tensor] = None  # [B, 3, 64, w] where synthetic

    @property
    def w(self) -> int:
        return self.style.shape[-1]

    def __len__(self) -> int:
        return self.scene.shape[0]


def to_unit_tensor(arr: np.ndarray) -> torch.Tensor:
    """uint8 HWC (or HW) -> float CHW in [-1, 1]."""
    t = torch.from_numpy(np.array(arr, dtype=np.float32, copy=True))
    if t.ndim == 2:
        t = t.unsqueeze(-1)
    return t.permute(2, 0, 1) / 127.5 - 1.0


def from_unit_tensor(t: torch.Tensor) -> np.ndarray:
    """float CHW in [-1, 1] -> uint8 HWC."""
    arr = ((t.detach().clamp(-1, 1) + 1.0) * 127.5).round().byte()
    return arr.permute(1, 2, 0).cpu().numpy()


def _resize(t: torch.Tensor, size: tuple[int, int], mode: str = "bilinear") -> torch.Tensor:
    kwargs = {} if mode == "nearest" else {"align_corners": False}
    return F.interpolate(t.unsqueeze(0), size=size, mode=mode, **kwargs).squeeze(0)


def batch_width(scaled_widths: Sequence[float], target_w: Optional[int] = None) -> int:
    if target_w is not None:
        if target_w % 32 != 0 or not (W_FLOOR <= target_w <= W_CEIL):
            raise ContractViolation(f"target_w must be a multiple of 32 in [{W_FLOOR}, {W_CEIL}]")
        return target_w
    mean_w = float(np.mean(scaled_widths))
    w = int(math.ceil(mean_w / 32.0)) * 32
    return min(W_CEIL, max(W_FLOOR, w))


def collate(records: Sequence[SceneRecord],
            content_pairs: Sequence[tuple[ContentRender, ContentRender]],
            target_w: Optional[int] = None) -> Batch:
    if len(records) == 0:
        raise ContractViolation("cannot collate an empty record list")
    if len(records) != len(content_pairs):
        raise ContractViolation("records and content_pairs must pair up")

    scaled = [r.style_crop.shape[1] * (STYLE_H / r.style_crop.shape[0]) for r in records]
    w = batch_width(scaled, target_w)

    scenes, masks, styles, t1s, t2s, bboxes = [], [], [], [], [], []
    bgs, gts = [], []
    for r, (t1, t2) in zip(records, content_pairs):
        h, w2 = r.scene.shape[:2]
        scenes.append(_resize(to_unit_tensor(r.scene), (SCENE_H, 2 * w)))
        m = torch.from_numpy(r.mask).float().unsqueeze(0)
        masks.append(_resize(m, (SCENE_H, 2 * w), mode="nearest"))
        styles.append(_resize(to_unit_tensor(r.style_crop), (STYLE_H, w)))
        t1s.append(_resize(to_unit_tensor(t1.pixels), (STYLE_H, w)))
        t2s.append(_resize(to_unit_tensor(t2.pixels), (STYLE_H, w)))
        sx, sy = 2 * w / w2, SCENE_H / h
        x1, y1, x2, y2 = r.bbox
        bboxes.append([x1 * sx, y1 * sy, x2 * sx, y2 * sy])
        if r.is_synthetic and r.background_gt is None:
            raise ContractViolation(f"synthetic record {r.id} is missing ground truths")
        if r.background_gt is not None:
            bgs.append(_resize(to_unit_tensor(r.background_gt), (STYLE_H, w)))
            gts.append(_resize(to_unit_tensor(r.target_style_gt), (STYLE_H, w)))
        else:
            bgs.append(None)
            gts.append(None)

    synthetic = torch.tensor([r.is_synthetic for r in records], dtype=torch.bool)
    zero = torch.zeros(3, STYLE_H, w)
    return Batch(
        scene=torch.stack(scenes),
        mask=torch.stack(masks),
        style=torch.stack(styles),
        t_c1=torch.stack(t1s),
        t_c2=torch.stack(t2s),
        bboxes=torch.tensor(bboxes, dtype=torch.float32),
        texts=[r.text for r in records],
        target_texts=[r.target_text for r in records],
        is_synthetic=synthetic,
        background_gt=torch.stack([b if b is not None else zero for b in bgs]),
        target_style_gt=torch.stack([g if g is not None else zero for g in gts]),
    )
