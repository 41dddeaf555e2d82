"""Background recovery: text cut-out, lightweight gated-conv inpainter, RoI crop.

The text area is erased (scene times mask complement) and the mask appended
as a fourth channel. The inpainter predicts the full image; unmasked pixels
are copied back from the input, so everything outside the mask is exact.
"""

from __future__ import annotations

from dataclasses import dataclass

import torch
import torch.nn as nn
import torch.nn.functional as F
from torchvision.ops import roi_align

from .checkpoint import load_checkpoint, save_checkpoint
from .errors import ConfigurationError, ContractViolation

INPAINTER_ARCH = "gated-conv-inpainter"


@dataclass
class MaskedStack:
    """Four-channel tensor: 3 channels text-erased scene + 1 channel mask."""

    channels: torch.Tensor  # [B, 4, H, W]

    @property
    def scene(self) -> torch.Tensor:
        return self.channels[:, :3]

    @property
    def mask(self) -> torch.Tensor:
        return self.channels[:, 3:4]


def cut_out(scene: torch.Tensor, mask: torch.Tensor) -> MaskedStack:
    """Zero the scene wherever mask=1 and stack the mask as channel four."""
    if scene.shape[-2:] != mask.shape[-2:]:
        raise ContractViolation(
            f"scene {tuple(scene.shape[-2:])} and mask {tuple(mask.shape[-2:])} sizes differ")
    erased = scene * (1.0 - mask)
    return MaskedStack(channels=torch.cat([erased, mask], dim=1))


class GatedConv(nn.Module):
    """Convolution with a learned sigmoid gate on every output channel."""

    def __init__(self, cin: int, cout: int, stride: int = 1, dilation: int = 1):
        super().__init__()
        pad = dilation
        self.conv = nn.Conv2d(cin, 2 * cout, 3, stride=stride, padding=pad, dilation=dilation)

    def forward(self, x):
        feat, gate = self.conv(x).chunk(2, dim=1)
        return F.leaky_relu(feat, 0.2) * torch.sigmoid(gate)


class GatedInpainter(nn.Module):
    """Small encoder-decoder with a dilated bottleneck: 4 downs, 4 ups."""

    def __init__(self, widths: tuple[int, ...] = (24, 32, 48, 64)):
        super().__init__()
        self.widths = tuple(widths)
        downs, cin = [], 4
        for cout in widths:
            downs.append(GatedConv(cin, cout, stride=2))
            cin = cout
        self.downs = nn.ModuleList(downs)
        self.bottleneck = nn.Sequential(
            GatedConv(cin, cin, dilation=2),
            GatedConv(cin, cin, dilation=4),
        )
        ups = []
        skips = list(widths[:-1])[::-1] + [0]
        for cout, skip in zip(list(widths[:-1])[::-1] + [widths[0]], skips):
            ups.append(GatedConv(cin + skip, cout))
            cin = cout
        self.ups = nn.ModuleList(ups)
        self.head = nn.Conv2d(cin, 3, 3, padding=1)

    def forward(self, stack: torch.Tensor) -> torch.Tensor:
        feats = []
        x = stack
        for down in self.downs:
            x = down(x)
            feats.append(x)
        x = self.bottleneck(x)
        for i, up in enumerate(self.ups):
            x = F.interpolate(x, scale_factor=2, mode="nearest")
            skip = feats[-(i + 2)] if i + 2 <= len(feats) else None
            if skip is not None:
                x = torch.cat([x, skip], dim=1)
            x = up(x)
        return torch.tanh(self.head(x))


def inpaint(stack: MaskedStack, model: nn.Module) -> torch.Tensor:
    """Predict the erased region and composite the untouched scene back in."""
    if stack.channels.shape[1] != 4:
        raise ConfigurationError(
            f"inpainter expects a 4-channel stack, got {stack.channels.shape[1]}")
    pred = model(stack.channels)
    if pred.shape[-2:] != stack.channels.shape[-2:]:
        raise ConfigurationError("inpainter output size differs from its input")
    mask = stack.mask
    return mask * pred + (1.0 - mask) * stack.scene


def roi_crop(inpainted: torch.Tensor, bbox_in_scaled_coords: torch.Tensor,
             out_size: tuple[int, int] = (64, 64)) -> torch.Tensor:
    """Bilinear RoI-align crop of each image's box, resized to out_size.

    bbox rows are (x1, y1, x2, y2) in the coordinates of `inpainted`.
    """
    boxes = torch.as_tensor(bbox_in_scaled_coords, dtype=inpainted.dtype,
                            device=inpainted.device)
    if boxes.ndim == 1:
        boxes = boxes.unsqueeze(0)
    if ((boxes[:, 2] - boxes[:, 0]) <= 0).any() or ((boxes[:, 3] - boxes[:, 1]) <= 0).any():
        raise ContractViolation("degenerate bbox in roi_crop")
    idx = torch.arange(inpainted.shape[0], dtype=inpainted.dtype,
                       device=inpainted.device).unsqueeze(1)
    rois = torch.cat([idx, boxes], dim=1)
    return roi_align(inpainted, rois, output_size=out_size, spatial_scale=1.0,
                     sampling_ratio=1, aligned=True)


def save_inpainter(model: GatedInpainter, path: str) -> None:
    save_checkpoint(path, INPAINTER_ARCH, dict(model.state_dict()),
                    extra={"widths": list(model.widths)})


def load_inpainter(path: str) -> GatedInpainter:
    meta, tensors = load_checkpoint(path)
    if meta.get("arch") != INPAINTER_ARCH:
        raise ConfigurationError(f"unexpected inpainter arch {meta.get('arch')!r}")
    model = GatedInpainter(widths=tuple(meta["widths"]))
    model.load_state_dict(tensors)
    return model
