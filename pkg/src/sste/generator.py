"""Style mapping network and the fused feature-pyramid generator.

The 512-d style code z is expanded into five per-level layer codes w0..w4,
each a [2, 512] block. The generator upsamples the content feature map
through five residual blocks; each level modulates its activations with
AdaIN parameters computed from that level's code by a per-level affine.
Recovered background features are concatenated at the input of block 5.
"""

from __future__ import annotations

from dataclasses import dataclass

import torch
import torch.nn as nn
import torch.nn.functional as F

from .errors import ContractViolation

N_LEVELS = 5
CODE_ROWS = 2
CODE_DIM = 512
ADAIN_EPS = 1e-5

# facet -> generator levels; font spans three codes (a 3072-d slice)
FACET_LEVELS = {"rotation": (0,), "font": (1, 2, 3), "color": (4,)}


@dataclass
class LayerCodes:
    """Per-level style codes, stacked as [B, 5, 2, 512]."""

    stack: torch.Tensor

    def __post_init__(self):
        if self.stack.ndim != 4 or self.stack.shape[1:] != (N_LEVELS, CODE_ROWS, CODE_DIM):
            raise ContractViolation(
                f"layer codes must be [B, {N_LEVELS}, {CODE_ROWS}, {CODE_DIM}], "
                f"got {tuple(self.stack.shape)}")

    def level(self, i: int) -> torch.Tensor:
        if not 0 <= i < N_LEVELS:
            raise ContractViolation(f"layer code index {i} out of range")
        return self.stack[:, i]

    def flat(self, i: int) -> torch.Tensor:
        """Level code flattened to [B, 1024] for the affine projections."""
        return self.level(i).reshape(self.stack.shape[0], CODE_ROWS * CODE_DIM)

    def clone(self) -> "LayerCodes":
        return LayerCodes(self.stack.clone())


class StyleMapNet(nn.Module):
    """3-layer MLP: 512 -> hidden -> hidden -> 5*2*512, LeakyReLU between."""

    def __init__(self, hidden: int = 512, single_affine: bool = False):
        super().__init__()
        out = N_LEVELS * CODE_ROWS * CODE_DIM
        if single_affine:
            self.net = nn.Linear(CODE_DIM, out)
        else:
            self.net = nn.Sequential(
                nn.Linear(CODE_DIM, hidden), nn.LeakyReLU(0.2),
                nn.Linear(hidden, hidden), nn.LeakyReLU(0.2),
                nn.Linear(hidden, out))
        self.single_affine = single_affine

    def forward(self, z: torch.Tensor) -> LayerCodes:
        if z.ndim != 2 or z.shape[1] != CODE_DIM:
            raise ContractViolation(f"style code must be [B, {CODE_DIM}], got {tuple(z.shape)}")
        flat = self.net(z)
        return LayerCodes(flat.reshape(z.shape[0], N_LEVELS, CODE_ROWS, CODE_DIM))


def adain(feat: torch.Tensor, gamma: torch.Tensor, beta: torch.Tensor,
          eps: float = ADAIN_EPS) -> torch.Tensor:
    """Instance-normalize feat, then scale/shift per channel with (gamma, beta)."""
    mean = feat.mean(dim=(2, 3), keepdim=True)
    var = feat.var(dim=(2, 3), keepdim=True, unbiased=False)
    normalized = (feat - mean) / torch.sqrt(var + eps)
    return gamma.unsqueeze(-1).unsqueeze(-1) * normalized + beta.unsqueeze(-1).unsqueeze(-1)


def _instance_norm(feat: torch.Tensor, eps: float = ADAIN_EPS) -> torch.Tensor:
    mean = feat.mean(dim=(2, 3), keepdim=True)
    var = feat.var(dim=(2, 3), keepdim=True, unbiased=False)
    return (feat - mean) / torch.sqrt(var + eps)


class PyramidBlock(nn.Module):
    """Nearest-upsample x2, then a residual pair of 3x3 convs with AdaIN."""

    def __init__(self, cin: int, cout: int, style_modulated: bool = True):
        super().__init__()
        self.conv1 = nn.Conv2d(cin, cout, 3, padding=1)
        self.conv2 = nn.Conv2d(cout, cout, 3, padding=1)
        self.skip = nn.Conv2d(cin, cout, 1) if cin != cout else nn.Identity()
        self.affine = nn.Linear(CODE_ROWS * CODE_DIM, 2 * cout) if style_modulated else None
        self.cout = cout

    def _modulate(self, feat: torch.Tensor, code_flat) -> torch.Tensor:
        if self.affine is None or code_flat is None:
            return _instance_norm(feat)
        gamma, beta = self.affine(code_flat).chunk(2, dim=1)
        return adain(feat, 1.0 + gamma, beta)

    def forward(self, x: torch.Tensor, code_flat) -> torch.Tensor:
        x = F.interpolate(x, scale_factor=2, mode="nearest")
        h = F.leaky_relu(self._modulate(self.conv1(x), code_flat), 0.2)
        h = F.leaky_relu(self._modulate(self.conv2(h), code_flat), 0.2)
        return h + self.skip(x)


class FusedPyramidGenerator(nn.Module):
    """Five upsampling blocks from the [B, 512, 2, w/32] base to a 64xw RGB image.

    Background features (3x3 stride-2 conv of the recovered background crop)
    enter by channel concatenation at the input of block 5, where the working
    resolution is 32 x w/2.
    """

    def __init__(self, channels: tuple[int, ...] = (256, 128, 64, 32),
                 background_channels: int = 32, use_adain: bool = True):
        super().__init__()
        if len(channels) != 4:
            raise ContractViolation("generator needs four pre-fusion block widths")
        self.use_adain = use_adain
        # csac: the encoded style map is concatenated onto the pyramid base
        self.style_merge = None if use_adain else nn.Conv2d(2 * CODE_DIM, CODE_DIM, 1)
        blocks, cin = [], CODE_DIM
        for cout in channels:
            blocks.append(PyramidBlock(cin, cout, style_modulated=use_adain))
            cin = cout
        self.bg_conv = nn.Conv2d(3, background_channels, 3, stride=2, padding=1)
        blocks.append(PyramidBlock(cin + background_channels, channels[-1],
                                   style_modulated=use_adain))
        self.blocks = nn.ModuleList(blocks)
        self.head = nn.Conv2d(channels[-1], 3, 3, padding=1)

    def forward(self, content_map: torch.Tensor, codes, background: torch.Tensor,
                style_map=None) -> torch.Tensor:
        if content_map.ndim != 4 or content_map.shape[1] != CODE_DIM:
            raise ContractViolation("content feature map must be [B, 512, h, w]")
        if background.shape[-2] != 64 or background.shape[-1] != 32 * content_map.shape[-1]:
            raise ContractViolation(
                f"background {tuple(background.shape[-2:])} does not match content map "
                f"{tuple(content_map.shape[-2:])} at stride 32")
        x = content_map
        if not self.use_adain:
            if style_map is None:
                raise ContractViolation("csac generator requires the style feature map")
            if style_map.shape != content_map.shape:
                raise ContractViolation("style map must match the content map shape")
            x = self.style_merge(torch.cat([x, style_map], dim=1))
        for i, block in enumerate(self.blocks):
            if i == N_LEVELS - 1:
                x = torch.cat([x, self.bg_conv(background)], dim=1)
            code_flat = codes.flat(i) if self.use_adain else None
            x = block(x, code_flat)
        return torch.tanh(self.head(x))
