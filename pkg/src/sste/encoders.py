"""Style and content encoders: stride-32 residual backbones.

Both encoders map a 64xw crop to a [B, 512, 2, w/32] feature map. The style
vector z is the spatial mean of the style feature map.
"""

from __future__ import annotations

import torch
import torch.nn as nn
import torch.nn.functional as F

from .errors import ContractViolation

STRIDE = 32


class BasicBlock(nn.Module):
    def __init__(self, cin: int, cout: int, stride: int = 1):
        super().__init__()
        self.conv1 = nn.Conv2d(cin, cout, 3, stride=stride, padding=1, bias=False)
        self.bn1 = nn.BatchNorm2d(cout)
        self.conv2 = nn.Conv2d(cout, cout, 3, padding=1, bias=False)
        self.bn2 = nn.BatchNorm2d(cout)
        self.down = None
        if stride != 1 or cin != cout:
            self.down = nn.Sequential(nn.Conv2d(cin, cout, 1, stride=stride, bias=False),
                                      nn.BatchNorm2d(cout))

    def forward(self, x):
        identity = x if self.down is None else self.down(x)
        out = F.relu(self.bn1(self.conv1(x)))
        out = self.bn2(self.conv2(out))
        return F.relu(out + identity)


class ResidualBackbone(nn.Module):
    """ResNet-34-shaped trunk: stem /4, four stages with strides (1, 2, 2, 2)."""

    def __init__(self, blocks: tuple[int, ...] = (3, 4, 6, 3),
                 widths: tuple[int, ...] = (64, 128, 256, 512),
                 feature_dim: int = 512, in_channels: int = 3):
        super().__init__()
        if len(blocks) != 4 or len(widths) != 4:
            raise ContractViolation("backbone needs exactly four stages")
        self.stem = nn.Sequential(
            nn.Conv2d(in_channels, widths[0], 7, stride=2, padding=3, bias=False),
            nn.BatchNorm2d(widths[0]), nn.ReLU(inplace=True),
            nn.MaxPool2d(3, stride=2, padding=1))
        stages, cin = [], widths[0]
        for i, (n, cout) in enumerate(zip(blocks, widths)):
            stride = 1 if i == 0 else 2
            layers = [BasicBlock(cin, cout, stride=stride)]
            layers += [BasicBlock(cout, cout) for _ in range(n - 1)]
            stages.append(nn.Sequential(*layers))
            cin = cout
        self.stages = nn.ModuleList(stages)
        self.project = (nn.Identity() if cin == feature_dim
                        else nn.Conv2d(cin, feature_dim, 1))
        self.feature_dim = feature_dim
        self.in_channels = in_channels

    def forward(self, x: torch.Tensor) -> torch.Tensor:
        if x.shape[-2] % STRIDE or x.shape[-1] % STRIDE:
            raise ContractViolation(
                f"encoder input size {tuple(x.shape[-2:])} must be divisible by {STRIDE}")
        x = self.stem(x)
        for stage in self.stages:
            x = stage(x)
        return self.project(x)


class StyleEncoder(ResidualBackbone):
    """Encodes the style crop I_s; z = spatial mean of the output map."""


class ContentEncoder(ResidualBackbone):
    """Encodes the rendered content image I_t into the pyramid base map."""


def style_vector(feature_map: torch.Tensor) -> torch.Tensor:
    """Collapse a [B, C, H, W] style map into the [B, C] style code z."""
    if feature_map.ndim != 4:
        raise ContractViolation("style_vector expects a 4-d feature map")
    return feature_map.mean(dim=(2, 3))
