"""PatchGAN discriminator with spectral normalization on every weight."""

from __future__ import annotations

import torch
import torch.nn as nn
from torch.nn.utils.parametrizations import spectral_norm


class PatchDiscriminator(nn.Module):
    """70x70-receptive-field style patch critic over 64xw crops.

    Every conv weight is spectrally normalized (one power iteration per
    forward). Output is a logits map, one score per patch.
    """

    def __init__(self, widths: tuple[int, ...] = (64, 128, 256), in_channels: int = 3):
        super().__init__()
        layers, cin = [], in_channels
        for i, cout in enumerate(widths):
            layers += [spectral_norm(nn.Conv2d(cin, cout, 4, stride=2, padding=1)),
                       nn.LeakyReLU(0.2, inplace=True)]
            cin = cout
        layers += [spectral_norm(nn.Conv2d(cin, cin, 4, stride=1, padding=1)),
                   nn.LeakyReLU(0.2, inplace=True),
                   spectral_norm(nn.Conv2d(cin, 1, 4, stride=1, padding=1))]
        self.net = nn.Sequential(*layers)

    def forward(self, x: torch.Tensor) -> torch.Tensor:
        return self.net(x)
