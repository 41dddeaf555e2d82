"""Feature extractors for the perceptual loss.

Preferred backend: VGG19 activations relu1_1 .. relu5_1. Pretrained weights
are only usable when available locally (torchvision cache); in fully offline
environments the fallback is a frozen, seed-initialized 5-stage conv stack
with the same pyramid structure. The active backend is recorded by name so
runs are auditable.
"""

from __future__ import annotations

import torch
import torch.nn as nn

from .errors import ConfigurationError

# torchvision vgg19.features indices of relu1_1, relu2_1, relu3_1, relu4_1, relu5_1
_VGG_TAPS = (1, 6, 11, 20, 29)
_IMAGENET_MEAN = (0.485, 0.456, 0.406)
_IMAGENET_STD = (0.229, 0.224, 0.225)


class PerceptualBackend(nn.Module):
    """Frozen feature pyramid: features(x) returns one tensor per stage."""

    name = "base"

    def features(self, x: torch.Tensor) -> list[torch.Tensor]:
        raise NotImplementedError

    def freeze(self) -> "PerceptualBackend":
        for p in self.parameters():
            p.requires_grad_(False)
        self.eval()
        return self


class Vgg19Backend(PerceptualBackend):
    name = "vgg19"

    def __init__(self):
        super().__init__()
        from torchvision.models import VGG19_Weights, vgg19

        net = vgg19(weights=VGG19_Weights.IMAGENET1K_V1).features
        self.slices = nn.ModuleList()
        prev = 0
        for tap in _VGG_TAPS:
            self.slices.append(nn.Sequential(*[net[i] for i in range(prev, tap + 1)]))
            prev = tap + 1
        self.register_buffer("mean", torch.tensor(_IMAGENET_MEAN).view(1, 3, 1, 1))
        self.register_buffer("std", torch.tensor(_IMAGENET_STD).view(1, 3, 1, 1))

    def features(self, x: torch.Tensor) -> list[torch.Tensor]:
        # incoming images live in [-1, 1]
        h = ((x + 1.0) / 2.0 - self.mean) / self.std
        out = []
        for block in self.slices:
            h = block(h)
            out.append(h)
        return out


class RandomStackBackend(PerceptualBackend):
    """Seeded random conv pyramid standing in for VGG19 when offline."""

    name = "random"

    def __init__(self, seed: int = 0, widths: tuple[int, ...] = (32, 64, 96, 128, 128)):
        super().__init__()
        gen = torch.Generator().manual_seed(seed)
        stages, cin = [], 3
        for cout in widths:
            conv = nn.Conv2d(cin, cout, 3, padding=1)
            with torch.no_grad():
                conv.weight.copy_(torch.randn(conv.weight.shape, generator=gen)
                                  * (2.0 / (9 * cin)) ** 0.5)
                conv.bias.zero_()
            stages.append(nn.Sequential(conv, nn.ReLU(inplace=False)))
            cin = cout
        self.stages = nn.ModuleList(stages)
        self.pool = nn.AvgPool2d(2)

    def features(self, x: torch.Tensor) -> list[torch.Tensor]:
        out, h = [], x
        for i, stage in enumerate(self.stages):
            if i > 0:
                h = self.pool(h)
            h = stage(h)
            out.append(h)
        return out


def build_perceptual(backend: str = "auto", seed: int = 0) -> PerceptualBackend:
    if backend not in ("auto", "vgg19", "random"):
        raise ConfigurationError(f"unknown perceptual backend {backend!r}")
    if backend in ("auto", "vgg19"):
        try:
            return Vgg19Backend().freeze()
        except Exception as e:
            if backend == "vgg19":
                raise ConfigurationError(f"vgg19 weights unavailable: {e}") from None
    return RandomStackBackend(seed=seed).freeze()
