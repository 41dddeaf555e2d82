"""Versioned named-tensor checkpoint container used repo-wide.

A checkpoint is a single file holding a metadata header ({"arch": str,
"version": int, ...}) plus a flat name->tensor mapping. Every trainable
component (inpainter, encoders, generator, discriminator, recognizer)
round-trips through this format.
"""

from __future__ import annotations

import os
from typing import Any

import torch

from .errors import ConfigurationError

FORMAT_VERSION = 1


def save_checkpoint(path: str, arch: str, tensors: dict[str, torch.Tensor],
                    version: int = 1, extra: dict[str, Any] | None = None) -> None:
    payload = {
        "format": FORMAT_VERSION,
        "meta": {"arch": arch, "version": int(version), **(extra or {})},
        "tensors": {k: v.detach().cpu() for k, v in tensors.items()},
    }
    os.makedirs(os.path.dirname(os.path.abspath(path)), exist_ok=True)
    torch.save(payload, path)


def load_checkpoint(path: str) -> tuple[dict[str, Any], dict[str, torch.Tensor]]:
    if not os.path.exists(path):
        raise ConfigurationError(f"checkpoint not found: {path}")
    payload = torch.load(path, map_location="cpu", weights_only=True)
    if not isinstance(payload, dict) or "meta" not in payload or "tensors" not in payload:
        raise ConfigurationError(f"not a checkpoint container: {path}")
    return payload["meta"], payload["tensors"]
