"""Full editing model: background recovery, two encoders, mapper, generator.

Ablation flags rewire the graph at construction time. Every forward records
stage tags when tracing is enabled, and `graph_signature` hashes the traced
call sequence together with parameter names/shapes, so structurally distinct
configurations are distinguishable by hash.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass
from typing import Optional

import torch
import torch.nn as nn

from .checkpoint import load_checkpoint, save_checkpoint
from .config import AblationFlags, ModelConfig
from .encoders import ContentEncoder, StyleEncoder, style_vector
from .errors import ConfigurationError, ContractViolation
from .generator import CODE_DIM, FusedPyramidGenerator, LayerCodes, StyleMapNet
from .inpaint import GatedInpainter, MaskedStack, cut_out, inpaint, roi_crop

MODEL_ARCH = "scene-text-editor"


@dataclass
class PairOutput:
    g_c1: torch.Tensor            # edited crop carrying the original text
    g_c2: torch.Tensor            # edited crop carrying the target text
    background: torch.Tensor      # recovered background crop fed to fusion
    z: torch.Tensor               # 512-d style code
    codes: LayerCodes
    inpainted: Optional[torch.Tensor]  # full-scene inpaint (None when ablated)


class _Branch(nn.Module):
    """One generator branch: encoders + mapper + pyramid generator."""

    def __init__(self, cfg: ModelConfig, flags: AblationFlags):
        super().__init__()
        style_in = 6 if flags.no_content_encoder else 3
        content_in = 6 if flags.no_style_encoder else 3
        self.style_encoder = None if flags.no_style_encoder else StyleEncoder(
            cfg.encoder_blocks, cfg.encoder_widths, cfg.feature_dim, in_channels=style_in)
        self.content_encoder = None if flags.no_content_encoder else ContentEncoder(
            cfg.encoder_blocks, cfg.encoder_widths, cfg.feature_dim, in_channels=content_in)
        if flags.no_style_encoder:
            self.const_style = nn.Parameter(torch.zeros(CODE_DIM, 2, 1))
        if flags.no_content_encoder:
            self.const_content = nn.Parameter(torch.zeros(CODE_DIM, 2, 1))
        self.mapper = StyleMapNet(cfg.stylemap_hidden, single_affine=flags.no_style_map_net)
        self.generator = FusedPyramidGenerator(cfg.generator_channels, cfg.background_channels,
                                               use_adain=not flags.csac)


class EditingModel(nn.Module):
    def __init__(self, cfg: Optional[ModelConfig] = None,
                 flags: Optional[AblationFlags] = None):
        super().__init__()
        self.cfg = cfg or ModelConfig()
        self.flags = flags or AblationFlags()
        self.flags.validate()
        self.inpainter = (None if self.flags.no_background_inpainting
                          else GatedInpainter(self.cfg.inpaint_widths))
        self.branch = _Branch(self.cfg, self.flags)
        self.branch_c2 = _Branch(self.cfg, self.flags) if self.flags.no_shared_weight else None
        self._trace: Optional[list[str]] = None

    def _tag(self, tag: str) -> None:
        if self._trace is not None:
            self._trace.append(tag)

    def _pick(self, c2: bool) -> _Branch:
        if c2 and self.branch_c2 is not None:
            self._tag("branch.c2.independent")
            return self.branch_c2
        return self.branch

    # --- stages ------------------------------------------------------------

    def recover_background(self, scene: torch.Tensor, mask: torch.Tensor,
                           bboxes: torch.Tensor,
                           out_w: int) -> tuple[torch.Tensor, Optional[torch.Tensor]]:
        """Background crop for fusion (and the full inpainted scene if any)."""
        if self.flags.no_background_inpainting:
            self._tag("bg.raw_roi")
            return roi_crop(scene, bboxes, out_size=(64, out_w)), None
        if self.flags.dcota:
            self._tag("bg.dcota_stack")
            stack = MaskedStack(torch.cat([scene, mask], dim=1))
        else:
            self._tag("bg.cutout")
            stack = cut_out(scene, mask)
        self._tag("bg.inpaint")
        full = inpaint(stack, self.inpainter)
        return roi_crop(full, bboxes, out_size=(64, out_w)), full

    def encode_style(self, style: torch.Tensor, content: Optional[torch.Tensor] = None,
                     c2: bool = False) -> tuple[torch.Tensor, torch.Tensor]:
        """Style feature map and pooled style code z."""
        branch = self._pick(c2)
        if branch.style_encoder is None:
            self._tag("enc.style.const")
            w32 = style.shape[-1] // 32
            f_s = branch.const_style.unsqueeze(0).expand(style.shape[0], -1, -1, w32)
        else:
            if branch.style_encoder.in_channels == 6:
                if content is None:
                    raise ContractViolation("6-channel style encoder needs the content render")
                self._tag("enc.style.6ch")
                style = torch.cat([style, content], dim=1)
            else:
                self._tag("enc.style")
            f_s = branch.style_encoder(style)
        return f_s, style_vector(f_s)

    def encode_content(self, content: torch.Tensor, style: Optional[torch.Tensor] = None,
                       c2: bool = False) -> torch.Tensor:
        branch = self._pick(c2)
        if branch.content_encoder is None:
            self._tag("enc.content.const")
            w32 = content.shape[-1] // 32
            return branch.const_content.unsqueeze(0).expand(content.shape[0], -1, -1, w32)
        if branch.content_encoder.in_channels == 6:
            if style is None:
                raise ContractViolation("6-channel content encoder needs the style crop")
            self._tag("enc.content.6ch")
            content = torch.cat([content, style], dim=1)
        else:
            self._tag("enc.content")
        return branch.content_encoder(content)

    def map_codes(self, z: torch.Tensor, c2: bool = False) -> LayerCodes:
        branch = self._pick(c2)
        self._tag("map.single" if branch.mapper.single_affine else "map.mlp")
        return branch.mapper(z)

    def render(self, content_map: torch.Tensor, codes: LayerCodes,
               background: torch.Tensor, style_map: Optional[torch.Tensor] = None,
               c2: bool = False) -> torch.Tensor:
        branch = self._pick(c2)
        self._tag("gen.csac" if not branch.generator.use_adain else "gen.adain")
        return branch.generator(content_map, codes, background, style_map=style_map)

    # --- orchestration -----------------------------------------------------

    def forward_pair(self, scene: torch.Tensor, mask: torch.Tensor, style: torch.Tensor,
                     content1: torch.Tensor, content2: torch.Tensor,
                     bboxes: torch.Tensor) -> PairOutput:
        out_w = style.shape[-1]
        background, full = self.recover_background(scene, mask, bboxes, out_w)
        f_s, z = self.encode_style(style, content=content1)
        codes = self.map_codes(z)
        f_c1 = self.encode_content(content1, style=style)
        g_c1 = self.render(f_c1, codes, background, style_map=f_s)
        c2 = self.branch_c2 is not None
        # with no_content_encoder the style encoder carries the content render,
        # so the c2 pass must re-encode with content2 even under shared weights
        if c2 or self.flags.no_content_encoder:
            f_s2, z2 = self.encode_style(style, content=content2, c2=c2)
            codes2 = self.map_codes(z2, c2=c2)
        else:
            f_s2, codes2 = f_s, codes
        f_c2 = self.encode_content(content2, style=style, c2=c2)
        g_c2 = self.render(f_c2, codes2, background, style_map=f_s2, c2=c2)
        return PairOutput(g_c1=g_c1, g_c2=g_c2, background=background, z=z,
                          codes=codes, inpainted=full)

    def forward(self, *args, **kwargs) -> PairOutput:
        return self.forward_pair(*args, **kwargs)


def apply_ablation(model: EditingModel, flags: AblationFlags) -> EditingModel:
    """Rewire a model under new flags, carrying over every weight whose name
    and shape survive the change."""
    flags.validate()
    rewired = EditingModel(model.cfg, flags)
    src = model.state_dict()
    dst = rewired.state_dict()
    carried = {k: v for k, v in src.items() if k in dst and dst[k].shape == v.shape}
    dst.update(carried)
    rewired.load_state_dict(dst)
    return rewired


def trace_stages(model: EditingModel, width: int = 64) -> list[str]:
    """Stage tags recorded during one dummy forward pass."""
    was_training = model.training
    model.eval()
    model._trace = []
    with torch.no_grad():
        scene = torch.zeros(1, 3, 128, 2 * width)
        mask = torch.zeros(1, 1, 128, 2 * width)
        mask[..., 32:96, 16:16 + width] = 1.0
        crop = torch.zeros(1, 3, 64, width)
        bboxes = torch.tensor([[16.0, 32.0, 16.0 + width, 96.0]])
        model.forward_pair(scene, mask, crop, crop, crop, bboxes)
    trace = model._trace
    model._trace = None
    if was_training:
        model.train()
    return trace


def graph_signature(model: EditingModel, width: int = 64) -> str:
    """Hash of the traced stage sequence, parameter names/shapes and flags."""
    from dataclasses import asdict

    trace = trace_stages(model, width=width)
    shapes = [[name, list(p.shape)] for name, p in sorted(model.named_parameters())]
    payload = json.dumps({"trace": trace, "params": shapes,
                          "flags": asdict(model.flags)}, sort_keys=True)
    return hashlib.sha256(payload.encode()).hexdigest()


def save_model(model: EditingModel, path: str, extra: Optional[dict] = None) -> None:
    from dataclasses import asdict

    meta = {"model_config": asdict(model.cfg), "ablation": asdict(model.flags)}
    meta.update(extra or {})
    save_checkpoint(path, MODEL_ARCH, dict(model.state_dict()), extra=meta)


def load_model(path: str) -> EditingModel:
    meta, tensors = load_checkpoint(path)
    if meta.get("arch") != MODEL_ARCH:
        raise ConfigurationError(f"unexpected model arch {meta.get('arch')!r}")
    mc = meta["model_config"]
    cfg = ModelConfig(**{k: tuple(v) if isinstance(v, list) else v for k, v in mc.items()})
    model = EditingModel(cfg, AblationFlags(**meta["ablation"]))
    model.load_state_dict(tensors)
    model.eval()
    return model
