"""Configuration documents (YAML key/value files) for synthesis, model and training."""

from __future__ import annotations

import os
from dataclasses import dataclass, field, asdict
from typing import Optional

import yaml

from .errors import ConfigurationError


@dataclass
class SynthConfig:
    fonts_dir: str
    backgrounds_dir: str
    lexicon: str                     # path to a newline-separated word list
    colors: dict[str, tuple[int, int, int]] = field(default_factory=dict)
    rotation_range_deg: tuple[float, float] = (-15.0, 15.0)
    rotation_angles: Optional[list[float]] = None  # discrete label set; None = uniform in range
    count: int = 100
    content_font: Optional[str] = None  # font id; default: first font in fonts_dir
    style_height: int = 64
    glyph_height: int = 40           # nominal glyph block height before rotation fitting
    dilate_radius: int = 2
    pad: int = 6                     # margin between glyphs and bbox edge, > dilate_radius
    max_text_width: int = 448        # reject words whose scaled glyph layer is wider
    max_style_width: int = 512
    max_attempts: int = 20
    seed: int = 0

    def validate(self) -> None:
        for name, p in [("fonts_dir", self.fonts_dir), ("backgrounds_dir", self.backgrounds_dir)]:
            if not os.path.isdir(p):
                raise ConfigurationError(f"{name} does not exist: {p}")
        if not os.path.isfile(self.lexicon):
            raise ConfigurationError(f"lexicon file does not exist: {self.lexicon}")
        if not self.colors:
            raise ConfigurationError("colors palette is empty")
        if self.pad <= self.dilate_radius:
            raise ConfigurationError("pad must exceed dilate_radius to keep masks inside bbox")


@dataclass
class ModelConfig:
    """Width/depth knobs. Contractual shapes (512-d style vector, five 2x512
    layer codes, stride-32 encoders) do not change with these."""

    encoder_blocks: tuple[int, ...] = (3, 4, 6, 3)
    encoder_widths: tuple[int, ...] = (64, 128, 256, 512)
    generator_channels: tuple[int, ...] = (256, 128, 64, 32)  # block outputs before the RGB head
    background_channels: int = 32
    stylemap_hidden: int = 512
    inpaint_widths: tuple[int, ...] = (24, 32, 48, 64)
    disc_widths: tuple[int, ...] = (64, 128, 256)
    feature_dim: int = 512

    @classmethod
    def tiny(cls) -> "ModelConfig":
        """Single-core friendly instantiation used by tests and desk-scale runs."""
        return cls(encoder_blocks=(1, 1, 1, 1), encoder_widths=(16, 32, 48, 64),
                   generator_channels=(128, 64, 48, 32), background_channels=16,
                   stylemap_hidden=256, inpaint_widths=(16, 24, 32, 48),
                   disc_widths=(32, 64, 96))


@dataclass
class LossWeights:
    l1: float = 10.0
    perceptual: float = 1.0
    recognition: float = 0.1
    adversarial: float = 1.0

    def validate(self) -> None:
        if min(self.l1, self.perceptual, self.recognition, self.adversarial) < 0:
            raise ConfigurationError("loss weights must be nonnegative")


@dataclass
class AblationFlags:
    no_background_inpainting: bool = False
    no_style_encoder: bool = False
    no_content_encoder: bool = False
    no_style_map_net: bool = False
    no_recognizer: bool = False
    no_shared_weight: bool = False
    dcota: bool = False   # keep text areas: skip the cut-out step
    csac: bool = False    # concatenate an encoded style map instead of AdaIN injection

    def validate(self) -> None:
        if self.no_style_encoder and self.no_content_encoder:
            raise ConfigurationError("at most one of no_style_encoder/no_content_encoder")

    def any_active(self) -> bool:
        return any(asdict(self).values())


@dataclass
class TrainConfig:
    learning_rate: float = 1e-4
    rmsprop_alpha: float = 0.99
    rmsprop_eps: float = 1e-8
    batch_size: int = 24
    steps: int = 1000
    mix_ratio: tuple[int, int] = (3, 1)   # synthetic : real per batch
    weights: LossWeights = field(default_factory=LossWeights)
    ablation: AblationFlags = field(default_factory=AblationFlags)
    seed: int = 0
    model: ModelConfig = field(default_factory=ModelConfig)
    inpaint_aux_weight: float = 1.0       # 0 disables the masked-region background term
    grad_clip_norm: float = 10.0          # 0 disables clipping
    val_every: int = 200
    checkpoint_every: int = 500
    recognizer_checkpoint: Optional[str] = None
    charset: Optional[str] = None
    perceptual_backend: str = "auto"      # auto | vgg19 | random

    def validate(self) -> None:
        if self.learning_rate <= 0:
            raise ConfigurationError("learning rate must be positive")
        if self.batch_size < 1:
            raise ConfigurationError("batch size must be at least 1")
        self.weights.validate()
        self.ablation.validate()


def _tupled(d: dict, keys: tuple[str, ...]) -> dict:
    return {k: (tuple(v) if k in keys and isinstance(v, list) else v) for k, v in d.items()}


def load_synth_config(path: str) -> SynthConfig:
    if not os.path.isfile(path):
        raise ConfigurationError(f"config file does not exist: {path}")
    with open(path) as f:
        raw = yaml.safe_load(f) or {}
    base = os.path.dirname(os.path.abspath(path))
    for key in ("fonts_dir", "backgrounds_dir", "lexicon"):
        if key in raw and not os.path.isabs(raw[key]):
            raw[key] = os.path.join(base, raw[key])
    if "colors" in raw:
        raw["colors"] = {k: tuple(v) for k, v in raw["colors"].items()}
    try:
        cfg = SynthConfig(**_tupled(raw, ("rotation_range_deg",)))
    except TypeError as e:
        raise ConfigurationError(f"bad synthesis config: {e}") from None
    cfg.validate()
    return cfg


def load_train_config(path: str) -> TrainConfig:
    if not os.path.isfile(path):
        raise ConfigurationError(f"config file does not exist: {path}")
    with open(path) as f:
        raw = yaml.safe_load(f) or {}
    if "weights" in raw:
        raw["weights"] = LossWeights(**raw["weights"])
    if "ablation" in raw:
        raw["ablation"] = AblationFlags(**raw["ablation"])
    if "model" in raw:
        if raw["model"] == "tiny":
            raw["model"] = ModelConfig.tiny()
        else:
            raw["model"] = ModelConfig(**_tupled(raw["model"], (
                "encoder_blocks", "encoder_widths", "generator_channels",
                "inpaint_widths", "disc_widths")))
    try:
        cfg = TrainConfig(**_tupled(raw, ("mix_ratio",)))
    except TypeError as e:
        raise ConfigurationError(f"bad training config: {e}") from None
    cfg.validate()
    return cfg
