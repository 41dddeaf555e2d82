"""Synthetic paired-sample generation.

Every sample is a large scene crop with one styled word composited onto a
clean background, plus the ground truths that only synthesis can provide:
the background under the text and the same style applied to the target word.
All randomness flows from a single integer seed, so a (config, seed) pair
is reproducible byte for byte.
"""

from __future__ import annotations

import os

import numpy as np
from PIL import Image

from ..config import SynthConfig
from ..errors import ResourceError
from ..records import ContentRender, SceneRecord, StyleAttributeLabel, save_record
from .render import composite_glyphs, list_fonts, render_content, render_glyph_rgba, rotate_and_fit

_lexicon_cache: dict[str, tuple[float, list[str]]] = {}


def load_lexicon(path: str) -> list[str]:
    try:
        mtime = os.path.getmtime(path)
    except OSError:
        raise ResourceError(f"lexicon not found: {path}") from None
    cached = _lexicon_cache.get(path)
    if cached is not None and cached[0] == mtime:
        return cached[1]
    with open(path) as f:
        words = [w.strip() for w in f if w.strip()]
    if not words:
        raise ResourceError(f"lexicon is empty: {path}")
    _lexicon_cache[path] = (mtime, words)
    return words


def list_backgrounds(backgrounds_dir: str) -> list[str]:
    if not os.path.isdir(backgrounds_dir):
        raise ResourceError(f"backgrounds_dir not found: {backgrounds_dir}")
    names = [n for n in sorted(os.listdir(backgrounds_dir))
             if n.lower().endswith((".png", ".jpg", ".jpeg", ".bmp"))]
    if not names:
        raise ResourceError(f"no background images in {backgrounds_dir}")
    return [os.path.join(backgrounds_dir, n) for n in names]


def _pad_rgba(layer: np.ndarray, r: int) -> np.ndarray:
    return np.pad(layer, ((r, r), (r, r), (0, 0)))


def _background_crop(path: str, height: int, width: int, rng: np.random.Generator) -> np.ndarray:
    img = np.asarray(Image.open(path).convert("RGB"))
    h, w = img.shape[:2]
    if h < height or w < width:
        img = np.asarray(Image.fromarray(img).resize((max(width, w), max(height, h)),
                                                     resample=Image.BILINEAR))
        h, w = img.shape[:2]
    y0 = int(rng.integers(0, h - height + 1))
    x0 = int(rng.integers(0, w - width + 1))
    return img[y0:y0 + height, x0:x0 + width].copy()


def synth_sample(config: SynthConfig, seed: int) -> SceneRecord:
    """Generate one fully labeled SceneRecord from (config, seed)."""
    fonts = list_fonts(config.fonts_dir)
    words = load_lexicon(config.lexicon)
    backgrounds = list_backgrounds(config.backgrounds_dir)
    colors = list(config.colors.items())
    rng = np.random.default_rng(seed)

    sh = config.style_height
    pad = config.pad + config.dilate_radius + 1
    fit_h = sh - 2 * pad

    for attempt in range(config.max_attempts):
        s1 = words[int(rng.integers(0, len(words)))]
        s2 = words[int(rng.integers(0, len(words)))]
        if len(words) > 1:
            while s2 == s1:
                s2 = words[int(rng.integers(0, len(words)))]
        font_id = sorted(fonts)[int(rng.integers(0, len(fonts)))]
        color_id, color = colors[int(rng.integers(0, len(colors)))]
        if config.rotation_angles:
            rotation = float(config.rotation_angles[int(rng.integers(0, len(config.rotation_angles)))])
        else:
            lo, hi = config.rotation_range_deg
            rotation = float(rng.uniform(lo, hi))
        font_size = int(rng.integers(max(12, config.glyph_height - 8), config.glyph_height + 5))

        raw1 = render_glyph_rgba(s1, fonts[font_id], font_size, color)
        raw2 = render_glyph_rgba(s2, fonts[font_id], font_size, color)
        if raw1.shape[1] > config.max_text_width or raw2.shape[1] > config.max_text_width:
            continue  # word too wide for the canvas: resample
        rot1 = _pad_rgba(rotate_and_fit(raw1, rotation, fit_h, config.max_text_width),
                         config.dilate_radius + 1)
        rot2 = _pad_rgba(rotate_and_fit(raw2, rotation, fit_h, config.max_text_width),
                         config.dilate_radius + 1)
        crop_w = max(rot1.shape[1], rot2.shape[1]) + 2 * config.pad
        if crop_w > config.max_style_width:
            continue

        margin_l = int(rng.integers(16, 49))
        margin_r = int(rng.integers(16, 49))
        scene_h, scene_w = 2 * sh, crop_w + margin_l + margin_r
        bbox_y = int(rng.integers(8, scene_h - sh - 7))
        bbox = (margin_l, bbox_y, margin_l + crop_w, bbox_y + sh)

        bg_path = backgrounds[int(rng.integers(0, len(backgrounds)))]
        scene_bg = _background_crop(bg_path, scene_h, scene_w, rng)
        background_gt = scene_bg[bbox_y:bbox_y + sh, margin_l:margin_l + crop_w].copy()

        off1 = (margin_l + (crop_w - rot1.shape[1]) // 2, bbox_y + (sh - rot1.shape[0]) // 2)
        scene, mask = composite_glyphs(scene_bg, rot1, off1, config.dilate_radius)
        off2 = ((crop_w - rot2.shape[1]) // 2, (sh - rot2.shape[0]) // 2)
        gt_c2, _ = composite_glyphs(background_gt, rot2, off2, config.dilate_radius)

        record = SceneRecord(
            id=f"synth-{seed:010d}",
            scene=scene,
            mask=mask,
            style_crop=scene[bbox_y:bbox_y + sh, margin_l:margin_l + crop_w].copy(),
            bbox=bbox,
            text=s1,
            target_text=s2,
            background_gt=background_gt,
            target_style_gt=gt_c2,
            source_tag="synthetic",
            label=StyleAttributeLabel(rotation_deg=rotation, font_id=font_id, color_id=color_id),
        )
        record.validate()
        return record

    raise ResourceError(
        f"could not fit any lexicon word within max_text_width={config.max_text_width} "
        f"after {config.max_attempts} attempts")


def content_pair(config: SynthConfig, record: SceneRecord) -> tuple[ContentRender, ContentRender]:
    """Render the canonical-font content images for a record's two strings."""
    fonts = list_fonts(config.fonts_dir)
    font_id = config.content_font or sorted(fonts)[0]
    if font_id not in fonts:
        raise ResourceError(f"content_font {font_id!r} not in {config.fonts_dir}")
    t1 = render_content(record.text, fonts[font_id], font_id, height=config.style_height)
    t2 = render_content(record.target_text, fonts[font_id], font_id, height=config.style_height)
    return t1, t2


def synthesize_dataset(config: SynthConfig, out_dir: str, count: int, seed: int) -> list[str]:
    """Write `count` records under out_dir, one directory per record."""
    dirs = []
    for i in range(count):
        record = synth_sample(config, seed=seed + i)
        t1, t2 = content_pair(config, record)
        rec_dir = os.path.join(out_dir, f"{i:06d}")
        save_record(record, t1, t2, rec_dir)
        dirs.append(rec_dir)
    return dirs
