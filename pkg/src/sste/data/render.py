"""Glyph rasterization primitives for the synthetic data pipeline.

Rotation is applied to the glyph layer about its center before compositing;
the background never rotates. Composited alpha is zeroed outside the dilated
text mask so every pixel the glyphs touch is covered by the mask.
"""

from __future__ import annotations

import os
from functools import lru_cache

import numpy as np
from PIL import Image, ImageDraw, ImageFont
from scipy import ndimage

from ..errors import ResourceError
from ..records import ContentRender

CONTENT_GRAY = 127


def list_fonts(fonts_dir: str) -> dict[str, str]:
    """Map font id (file stem) -> path for every TTF/OTF in the directory."""
    if not os.path.isdir(fonts_dir):
        raise ResourceError(f"fonts_dir not found: {fonts_dir}")
    fonts = {}
    for name in sorted(os.listdir(fonts_dir)):
        if name.lower().endswith((".ttf", ".otf")):
            fonts[os.path.splitext(name)[0]] = os.path.join(fonts_dir, name)
    if not fonts:
        raise ResourceError(f"no font files in {fonts_dir}")
    return fonts


@lru_cache(maxsize=64)
def _font(path: str, size: int) -> ImageFont.FreeTypeFont:
    return ImageFont.truetype(path, size)


def render_glyph_rgba(text: str, font_path: str, font_size: int,
                      color: tuple[int, int, int]) -> np.ndarray:
    """Tightly cropped RGBA array of the text in the given face and fill."""
    font = _font(font_path, font_size)
    probe = Image.new("L", (1, 1))
    left, top, right, bottom = ImageDraw.Draw(probe).textbbox((0, 0), text, font=font)
    w, h = max(1, right - left), max(1, bottom - top)
    layer = Image.new("RGBA", (w + 4, h + 4), (0, 0, 0, 0))
    ImageDraw.Draw(layer).text((2 - left, 2 - top), text, font=font, fill=(*color, 255))
    arr = np.asarray(layer)
    ys, xs = np.nonzero(arr[:, :, 3])
    if len(ys) == 0:
        return arr
    return arr[ys.min():ys.max() + 1, xs.min():xs.max() + 1]


def rotate_and_fit(layer: np.ndarray, angle_deg: float, max_h: int,
                   max_w: int) -> np.ndarray:
    """Rotate an RGBA layer about its center, then downscale so it fits
    max_h x max_w. Never upscales."""
    img = Image.fromarray(layer)
    if angle_deg != 0.0:
        img = img.rotate(angle_deg, resample=Image.BILINEAR, expand=True)
    w, h = img.size
    scale = min(1.0, max_h / h, max_w / w)
    if scale < 1.0:
        img = img.resize((max(1, round(w * scale)), max(1, round(h * scale))),
                         resample=Image.BILINEAR)
    return np.asarray(img)


def glyph_mask(alpha: np.ndarray, dilate_radius: int) -> np.ndarray:
    """Binary coverage mask: alpha thresholded at 0.5 then dilated."""
    core = alpha >= 128
    if dilate_radius > 0:
        core = ndimage.binary_dilation(core, iterations=dilate_radius)
    return core.astype(np.uint8)


def composite_glyphs(background: np.ndarray, layer: np.ndarray,
                     offset_xy: tuple[int, int], dilate_radius: int
                     ) -> tuple[np.ndarray, np.ndarray]:
    """Alpha-composite an RGBA glyph layer onto an RGB background.

    Returns (composited image, full-size binary mask). Alpha is clipped to
    the dilated mask, so pixels outside the mask keep their exact background
    bytes.
    """
    out = background.copy()
    h, w = layer.shape[:2]
    x0, y0 = offset_xy
    mask_full = np.zeros(background.shape[:2], dtype=np.uint8)
    region_mask = glyph_mask(layer[:, :, 3], dilate_radius)
    mask_full[y0:y0 + h, x0:x0 + w] = region_mask

    alpha = (layer[:, :, 3].astype(np.float64) / 255.0) * region_mask
    rgb = layer[:, :, :3].astype(np.float64)
    bg = out[y0:y0 + h, x0:x0 + w].astype(np.float64)
    blended = rgb * alpha[..., None] + bg * (1.0 - alpha[..., None])
    out[y0:y0 + h, x0:x0 + w] = np.clip(np.rint(blended), 0, 255).astype(np.uint8)
    return out, mask_full


def render_content(text: str, font_path: str, font_id: str, height: int = 64,
                   glyph_height: int = 40, pad: int = 8) -> ContentRender:
    """Canonical content image: black glyphs in one fixed face on flat gray."""
    layer = render_glyph_rgba(text, font_path, glyph_height, (0, 0, 0))
    layer = rotate_and_fit(layer, 0.0, max_h=height - 2 * pad, max_w=4096)
    h, w = layer.shape[:2]
    canvas = np.full((height, w + 2 * pad, 3), CONTENT_GRAY, dtype=np.uint8)
    y0 = (height - h) // 2
    out, _ = composite_glyphs(canvas, layer, (pad, y0), dilate_radius=0)
    return ContentRender(pixels=out, text=text, font_id=font_id)
