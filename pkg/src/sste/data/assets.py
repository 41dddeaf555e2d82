"""Self-contained demo assets: fonts, procedural backgrounds, a lexicon.

Used by tests and the demo scripts so the pipeline runs without any external
downloads. Fonts are copied from whatever TTF collections the host already
has (matplotlib's bundled faces, then system font dirs).
"""

from __future__ import annotations

import os
import shutil

import numpy as np
from PIL import Image

from ..config import SynthConfig
from ..errors import ResourceError

# Nine named fills, one per palette slot the editing demos use.
DEFAULT_PALETTE: dict[str, tuple[int, int, int]] = {
    "red": (220, 40, 40),
    "orange": (240, 140, 30),
    "yellow": (235, 220, 50),
    "green": (40, 180, 70),
    "cyan": (40, 200, 210),
    "blue": (50, 80, 220),
    "purple": (150, 60, 200),
    "white": (245, 245, 245),
    "black": (15, 15, 15),
}

DEFAULT_WORDS = """
air also area back ball band bank base bell belt bird blue boat body book
cake call calm camp card care cart case cash cast cave cell chat chip city
clay club coal coat code coin cold cool copy cord core corn cost crew crop
dark data dawn days deal deck deep desk dial dice diet disc dish dock door
down draw drop drum dust earn east easy edge face fact fair fall farm fast
fear feed feel file fill film find fine fire fish flag flat flow fold folk
food foot fork form fort free frog fuel full fund gain game gate gear gift
give glad glow goal gold golf good gray grew grid grow hall hand hang hard
harm heat help hill hint hold home hope horn host hour idea iron item join
jump keep kind king lake land lane last late lead leaf lean left lend life
lift like lime line link lion list load loan lock long look loop lord lose
"""

_FALLBACK_FONT_DIRS = ("/usr/share/fonts", "/usr/local/share/fonts")
_PREFERRED_FACES = (
    "DejaVuSansMono.ttf", "DejaVuSans.ttf", "DejaVuSans-Bold.ttf",
    "DejaVuSerif.ttf", "DejaVuSerif-Bold.ttf", "DejaVuSansMono-Bold.ttf",
    "DejaVuSans-Oblique.ttf", "DejaVuSerif-Italic.ttf",
)


def _host_font_files() -> list[str]:
    roots = []
    try:
        import matplotlib
        roots.append(os.path.join(matplotlib.get_data_path(), "fonts", "ttf"))
    except ImportError:
        pass
    roots.extend(_FALLBACK_FONT_DIRS)
    found: dict[str, str] = {}
    for root in roots:
        if not os.path.isdir(root):
            continue
        for dirpath, _, names in os.walk(root):
            for name in names:
                if name.endswith(".ttf") and name not in found:
                    found[name] = os.path.join(dirpath, name)
    ordered = [found[n] for n in _PREFERRED_FACES if n in found]
    if not ordered:
        ordered = sorted(found.values())[:6]
    if not ordered:
        raise ResourceError("no TTF fonts found on this host")
    return ordered


def host_content_font() -> str:
    """A usable TTF on this host, for canonical content rendering."""
    return _host_font_files()[0]


def _procedural_background(rng: np.random.Generator, h: int = 200, w: int = 320) -> np.ndarray:
    yy, xx = np.mgrid[0:h, 0:w].astype(np.float64)
    base = rng.uniform(40, 215, size=3)
    tilt = rng.uniform(-60, 60, size=3)
    img = base[None, None, :] + tilt[None, None, :] * (
        (xx / w * rng.choice([-1, 1]) + yy / h * rng.choice([-1, 1]))[..., None] / 2.0)
    # low-frequency blotches give the inpainter something to reconstruct
    for _ in range(4):
        cy, cx = rng.uniform(0, h), rng.uniform(0, w)
        rad = rng.uniform(20, 80)
        blob = np.exp(-(((yy - cy) ** 2 + (xx - cx) ** 2) / (2 * rad * rad)))
        img += blob[..., None] * rng.uniform(-50, 50, size=3)[None, None, :]
    img += rng.normal(0, 4.0, size=img.shape)
    return np.clip(img, 0, 255).astype(np.uint8)


def make_demo_assets(root: str, n_backgrounds: int = 8, n_fonts: int = 5,
                     seed: int = 0, words: list[str] | None = None) -> SynthConfig:
    """Populate root with fonts/, backgrounds/, lexicon.txt; return a config."""
    fonts_dir = os.path.join(root, "fonts")
    bg_dir = os.path.join(root, "backgrounds")
    os.makedirs(fonts_dir, exist_ok=True)
    os.makedirs(bg_dir, exist_ok=True)

    for src in _host_font_files()[:n_fonts]:
        dst = os.path.join(fonts_dir, os.path.basename(src))
        if not os.path.exists(dst):
            shutil.copyfile(src, dst)

    rng = np.random.default_rng(seed)
    for i in range(n_backgrounds):
        Image.fromarray(_procedural_background(rng)).save(
            os.path.join(bg_dir, f"bg_{i:03d}.png"))

    lexicon = os.path.join(root, "lexicon.txt")
    with open(lexicon, "w") as f:
        f.write("\n".join(words or DEFAULT_WORDS.split()) + "\n")

    cfg = SynthConfig(fonts_dir=fonts_dir, backgrounds_dir=bg_dir, lexicon=lexicon,
                      colors=dict(DEFAULT_PALETTE))
    cfg.validate()
    return cfg
