from .assets import DEFAULT_PALETTE, make_demo_assets
from .collate import Batch, batch_width, collate, from_unit_tensor, to_unit_tensor
from .manifest import ManifestReport, load_real_manifest
from .render import list_fonts, render_content
from .synth import content_pair, load_lexicon, synth_sample, synthesize_dataset

__all__ = [
    "Batch", "DEFAULT_PALETTE", "ManifestReport", "batch_width", "collate",
    "content_pair", "from_unit_tensor", "list_fonts", "load_lexicon",
    "load_real_manifest", "make_demo_assets", "render_content", "synth_sample",
    "synthesize_dataset", "to_unit_tensor",
]
