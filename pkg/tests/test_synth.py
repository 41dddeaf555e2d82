import numpy as np
import pytest

from sste.data import load_lexicon, synth_sample, synthesize_dataset
from sste.data.render import composite_glyphs, render_content, render_glyph_rgba
from sste.records import load_dataset


def test_synthesis_is_deterministic(assets):
    a = synth_sample(assets, seed=42)
    b = synth_sample(assets, seed=42)
    assert a.text == b.text and a.bbox == b.bbox
    assert np.array_equal(a.scene, b.scene)
    assert np.array_equal(a.mask, b.mask)


def test_different_seeds_differ(assets):
    a = synth_sample(assets, seed=1)
    b = synth_sample(assets, seed=2)
    assert (a.text, a.bbox) != (b.text, b.bbox) or not np.array_equal(a.scene, b.scene)


def test_records_fully_labeled_and_consistent(assets):
    for seed in range(6):
        rec = synth_sample(assets, seed=seed)
        rec.validate()
        assert rec.label is not None
        assert rec.background_gt is not None and rec.target_style_gt is not None
        assert rec.text != rec.target_text
        assert rec.is_synthetic


def test_scene_untouched_outside_mask(assets):
    """Pixels with mask=0 keep the exact background bytes (erasure oracle)."""
    rec = synth_sample(assets, seed=9)
    x1, y1, x2, y2 = rec.bbox
    inside = rec.scene[y1:y2, x1:x2]
    gt = rec.background_gt
    crop_mask = rec.mask[y1:y2, x1:x2].astype(bool)
    assert np.array_equal(inside[~crop_mask], gt[~crop_mask])
    outside = np.ones_like(rec.mask, dtype=bool)
    outside[y1:y2, x1:x2] = False
    assert rec.mask[outside].sum() == 0


def test_mask_covers_all_changed_pixels(assets):
    rec = synth_sample(assets, seed=12)
    x1, y1, x2, y2 = rec.bbox
    changed = (rec.scene[y1:y2, x1:x2] != rec.background_gt).any(axis=-1)
    assert not changed[~rec.mask[y1:y2, x1:x2].astype(bool)].any()


def test_target_gt_same_geometry_other_word(assets):
    rec = synth_sample(assets, seed=3)
    x1, y1, x2, y2 = rec.bbox
    assert rec.target_style_gt.shape == (y2 - y1, x2 - x1, 3)


def test_rotation_label_within_range(assets):
    lo, hi = assets.rotation_range_deg
    for seed in range(8):
        rec = synth_sample(assets, seed=seed)
        assert lo <= rec.label.rotation_deg <= hi


def test_content_render_flat_gray_black_glyphs(assets):
    from sste.data.render import CONTENT_GRAY
    from sste.data import list_fonts

    font = sorted(list_fonts(assets.fonts_dir).items())[0]
    render = render_content("word", font[1], font[0])
    px = render.pixels
    assert px.shape[0] == 64 and px.ndim == 3
    corners = px[[0, 0, -1, -1], [0, -1, 0, -1]]
    assert (corners == CONTENT_GRAY).all()
    assert px.min() < CONTENT_GRAY  # glyphs darker than the background


def test_composite_outside_dilated_mask_is_exact():
    rng = np.random.default_rng(0)
    background = rng.integers(0, 255, (64, 96, 3), dtype=np.uint8)
    layer = np.zeros((20, 30, 4), dtype=np.uint8)
    layer[5:15, 5:25] = (250, 10, 10, 255)
    out, mask = composite_glyphs(background.copy(), layer, (10, 10), dilate_radius=2)
    untouched = ~mask.astype(bool)
    assert np.array_equal(out[untouched], background[untouched])


def test_lexicon_words_lowercase(assets):
    words = load_lexicon(assets.lexicon)
    assert len(words) > 50
    assert all(w == w.lower() and w.isalpha() for w in words)


def test_synthesize_dataset_writes_loadable_records(assets, tmp_path):
    synthesize_dataset(assets, str(tmp_path), count=3, seed=77)
    loaded = load_dataset(str(tmp_path))
    assert len(loaded) == 3
    for rec, (t1, t2) in loaded:
        rec.validate()
        assert t1.text == rec.text and t2.text == rec.target_text
