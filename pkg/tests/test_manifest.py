import json

import numpy as np
import pytest
from PIL import Image

from sste.data.manifest import MIN_CROP_HEIGHT, _rect_from_bbox, load_real_manifest


@pytest.fixture
def scene_file(tmp_path):
    rng = np.random.default_rng(4)
    img = rng.integers(0, 255, (200, 320, 3), dtype=np.uint8)
    path = tmp_path / "scene.png"
    Image.fromarray(img).save(path)
    return path, img


def _write_manifest(tmp_path, rows):
    path = tmp_path / "manifest.jsonl"
    with open(path, "w") as f:
        for row in rows:
            f.write((row if isinstance(row, str) else json.dumps(row)) + "\n")
    return str(path)


def test_quad_collapses_to_aabb():
    assert _rect_from_bbox([10, 5, 50, 8, 48, 40, 12, 38]) == (10, 5, 50, 40)


def test_degenerate_bbox_raises():
    with pytest.raises(ValueError):
        _rect_from_bbox([10, 10, 10, 40])


def test_loads_valid_line_with_context_expansion(tmp_path, scene_file):
    path, img = scene_file
    m = _write_manifest(tmp_path, [{"id": "a", "image": "scene.png",
                                    "bbox": [100, 80, 180, 120],
                                    "text": "shop", "target_text": "stop"}])
    records, report = load_real_manifest(m)
    assert report.loaded == 1 and not report.errors
    rec = records[0]
    rec.validate()
    # context: half the box size on each side (80x40 box -> 40/20 margins)
    assert rec.scene.shape[:2] == (80, 160)
    assert rec.bbox == (40, 20, 120, 60)
    assert not rec.is_synthetic
    assert np.array_equal(rec.style_crop, img[80:120, 100:180])


def test_low_crops_dropped_not_errors(tmp_path, scene_file):
    _, _ = scene_file
    m = _write_manifest(tmp_path, [{"id": "a", "image": "scene.png",
                                    "bbox": [10, 10, 90, 10 + MIN_CROP_HEIGHT - 1],
                                    "text": "low", "target_text": "res"}])
    records, report = load_real_manifest(m)
    assert not records
    assert report.dropped_low_res == 1 and not report.errors


def test_bad_lines_reported_with_line_numbers(tmp_path, scene_file):
    rows = [
        {"id": "ok", "image": "scene.png", "bbox": [50, 50, 150, 100],
         "text": "good", "target_text": "fine"},
        "{not json",
        {"id": "missing", "image": "scene.png", "bbox": [0, 0, 50, 50],
         "text": "x"},  # no target_text
        {"id": "oob", "image": "scene.png", "bbox": [400, 400, 500, 500],
         "text": "out", "target_text": "side"},
    ]
    records, report = load_real_manifest(_write_manifest(tmp_path, rows))
    assert report.loaded == 1 and len(records) == 1
    assert sorted(no for no, _ in report.errors) == [2, 3, 4]


def test_bbox_clipped_to_image(tmp_path, scene_file):
    m = _write_manifest(tmp_path, [{"id": "a", "image": "scene.png",
                                    "bbox": [-20, 100, 100, 190],
                                    "text": "clip", "target_text": "crop"}])
    records, report = load_real_manifest(m)
    assert report.loaded == 1
    records[0].validate()


def test_mask_fills_exact_bbox(tmp_path, scene_file):
    m = _write_manifest(tmp_path, [{"id": "a", "image": "scene.png",
                                    "bbox": [100, 80, 180, 120],
                                    "text": "shop", "target_text": "stop"}])
    records, _ = load_real_manifest(m)
    rec = records[0]
    x1, y1, x2, y2 = rec.bbox
    assert rec.mask[y1:y2, x1:x2].all()
    assert rec.mask.sum() == (y2 - y1) * (x2 - x1)
