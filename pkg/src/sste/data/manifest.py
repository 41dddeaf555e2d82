"""Real-world manifest ingestion.

A manifest is JSON lines, one record each:
  {"id": str, "image": relative path, "bbox": [x1,y1,x2,y2] or an 8-number
   quad, "text": str, "target_text": str, "source": str}
Quads collapse to their axis-aligned bounding rectangle. Style crops shorter
than 32 px are discarded; every malformed line is collected in the report
instead of aborting the load.
"""

from __future__ import annotations

import json
import os
from dataclasses import dataclass, field

import numpy as np
from PIL import Image

from ..records import SceneRecord

MIN_CROP_HEIGHT = 32

# context enlargement around the annotated box, as a fraction of box size
_EXPAND_X = 0.5
_EXPAND_Y = 0.5


@dataclass
class ManifestReport:
    total_lines: int = 0
    loaded: int = 0
    dropped_low_res: int = 0
    errors: list[tuple[int, str]] = field(default_factory=list)


def _rect_from_bbox(raw) -> tuple[int, int, int, int]:
    vals = [float(v) for v in raw]
    if len(vals) == 4:
        x1, y1, x2, y2 = vals
    elif len(vals) == 8:
        xs, ys = vals[0::2], vals[1::2]
        x1, y1, x2, y2 = min(xs), min(ys), max(xs), max(ys)
    else:
        raise ValueError(f"bbox must have 4 or 8 numbers, got {len(vals)}")
    if x2 <= x1 or y2 <= y1:
        raise ValueError(f"degenerate bbox {raw}")
    return int(round(x1)), int(round(y1)), int(round(x2)), int(round(y2))


def load_real_manifest(path: str) -> tuple[list[SceneRecord], ManifestReport]:
    base = os.path.dirname(os.path.abspath(path))
    report = ManifestReport()
    records: list[SceneRecord] = []
    with open(path) as f:
        lines = f.readlines()
    for line_no, line in enumerate(lines, start=1):
        line = line.strip()
        if not line:
            continue
        report.total_lines += 1
        try:
            record = _load_line(base, line, line_no)
        except Exception as e:  # per-line failures never abort the load
            report.errors.append((line_no, str(e)))
            continue
        if record is None:
            report.dropped_low_res += 1
            continue
        records.append(record)
        report.loaded += 1
    return records, report


def _load_line(base: str, line: str, line_no: int) -> SceneRecord | None:
    row = json.loads(line)
    for key in ("id", "image", "bbox", "text", "target_text"):
        if key not in row:
            raise ValueError(f"missing field {key!r}")
    x1, y1, x2, y2 = _rect_from_bbox(row["bbox"])
    img_path = os.path.join(base, row["image"])
    img = np.asarray(Image.open(img_path).convert("RGB"))
    ih, iw = img.shape[:2]
    x1, x2 = max(0, x1), min(iw, x2)
    y1, y2 = max(0, y1), min(ih, y2)
    if x2 <= x1 or y2 <= y1:
        raise ValueError("bbox outside image bounds")
    if (y2 - y1) < MIN_CROP_HEIGHT:
        return None

    ex = int(round((x2 - x1) * _EXPAND_X))
    ey = int(round((y2 - y1) * _EXPAND_Y))
    cx1, cy1 = max(0, x1 - ex), max(0, y1 - ey)
    cx2, cy2 = min(iw, x2 + ex), min(ih, y2 + ey)
    scene = img[cy1:cy2, cx1:cx2].copy()
    bbox = (x1 - cx1, y1 - cy1, x2 - cx1, y2 - cy1)

    mask = np.zeros(scene.shape[:2], dtype=np.uint8)
    mask[bbox[1]:bbox[3], bbox[0]:bbox[2]] = 1

    record = SceneRecord(
        id=str(row["id"]),
        scene=scene,
        mask=mask,
        style_crop=scene[bbox[1]:bbox[3], bbox[0]:bbox[2]].copy(),
        bbox=bbox,
        text=str(row["text"]),
        target_text=str(row["target_text"]),
        source_tag=str(row.get("source", "real")),
    )
    record.validate()
    return record
