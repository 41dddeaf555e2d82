"""Command line entry points.

Exit codes: 0 success, 1 contract violation (bad data/requests), 2
configuration problems (missing files, bad configs, absent resources).
"""

from __future__ import annotations

import functools
import json
import os
import sys

import click
import numpy as np
import torch

from .config import load_synth_config, load_train_config
from .data.assets import host_content_font, make_demo_assets
from .data.collate import collate, from_unit_tensor
from .data.manifest import load_real_manifest
from .data.render import render_content
from .data.synth import content_pair, synth_sample, synthesize_dataset
from .editing import (CentroidStore, EditRequest, apply_edit, compute_centroids,
                      content_tensor, open_session)
from .errors import ConfigurationError, ContractViolation, NumericalGuardError
from .generator import LayerCodes
from .metrics import evaluate
from .model import load_model
from .perceptual import build_perceptual
from .records import load_dataset, load_record
from .recognizer import DEFAULT_CHARSET, load_recognizer, pretrain_recognizer
from .service import ENV_CHECKPOINT, create_app
from .training import Trainer


def _guarded(fn):
    @functools.wraps(fn)
    def wrapper(*args, **kwargs):
        try:
            return fn(*args, **kwargs)
        except ContractViolation as e:
            click.echo(f"error: {e}", err=True)
            sys.exit(1)
        except NumericalGuardError as e:
            click.echo(f"numerical guard: {e}", err=True)
            sys.exit(1)
        except ConfigurationError as e:
            click.echo(f"configuration error: {e}", err=True)
            sys.exit(2)
    return wrapper


@click.group()
def main() -> None:
    """Scene text style editing toolkit."""


@main.command()
@click.option("--config", "config_path", required=True, type=click.Path())
@click.option("--out", "out_dir", required=True, type=click.Path())
@click.option("--count", type=int, default=None, help="overrides the config count")
@click.option("--seed", type=int, default=None, help="overrides the config seed")
@_guarded
def synth(config_path: str, out_dir: str, count, seed) -> None:
    """Synthesize a labeled dataset of editable scene records."""
    cfg = load_synth_config(config_path)
    n = count if count is not None else cfg.count
    s = seed if seed is not None else cfg.seed
    dirs = synthesize_dataset(cfg, out_dir, n, s)
    click.echo(f"wrote {len(dirs)} records to {out_dir}")


@main.command("make-assets")
@click.option("--out", "out_dir", required=True, type=click.Path())
@click.option("--backgrounds", type=int, default=8)
@click.option("--seed", type=int, default=0)
@_guarded
def make_assets(out_dir: str, backgrounds: int, seed: int) -> None:
    """Bootstrap fonts/backgrounds/lexicon plus a synth config for demos."""
    import yaml

    cfg = make_demo_assets(out_dir, n_backgrounds=backgrounds, seed=seed)
    doc = {"fonts_dir": "fonts", "backgrounds_dir": "backgrounds",
           "lexicon": "lexicon.txt",
           "colors": {k: list(v) for k, v in cfg.colors.items()},
           "rotation_angles": [-10.0, 0.0, 10.0], "seed": seed}
    path = os.path.join(out_dir, "synth.yaml")
    with open(path, "w") as f:
        yaml.safe_dump(doc, f, sort_keys=True)
    click.echo(f"assets ready under {out_dir} (config: {path})")


@main.command()
@click.option("--config", "config_path", required=True, type=click.Path())
@click.option("--data", "data_dir", required=True, type=click.Path(),
              help="synthetic dataset directory")
@click.option("--real-manifest", type=click.Path(), default=None)
@click.option("--out", "out_dir", required=True, type=click.Path())
@click.option("--steps", type=int, default=None, help="overrides the config steps")
@_guarded
def train(config_path: str, data_dir: str, real_manifest, out_dir: str, steps) -> None:
    """Train the editing model on synthetic (and optionally real) records."""
    cfg = load_train_config(config_path)
    synth_samples = load_dataset(data_dir)
    real_samples = []
    if real_manifest:
        records, report = load_real_manifest(real_manifest)
        font = host_content_font()
        for rec in records:
            pair = (render_content(rec.text, font, "host"),
                    render_content(rec.target_text, font, "host"))
            real_samples.append((rec, pair))
        click.echo(f"manifest: {report.loaded} loaded, {report.dropped_low_res} "
                   f"dropped (<32 px), {len(report.errors)} errors")
        for line_no, msg in report.errors:
            click.echo(f"  line {line_no}: {msg}", err=True)
    trainer = Trainer(cfg, out_dir, synth_samples, real_samples, log=click.echo)
    history = trainer.run(steps=steps)
    final = history[-1] if history else {}
    click.echo(f"finished at step {trainer.step}: "
               f"total {final.get('total', float('nan')):.4f}")
    click.echo(os.path.join(out_dir, "model_final.pt"))


@main.command("pretrain-recognizer")
@click.option("--config", "config_path", required=True, type=click.Path(),
              help="synthesis config used to draw training crops")
@click.option("--out", "out_path", required=True, type=click.Path())
@click.option("--samples", type=int, default=200)
@click.option("--steps", type=int, default=400)
@click.option("--seed", type=int, default=0)
@_guarded
def pretrain_recognizer_cmd(config_path: str, out_path: str, samples: int,
                            steps: int, seed: int) -> None:
    """Train the frozen recognizer on synthetic crops."""
    cfg = load_synth_config(config_path)
    crops, texts = [], []
    for i in range(samples):
        rec = synth_sample(cfg, seed=seed + i)
        crops.append(rec.style_crop)
        texts.append(rec.text)
        if rec.target_style_gt is not None:
            crops.append(rec.target_style_gt)
            texts.append(rec.target_text)
        pair = content_pair(cfg, rec)
        crops.append(pair[0].pixels)
        texts.append(rec.text)
    pretrain_recognizer(crops, texts, out_path, charset=DEFAULT_CHARSET,
                        steps=steps, seed=seed, log=click.echo)
    click.echo(f"recognizer saved to {out_path}")


def _load_batches(data_dir: str, batch_size: int):
    samples = load_dataset(data_dir)
    if not samples:
        raise ContractViolation(f"no records under {data_dir}")
    batches = []
    for i in range(0, len(samples), batch_size):
        chunk = samples[i:i + batch_size]
        if len(chunk) >= 2:
            batches.append(collate([c[0] for c in chunk], [c[1] for c in chunk]))
    return batches


@main.command("eval")
@click.option("--model", "model_path", required=True, type=click.Path())
@click.option("--data", "data_dir", required=True, type=click.Path())
@click.option("--recognizer", "recognizer_path", required=True, type=click.Path())
@click.option("--out", "out_path", type=click.Path(), default=None)
@click.option("--batch-size", type=int, default=8)
@click.option("--perceptual-backend", default="auto")
@_guarded
def eval_cmd(model_path: str, data_dir: str, recognizer_path: str, out_path,
             batch_size: int, perceptual_backend: str) -> None:
    """Evaluate a trained model on a dataset directory."""
    model = load_model(model_path)
    recognizer, charset = load_recognizer(recognizer_path)
    backend = build_perceptual(perceptual_backend)
    report = evaluate(model, _load_batches(data_dir, batch_size), recognizer,
                      charset, backend)
    click.echo(json.dumps(report.to_dict(), indent=2, sort_keys=True))
    if out_path:
        report.save(out_path)
        click.echo(f"report saved to {out_path}")


@main.command()
@click.option("--model", "model_path", required=True, type=click.Path())
@click.option("--data", "data_dir", required=True, type=click.Path())
@click.option("--out", "out_path", required=True, type=click.Path())
@click.option("--batch-size", type=int, default=8)
@_guarded
def centroids(model_path: str, data_dir: str, out_path: str, batch_size: int) -> None:
    """Compute per-facet label centroids over a labeled dataset."""
    model = load_model(model_path)
    samples = [s for s in load_dataset(data_dir) if s[0].label is not None]
    if not samples:
        raise ContractViolation(f"no labeled records under {data_dir}")
    stacks, labels = [], []
    model.eval()
    with torch.no_grad():
        for i in range(0, len(samples), batch_size):
            chunk = samples[i:i + batch_size]
            batch = collate([c[0] for c in chunk], [c[1] for c in chunk])
            _, z = model.encode_style(batch.style, content=batch.t_c1)
            stacks.append(model.map_codes(z).stack)
            labels += [c[0].label for c in chunk]
    store = compute_centroids(LayerCodes(torch.cat(stacks)), labels)
    store.save(out_path)
    counts = {f: len(store.labels(f)) for f in store.centroids}
    click.echo(f"centroids saved to {out_path}: {counts}")


def _record_from_files(image_path: str, mask_path: str, bbox_spec: str,
                       text) -> "SceneRecord":
    from PIL import Image

    from .records import SceneRecord

    if not text:
        raise ConfigurationError("--image mode needs --text")
    scene = np.asarray(Image.open(image_path).convert("RGB"))
    mask_img = np.asarray(Image.open(mask_path).convert("RGB"))
    mask = (mask_img[..., 0] > 127).astype(np.uint8)
    try:
        x1, y1, x2, y2 = (int(v) for v in bbox_spec.split(","))
    except ValueError:
        raise ConfigurationError(
            f"bad --bbox {bbox_spec!r}, want x1,y1,x2,y2") from None
    record = SceneRecord(id="cli", scene=scene, mask=mask,
                         style_crop=scene[y1:y2, x1:x2].copy(),
                         bbox=(x1, y1, x2, y2), text=text, target_text=text,
                         source_tag="cli")
    record.validate()
    return record


@main.command()
@click.option("--model", "model_path", type=click.Path(), default=None,
              help=f"checkpoint path; defaults to ${ENV_CHECKPOINT}")
@click.option("--record", "record_dir", type=click.Path(), default=None,
              help="saved dataset record directory")
@click.option("--image", "image_path", type=click.Path(), default=None,
              help="scene PNG; use with --mask and --bbox")
@click.option("--mask", "mask_path", type=click.Path(), default=None)
@click.option("--bbox", "bbox_spec", default=None, help="x1,y1,x2,y2")
@click.option("--out", "out_path", type=click.Path(), default="edited.png")
@click.option("--text", default=None, help="replacement text")
@click.option("--facet", "facet_specs", multiple=True,
              help="facet=label, repeatable; needs --centroids")
@click.option("--centroids", "centroids_path", type=click.Path(), default=None)
@click.option("--gamma", type=float, default=1.0)
@_guarded
def edit(model_path, record_dir, image_path, mask_path, bbox_spec, out_path: str,
         text, facet_specs, centroids_path, gamma: float) -> None:
    """Edit a record or an image+mask+bbox triple; writes the crop as PNG."""
    from PIL import Image

    model_path = model_path or os.environ.get(ENV_CHECKPOINT)
    if not model_path:
        raise ConfigurationError(f"no model: pass --model or set {ENV_CHECKPOINT}")
    model = load_model(model_path)
    font = host_content_font()
    if record_dir:
        record, t1, _ = load_record(record_dir)
        pair = (t1, t1)
    elif image_path and mask_path and bbox_spec:
        record = _record_from_files(image_path, mask_path, bbox_spec, text)
        render = render_content(record.text, font, "host")
        pair = (render, render)
    else:
        raise ConfigurationError("pass --record or all of --image/--mask/--bbox")
    batch = collate([record], [pair])
    w = batch.w

    def render_text(s: str):
        return content_tensor(render_content(s, font, "host").pixels, w)

    session = open_session(model, batch.scene, batch.mask, batch.style,
                           batch.bboxes, record.text, render_text)
    facets = {}
    if facet_specs:
        if not centroids_path:
            raise ContractViolation("--facet requires --centroids")
        store = CentroidStore.load(centroids_path)
        for spec in facet_specs:
            facet, _, label = spec.partition("=")
            if not label:
                raise ContractViolation(f"bad --facet spec {spec!r}, want facet=label")
            facets[facet] = store.get(facet, label)
    session, image = apply_edit(session, EditRequest(text=text, facets=facets,
                                                     gamma=gamma))
    arr = from_unit_tensor(image[0])
    Image.fromarray(np.asarray(arr)).save(out_path, format="PNG")
    click.echo(f"edited crop written to {out_path}")


@main.command()
@click.option("--model", "model_path", type=click.Path(), default=None,
              help=f"checkpoint path; defaults to ${ENV_CHECKPOINT}")
@click.option("--centroids", "centroids_path", type=click.Path(), default=None)
@click.option("--host", default="127.0.0.1")
@click.option("--port", type=int, default=8000)
@_guarded
def serve(model_path, centroids_path, host: str, port: int) -> None:
    """Run the HTTP editing service."""
    import uvicorn

    app = create_app(model_path=model_path, centroids_path=centroids_path)
    uvicorn.run(app, host=host, port=port)


if __name__ == "__main__":
    main()
