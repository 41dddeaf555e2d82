"""Evaluation: exact-match accuracy, FID, perceptual distance, iterative runs.

FID is computed from Gaussian moments of pooled features, exposed separately
(gaussian_stats / frechet_distance) so the distance can be validated against
closed forms independently of any feature extractor. Pretrained inception
weights are not assumed; the extractor is pluggable and recorded by name.
"""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass, field
from typing import Callable, Optional

import numpy as np
import torch
from scipy import linalg

from .data.collate import Batch
from .errors import ContractViolation, NumericalGuardError
from .losses import l1_loss
from .model import EditingModel
from .perceptual import PerceptualBackend
from .recognizer import Charset, Recognizer

_IMAG_TOL = 1e-3


def exact_match_accuracy(predictions: list[str], references: list[str]) -> float:
    """Case-sensitive exact-match rate."""
    if len(predictions) != len(references) or not references:
        raise ContractViolation("predictions/references must be equal-length, non-empty")
    hits = sum(1 for p, r in zip(predictions, references) if p == r)
    return hits / len(references)


def recognize(recognizer: Recognizer, charset: Charset, images: torch.Tensor,
              max_len: int = 24) -> list[str]:
    recognizer.eval()
    with torch.no_grad():
        return recognizer.read_texts(images, charset, max_len=max_len)


# --- FID ----------------------------------------------------------------------


def gaussian_stats(features: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Moment hook: sample mean and covariance of [N, D] features."""
    arr = np.asarray(features, dtype=np.float64)
    if arr.ndim != 2 or arr.shape[0] < 2:
        raise ContractViolation("gaussian_stats needs [N >= 2, D] features")
    return arr.mean(axis=0), np.cov(arr, rowvar=False)


def frechet_distance(mu1: np.ndarray, cov1: np.ndarray,
                     mu2: np.ndarray, cov2: np.ndarray) -> float:
    """||mu1 - mu2||^2 + Tr(C1 + C2 - 2 sqrtm(C1 C2))."""
    mu1, mu2 = np.atleast_1d(mu1), np.atleast_1d(mu2)
    cov1, cov2 = np.atleast_2d(cov1), np.atleast_2d(cov2)
    diff = mu1 - mu2
    covmean, _ = linalg.sqrtm(cov1 @ cov2, disp=False)
    if not np.isfinite(covmean).all():
        # singular product: retry on slightly regularized covariances
        eps = 1e-6 * np.eye(cov1.shape[0])
        covmean, _ = linalg.sqrtm((cov1 + eps) @ (cov2 + eps), disp=False)
    if np.iscomplexobj(covmean):
        imag = np.abs(covmean.imag).max()
        if imag > _IMAG_TOL:
            raise NumericalGuardError(f"sqrtm imaginary component {imag:.2e} too large")
        covmean = covmean.real
    return float(diff @ diff + np.trace(cov1) + np.trace(cov2) - 2.0 * np.trace(covmean))


def pooled_features(backend: PerceptualBackend, images: torch.Tensor,
                    stage: int = -1) -> np.ndarray:
    """Spatially pooled activations of one backend stage, as [N, C]."""
    backend.eval()
    with torch.no_grad():
        feats = backend.features(images)[stage]
        return feats.mean(dim=(2, 3)).cpu().numpy()


def fid(features_a: np.ndarray, features_b: np.ndarray) -> float:
    mu_a, cov_a = gaussian_stats(features_a)
    mu_b, cov_b = gaussian_stats(features_b)
    return frechet_distance(mu_a, cov_a, mu_b, cov_b)


# --- perceptual distance --------------------------------------------------------


def perceptual_distance(backend: PerceptualBackend, a: torch.Tensor,
                        b: torch.Tensor) -> torch.Tensor:
    """LPIPS-style distance on unit-normalized channel features.

    Per stage: normalize each spatial feature vector to unit length along
    channels, take the mean squared difference over space and channels, then
    sum stages. Identical inputs score exactly zero.
    """
    if a.shape != b.shape:
        raise ContractViolation("perceptual_distance operands differ in shape")
    backend.eval()
    fa = backend.features(a)
    fb = backend.features(b)
    total = a.new_zeros(a.shape[0])
    for pa, pb in zip(fa, fb):
        na = pa / pa.norm(dim=1, keepdim=True).clamp_min(1e-10)
        nb = pb / pb.norm(dim=1, keepdim=True).clamp_min(1e-10)
        total = total + ((na - nb) ** 2).sum(dim=1).mean(dim=(1, 2))
    return total


# --- whole-model evaluation -------------------------------------------------------


@dataclass
class EvalReport:
    n: int
    accuracy: float
    fid: float
    lpips: float
    l1_c1: float
    metadata: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return asdict(self)

    def save(self, path: str) -> None:
        with open(path, "w") as f:
            json.dump(self.to_dict(), f, indent=2, sort_keys=True)


def evaluate(model: EditingModel, batches: list[Batch], recognizer: Recognizer,
             charset: Charset, backend: PerceptualBackend,
             extractor: Optional[Callable[[torch.Tensor], np.ndarray]] = None) -> EvalReport:
    """Score edited crops: target-text accuracy, FID, perceptual distances.

    FID reference distribution: target-style ground truth when every record
    is synthetic, otherwise the original style crops.
    """
    if not batches:
        raise ContractViolation("evaluate needs at least one batch")
    extractor = extractor or (lambda imgs: pooled_features(backend, imgs))
    model.eval()
    preds: list[str] = []
    refs: list[str] = []
    feats_fake: list[np.ndarray] = []
    feats_real: list[np.ndarray] = []
    lpips_vals: list[float] = []
    l1_vals: list[float] = []
    all_synth = all(bool(b.is_synthetic.all()) for b in batches)
    with torch.no_grad():
        for batch in batches:
            out = model.forward_pair(batch.scene, batch.mask, batch.style,
                                     batch.t_c1, batch.t_c2, batch.bboxes)
            preds += recognize(recognizer, charset, out.g_c2)
            refs += list(batch.target_texts)
            reference = batch.target_style_gt if all_synth else batch.style
            feats_fake.append(extractor(out.g_c2))
            feats_real.append(extractor(reference))
            lpips_vals += perceptual_distance(backend, out.g_c1, batch.style).tolist()
            l1_vals.append(float(l1_loss(out.g_c1, batch.style)))
    report = EvalReport(
        n=len(refs),
        accuracy=exact_match_accuracy(preds, refs),
        fid=fid(np.concatenate(feats_fake), np.concatenate(feats_real)),
        lpips=float(np.mean(lpips_vals)),
        l1_c1=float(np.mean(l1_vals)),
        metadata={"perceptual_backend": backend.name,
                  "fid_reference": "target_style_gt" if all_synth else "style_crop"})
    return report


def iterative_eval(model: EditingModel, batch: Batch, recognizer: Recognizer,
                   charset: Charset, backend: PerceptualBackend) -> list[dict]:
    """Two-pass edit cycle; the model runs exactly twice per record.

    Pass 1 edits the original crop to the target text. Pass 2 feeds the
    pass-1 output back as the style crop (scene and mask unchanged) and
    edits back to the original text, closing the round trip.
    """
    model.eval()
    reports = []
    with torch.no_grad():
        out1 = model.forward_pair(batch.scene, batch.mask, batch.style,
                                  batch.t_c1, batch.t_c2, batch.bboxes)
        preds1 = recognize(recognizer, charset, out1.g_c2)
        reports.append({
            "pass": 1,
            "accuracy": exact_match_accuracy(preds1, list(batch.target_texts)),
            "lpips_vs_original": float(
                perceptual_distance(backend, out1.g_c1, batch.style).mean()),
        })
        out2 = model.forward_pair(batch.scene, batch.mask, out1.g_c2,
                                  batch.t_c2, batch.t_c1, batch.bboxes)
        preds2 = recognize(recognizer, charset, out2.g_c2)
        reports.append({
            "pass": 2,
            "accuracy": exact_match_accuracy(preds2, list(batch.texts)),
            "lpips_vs_original": float(
                perceptual_distance(backend, out2.g_c2, batch.style).mean()),
        })
    return reports
