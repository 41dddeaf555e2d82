"""Training objectives: L1, perceptual, recognition, adversarial, weighted total."""

from __future__ import annotations

import torch
import torch.nn.functional as F

from .config import LossWeights
from .errors import ContractViolation
from .perceptual import PerceptualBackend
from .recognizer import Charset, Recognizer, encode_batch

_P_EPS = 1e-7


def l1_loss(a: torch.Tensor, b: torch.Tensor) -> torch.Tensor:
    if a.shape != b.shape:
        raise ContractViolation(f"l1 operands differ in shape: {tuple(a.shape)} vs {tuple(b.shape)}")
    return (a - b).abs().mean()


def perceptual_loss(backend: PerceptualBackend, a: torch.Tensor,
                    b: torch.Tensor) -> torch.Tensor:
    """sum_i (1/M_i) * ||phi_i(a) - phi_i(b)||_1 with M_i the element count."""
    if a.shape != b.shape:
        raise ContractViolation("perceptual operands differ in shape")
    fa = backend.features(a)
    fb = backend.features(b)
    total = a.new_zeros(())
    for pa, pb in zip(fa, fb):
        total = total + (pa - pb).abs().mean()
    return total


def masked_l1_loss(a: torch.Tensor, b: torch.Tensor, mask: torch.Tensor) -> torch.Tensor:
    """Mean absolute error over mask=1 pixels only (all channels)."""
    if a.shape != b.shape:
        raise ContractViolation("masked l1 operands differ in shape")
    weight = mask.expand_as(a)
    denom = weight.sum().clamp_min(1.0)
    return ((a - b).abs() * weight).sum() / denom


def recognition_loss_from_logits(logits: torch.Tensor, targets: torch.Tensor,
                                 lengths: torch.Tensor) -> torch.Tensor:
    """Per-record CE summed over exactly that record's L label positions,
    then averaged over the batch."""
    if logits.shape[:2] != targets.shape:
        raise ContractViolation("logits/targets disagree on batch or length")
    b, lmax, k = logits.shape
    ce = F.cross_entropy(logits.reshape(-1, k), targets.reshape(-1),
                         reduction="none").reshape(b, lmax)
    pos = torch.arange(lmax, device=logits.device).unsqueeze(0)
    keep = (pos < lengths.unsqueeze(1)).to(ce.dtype)
    return (ce * keep).sum(dim=1).mean()


def recognition_loss(recognizer: Recognizer, images: torch.Tensor, texts: list[str],
                     charset: Charset) -> torch.Tensor:
    """Teacher-forced recognition CE of the generated crops against their labels."""
    targets, lengths = encode_batch(texts, charset, device=images.device)
    logits = recognizer.forward_logits(images, targets)
    return recognition_loss_from_logits(logits, targets, lengths)


def generator_adversarial_loss(d_fake_logits: torch.Tensor) -> torch.Tensor:
    """Non-saturating generator objective -E[log D(fake)]; 0.693 at D = 0.5."""
    p_fake = torch.sigmoid(d_fake_logits).clamp(_P_EPS, 1.0 - _P_EPS)
    return -torch.log(p_fake).mean()


def adversarial_losses(d_real_logits: torch.Tensor,
                       d_fake_logits: torch.Tensor) -> tuple[torch.Tensor, torch.Tensor]:
    """GAN objective values.

    d_loss = E[log D(real) + log(1 - D(fake))]  (the critic maximizes this;
    at D = 0.5 everywhere it equals 2*log(0.5) = -1.386).
    g_loss = -E[log D(fake)]  (non-saturating; 0.693 at D = 0.5).
    """
    p_real = torch.sigmoid(d_real_logits).clamp(_P_EPS, 1.0 - _P_EPS)
    p_fake = torch.sigmoid(d_fake_logits).clamp(_P_EPS, 1.0 - _P_EPS)
    d_loss = (torch.log(p_real) + torch.log(1.0 - p_fake)).mean()
    g_loss = -torch.log(p_fake).mean()
    return d_loss, g_loss


def total_loss(components: dict[str, torch.Tensor],
               weights: LossWeights) -> tuple[torch.Tensor, dict[str, float]]:
    """Weighted sum l1*w1 + perceptual*w2 + recognition*w3 + adversarial*w4.

    Missing components count as zero. Returns the scalar plus a float
    breakdown (unweighted values keyed by component, "total" included).
    """
    known = ("l1", "perceptual", "recognition", "adversarial")
    unknown = set(components) - set(known)
    if unknown:
        raise ContractViolation(f"unknown loss components: {sorted(unknown)}")
    zero = next(iter(components.values())).new_zeros(()) if components else torch.zeros(())
    w = {"l1": weights.l1, "perceptual": weights.perceptual,
         "recognition": weights.recognition, "adversarial": weights.adversarial}
    total = zero
    breakdown = {}
    for name in known:
        value = components.get(name)
        if value is None:
            continue
        total = total + w[name] * value
        breakdown[name] = float(value.detach())
    breakdown["total"] = float(total.detach())
    return total, breakdown
