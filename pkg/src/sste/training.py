"""Adversarial trainer: alternating critic/generator RMSProp updates.

Branch c1 (original text) is supervised by L1 + perceptual + adversarial +
recognition against the original crop; branch c2 (target text) receives the
recognition term only. Synthetic records additionally supervise the
inpainter against their pre-composite background; real records skip that
term. The recognizer and perceptual stacks stay frozen throughout; digests
make that auditable.
"""

from __future__ import annotations

import hashlib
import json
import os
import random
import time
from typing import Callable, Optional

import torch

from .config import TrainConfig
from .data.collate import Batch, collate
from .discriminator import PatchDiscriminator
from .errors import ConfigurationError, ContractViolation
from .losses import (adversarial_losses, generator_adversarial_loss, l1_loss,
                     perceptual_loss, recognition_loss, total_loss)
from .model import EditingModel, PairOutput, save_model
from .perceptual import PerceptualBackend, build_perceptual
from .records import ContentRender, SceneRecord
from .recognizer import Charset, Recognizer, load_recognizer

Sample = tuple[SceneRecord, tuple[ContentRender, ContentRender]]


def frozen_digest(module: torch.nn.Module) -> str:
    """Deterministic digest over every tensor in a module's state dict."""
    h = hashlib.sha256()
    for name, tensor in sorted(module.state_dict().items()):
        h.update(name.encode())
        h.update(tensor.detach().cpu().contiguous().numpy().tobytes())
    return h.hexdigest()


def audit_term_gradients(model: EditingModel,
                         terms: dict[str, torch.Tensor]) -> dict[str, list[str]]:
    """Which top-level parameter groups each loss term reaches.

    Groups are the model's first-level children (branch, branch_c2,
    inpainter). A group is reached when any of its parameters receives a
    non-zero gradient from the term.
    """
    groups: dict[str, list[torch.nn.Parameter]] = {}
    for name, param in model.named_parameters():
        groups.setdefault(name.split(".")[0], []).append(param)
    flat = [p for ps in groups.values() for p in ps]
    spans = {}
    i = 0
    for g, ps in groups.items():
        spans[g] = (i, i + len(ps))
        i += len(ps)
    out = {}
    for term_name, term in terms.items():
        grads = torch.autograd.grad(term, flat, retain_graph=True, allow_unused=True)
        touched = []
        for g, (a, b) in spans.items():
            if any(gr is not None and float(gr.abs().sum()) > 0 for gr in grads[a:b]):
                touched.append(g)
        out[term_name] = sorted(touched)
    return out


class Trainer:
    def __init__(self, cfg: TrainConfig, out_dir: str, synth: list[Sample],
                 real: list[Sample] = (), recognizer: Optional[Recognizer] = None,
                 charset: Optional[Charset] = None,
                 perceptual: Optional[PerceptualBackend] = None,
                 log: Optional[Callable[[str], None]] = None):
        cfg.validate()
        if not synth and not real:
            raise ContractViolation("trainer needs at least one sample pool")
        self.cfg = cfg
        self.out_dir = out_dir
        os.makedirs(out_dir, exist_ok=True)
        self.synth = list(synth)
        self.real = list(real)
        self.log = log or (lambda s: None)
        torch.manual_seed(cfg.seed)
        self._rng = random.Random(cfg.seed)
        self.model = EditingModel(cfg.model, cfg.ablation)
        self.disc = PatchDiscriminator(cfg.model.disc_widths)
        if cfg.ablation.no_recognizer:
            self.recognizer, self.charset = None, None
        else:
            if recognizer is None:
                if not cfg.recognizer_checkpoint:
                    raise ConfigurationError(
                        "recognition loss needs a recognizer (checkpoint or instance); "
                        "set ablation.no_recognizer to train without one")
                recognizer, loaded_charset = load_recognizer(cfg.recognizer_checkpoint)
                charset = charset or loaded_charset
            if charset is None:
                raise ConfigurationError("recognizer provided without a charset")
            self.recognizer, self.charset = recognizer, charset
            self.recognizer.eval()
            for p in self.recognizer.parameters():
                p.requires_grad_(False)
        self.perceptual = perceptual or build_perceptual(cfg.perceptual_backend, seed=cfg.seed)
        self.perceptual.freeze()
        self.opt_g = torch.optim.RMSprop(self.model.parameters(), lr=cfg.learning_rate,
                                         alpha=cfg.rmsprop_alpha, eps=cfg.rmsprop_eps)
        self.opt_d = torch.optim.RMSprop(self.disc.parameters(), lr=cfg.learning_rate,
                                         alpha=cfg.rmsprop_alpha, eps=cfg.rmsprop_eps)
        self.step = 0
        self.frozen_digests = {
            "perceptual": frozen_digest(self.perceptual),
            "recognizer": frozen_digest(self.recognizer) if self.recognizer else None,
        }

    # --- batching ------------------------------------------------------------

    def _draw(self, pool: list[Sample], n: int) -> list[Sample]:
        if n <= 0 or not pool:
            return []
        return [pool[self._rng.randrange(len(pool))] for _ in range(n)]

    def compose_batch(self) -> Batch:
        """Mix synthetic and real samples at the configured ratio."""
        s_share, r_share = self.cfg.mix_ratio
        b = self.cfg.batch_size
        n_real = 0 if not self.real else round(b * r_share / (s_share + r_share))
        if not self.synth:
            n_real = b
        picks = self._draw(self.synth, b - n_real) + self._draw(self.real, n_real)
        records = [p[0] for p in picks]
        pairs = [p[1] for p in picks]
        return collate(records, pairs)

    # --- losses ---------------------------------------------------------------

    def compute_losses(self, batch: Batch) -> tuple[dict[str, torch.Tensor],
                                                    torch.Tensor, PairOutput]:
        """Generator-side loss components (sans adversarial), inpaint aux, outputs."""
        out = self.model.forward_pair(batch.scene, batch.mask, batch.style,
                                      batch.t_c1, batch.t_c2, batch.bboxes)
        comp = {
            "l1": l1_loss(out.g_c1, batch.style),
            "perceptual": perceptual_loss(self.perceptual, out.g_c1, batch.style),
        }
        if self.recognizer is not None:
            comp["recognition"] = (
                recognition_loss(self.recognizer, out.g_c1, batch.texts, self.charset)
                + recognition_loss(self.recognizer, out.g_c2, batch.target_texts,
                                   self.charset))
        aux = out.g_c1.new_zeros(())
        syn = batch.is_synthetic
        if (self.cfg.inpaint_aux_weight > 0 and not self.cfg.ablation.no_background_inpainting
                and bool(syn.any())):
            aux = l1_loss(out.background[syn], batch.background_gt[syn])
        return comp, aux, out

    # --- steps ------------------------------------------------------------------

    def train_step(self, batch: Optional[Batch] = None) -> dict:
        if batch is None:
            batch = self.compose_batch()
        self.model.train()
        self.disc.train()
        comp, aux, out = self.compute_losses(batch)

        # critic update first (1:1 alternation); ascend d_loss
        d_real = self.disc(batch.style)
        d_fake = self.disc(out.g_c1.detach())
        d_loss, _ = adversarial_losses(d_real, d_fake)
        self.opt_d.zero_grad()
        (-d_loss).backward()
        self.opt_d.step()

        # generator update against the refreshed critic
        g_adv = generator_adversarial_loss(self.disc(out.g_c1))
        comp["adversarial"] = g_adv
        g_total, breakdown = total_loss(comp, self.cfg.weights)
        g_total = g_total + self.cfg.inpaint_aux_weight * aux
        self.opt_g.zero_grad()
        g_total.backward()
        if self.cfg.grad_clip_norm > 0:
            torch.nn.utils.clip_grad_norm_(self.model.parameters(), self.cfg.grad_clip_norm)
        self.opt_g.step()

        self.step += 1
        metrics = {"step": self.step, "d_loss": float(d_loss.detach()),
                   "inpaint_aux": float(aux.detach()), **breakdown}
        return metrics

    def run(self, steps: Optional[int] = None,
            on_val: Optional[Callable[["Trainer", int], bool]] = None) -> list[dict]:
        """Train for `steps`; writes metrics.jsonl and periodic checkpoints.

        on_val runs every cfg.val_every steps; returning True stops early.
        """
        steps = self.cfg.steps if steps is None else steps
        history = []
        metrics_path = os.path.join(self.out_dir, "metrics.jsonl")
        t0 = time.time()
        with open(metrics_path, "a") as f:
            for _ in range(steps):
                metrics = self.train_step()
                history.append(metrics)
                f.write(json.dumps(metrics) + "\n")
                if self.step % 25 == 0 or self.step == 1:
                    self.log(f"step {self.step}: total {metrics['total']:.4f} "
                             f"l1 {metrics['l1']:.4f} d {metrics['d_loss']:.4f} "
                             f"({time.time() - t0:.0f}s)")
                if self.cfg.checkpoint_every and self.step % self.cfg.checkpoint_every == 0:
                    self.save(os.path.join(self.out_dir, f"model_{self.step:06d}.pt"))
                if on_val is not None and self.step % self.cfg.val_every == 0:
                    if on_val(self, self.step):
                        self.log(f"early stop at step {self.step}")
                        break
        self.save(os.path.join(self.out_dir, "model_final.pt"))
        self.verify_frozen()
        return history

    def save(self, path: str) -> None:
        save_model(self.model, path, extra={"step": self.step})

    def verify_frozen(self) -> None:
        """Assert the frozen stacks are bit-identical to their initial state."""
        if frozen_digest(self.perceptual) != self.frozen_digests["perceptual"]:
            raise ContractViolation("perceptual backend drifted during training")
        if self.recognizer is not None:
            if frozen_digest(self.recognizer) != self.frozen_digests["recognizer"]:
                raise ContractViolation("recognizer drifted during training")
