"""Frozen text recognizer used by the recognition objective and evaluation.

A compact convolutional encoder collapses the 64-px-high crop into a
horizontal feature sequence; a GRU decoder with additive attention emits one
character per step. Pretraining (with an EOS step so decoding terminates)
happens offline; inside the editing objective the recognizer is frozen and
scored over exactly the label positions.
"""

from __future__ import annotations

import json
import os
import random

import numpy as np
import torch
import torch.nn as nn
import torch.nn.functional as F

from .checkpoint import load_checkpoint, save_checkpoint
from .errors import ConfigurationError, ContractViolation

RECOGNIZER_ARCH = "attn-crnn-recognizer"

PAD, GO, EOS = 0, 1, 2
N_SPECIALS = 3


class Charset:
    """Character vocabulary with PAD/GO/EOS specials at fixed indices."""

    def __init__(self, chars: str):
        if len(set(chars)) != len(chars):
            raise ConfigurationError("charset contains duplicate characters")
        self.chars = chars
        self._to_id = {c: i + N_SPECIALS for i, c in enumerate(chars)}

    def __len__(self) -> int:
        return N_SPECIALS + len(self.chars)

    def encode(self, text: str) -> list[int]:
        try:
            return [self._to_id[c] for c in text]
        except KeyError as e:
            raise ContractViolation(f"character {e.args[0]!r} not in charset") from None

    def decode(self, ids) -> str:
        out = []
        for i in ids:
            i = int(i)
            if i == EOS:
                break
            if i >= N_SPECIALS:
                out.append(self.chars[i - N_SPECIALS])
        return "".join(out)

    def save(self, path: str) -> None:
        with open(path, "w") as f:
            json.dump({"chars": self.chars}, f)

    @classmethod
    def load(cls, path: str) -> "Charset":
        if not os.path.isfile(path):
            raise ConfigurationError(f"charset file does not exist: {path}")
        with open(path) as f:
            return cls(json.load(f)["chars"])


DEFAULT_CHARSET = Charset("abcdefghijklmnopqrstuvwxyz")


class Recognizer(nn.Module):
    def __init__(self, n_classes: int, conv_widths: tuple[int, ...] = (32, 64, 96, 128),
                 hidden: int = 128):
        super().__init__()
        convs, cin = [], 3
        strides = [(2, 2), (2, 2), (2, 1), (2, 1)]
        for cout, s in zip(conv_widths, strides):
            convs += [nn.Conv2d(cin, cout, 3, stride=s, padding=1),
                      nn.BatchNorm2d(cout), nn.ReLU(inplace=True)]
            cin = cout
        self.convs = nn.Sequential(*convs)
        self.conv_widths = tuple(conv_widths)
        self.encoder = nn.GRU(cin, hidden, batch_first=True, bidirectional=True)
        self.embed = nn.Embedding(n_classes, hidden)
        self.cell = nn.GRUCell(hidden + 2 * hidden, hidden)
        self.attn_mem = nn.Linear(2 * hidden, hidden)
        self.attn_query = nn.Linear(hidden, hidden)
        self.attn_v = nn.Linear(hidden, 1)
        self.out = nn.Linear(hidden, n_classes)
        self.hidden = hidden
        self.n_classes = n_classes

    def _memory(self, images: torch.Tensor) -> torch.Tensor:
        if images.shape[-2] != 64:
            raise ContractViolation(f"recognizer expects 64-px-high crops, got {images.shape[-2]}")
        feat = self.convs(images)                      # [B, C, 4, w/4]
        feat = feat.mean(dim=2).transpose(1, 2)        # [B, T, C]
        memory, _ = self.encoder(feat)
        return memory                                  # [B, T, 2*hidden]

    def _attend(self, query: torch.Tensor, memory: torch.Tensor,
                keys: torch.Tensor) -> torch.Tensor:
        score = self.attn_v(torch.tanh(keys + self.attn_query(query).unsqueeze(1)))
        weights = torch.softmax(score, dim=1)
        return (weights * memory).sum(dim=1)

    def _decode_steps(self, memory: torch.Tensor, inputs: torch.Tensor) -> torch.Tensor:
        """Run one GRU step per input token; returns logits [B, steps, K]."""
        b = memory.shape[0]
        keys = self.attn_mem(memory)
        state = memory.new_zeros(b, self.hidden)
        logits = []
        for t in range(inputs.shape[1]):
            context = self._attend(state, memory, keys)
            state = self.cell(torch.cat([self.embed(inputs[:, t]), context], dim=1), state)
            logits.append(self.out(state))
        return torch.stack(logits, dim=1)

    def forward_logits(self, images: torch.Tensor, targets: torch.Tensor) -> torch.Tensor:
        """Teacher-forced logits, one step per target position.

        targets: [B, L] token ids (PAD-padded). Step t sees GO for t=0, else
        the ground-truth token t-1.
        """
        memory = self._memory(images)
        go = torch.full((targets.shape[0], 1), GO, dtype=torch.long, device=targets.device)
        inputs = torch.cat([go, targets[:, :-1]], dim=1)
        return self._decode_steps(memory, inputs)

    @torch.no_grad()
    def decode(self, images: torch.Tensor, max_len: int = 24) -> list[list[int]]:
        """Greedy decoding until EOS (or max_len)."""
        memory = self._memory(images)
        b = memory.shape[0]
        keys = self.attn_mem(memory)
        state = memory.new_zeros(b, self.hidden)
        token = torch.full((b,), GO, dtype=torch.long, device=images.device)
        done = torch.zeros(b, dtype=torch.bool, device=images.device)
        seqs: list[list[int]] = [[] for _ in range(b)]
        for _ in range(max_len):
            context = self._attend(state, memory, keys)
            state = self.cell(torch.cat([self.embed(token), context], dim=1), state)
            token = self.out(state).argmax(dim=1)
            for i in range(b):
                if not done[i]:
                    seqs[i].append(int(token[i]))
            done |= token == EOS
            if bool(done.all()):
                break
        return seqs

    def read_texts(self, images: torch.Tensor, charset: Charset,
                   max_len: int = 24) -> list[str]:
        return [charset.decode(s) for s in self.decode(images, max_len=max_len)]


def encode_batch(texts: list[str], charset: Charset,
                 device=None) -> tuple[torch.Tensor, torch.Tensor]:
    """PAD-padded target ids [B, Lmax] and per-record lengths [B]."""
    if not texts:
        raise ContractViolation("empty text batch")
    encoded = [charset.encode(t) for t in texts]
    lengths = torch.tensor([len(e) for e in encoded], dtype=torch.long, device=device)
    lmax = int(lengths.max())
    ids = torch.full((len(texts), lmax), PAD, dtype=torch.long, device=device)
    for i, e in enumerate(encoded):
        ids[i, :len(e)] = torch.tensor(e, dtype=torch.long, device=device)
    return ids, lengths


def save_recognizer(model: Recognizer, charset: Charset, path: str) -> None:
    save_checkpoint(path, RECOGNIZER_ARCH, dict(model.state_dict()),
                    extra={"chars": charset.chars, "hidden": model.hidden,
                           "conv_widths": list(model.conv_widths)})


def load_recognizer(path: str) -> tuple[Recognizer, Charset]:
    meta, tensors = load_checkpoint(path)
    if meta.get("arch") != RECOGNIZER_ARCH:
        raise ConfigurationError(f"unexpected recognizer arch {meta.get('arch')!r}")
    charset = Charset(meta["chars"])
    model = Recognizer(len(charset), conv_widths=tuple(meta["conv_widths"]),
                       hidden=meta["hidden"])
    model.load_state_dict(tensors)
    model.eval()
    return model, charset


def _augment(img: torch.Tensor, rng: random.Random) -> torch.Tensor:
    out = img + 0.05 * torch.randn_like(img)
    if rng.random() < 0.5:
        out = out * rng.uniform(0.85, 1.15)
    # soft-focus augmentation: generator outputs are blurrier than renders
    if rng.random() < 0.3:
        out = F.avg_pool2d(out.unsqueeze(0), 3, stride=1, padding=1).squeeze(0)
    return out.clamp(-1, 1)


def pretrain_recognizer(crops: list[np.ndarray], texts: list[str], out_path: str,
                        charset: Charset = DEFAULT_CHARSET, steps: int = 400,
                        batch_size: int = 16, lr: float = 1e-3, seed: int = 0,
                        conv_widths: tuple[int, ...] = (32, 64, 96, 128),
                        hidden: int = 128, log=None) -> Recognizer:
    """Supervised pretraining on (crop, text) pairs; includes an EOS step.

    Crops are uint8 HxWx3 arrays of height 64; widths may vary, so batches
    are drawn per width bucket.
    """
    from .data.collate import to_unit_tensor

    if len(crops) != len(texts) or not crops:
        raise ContractViolation("crops/texts must be equal-length and non-empty")
    torch.manual_seed(seed)
    rng = random.Random(seed)
    model = Recognizer(len(charset), conv_widths=conv_widths, hidden=hidden)
    opt = torch.optim.Adam(model.parameters(), lr=lr)
    by_width: dict[int, list[int]] = {}
    for i, c in enumerate(crops):
        by_width.setdefault(c.shape[1], []).append(i)
    buckets = sorted(by_width.values(), key=len, reverse=True)
    model.train()
    for step in range(steps):
        bucket = buckets[step % len(buckets)]
        picks = [rng.choice(bucket) for _ in range(min(batch_size, len(bucket) * 2))]
        images = torch.stack([_augment(to_unit_tensor(crops[i]), rng) for i in picks])
        ids, lengths = encode_batch([texts[i] for i in picks], charset)
        # append the EOS supervision step
        lmax = ids.shape[1] + 1
        padded = torch.full((ids.shape[0], lmax), PAD, dtype=torch.long)
        padded[:, :-1] = ids
        padded[torch.arange(len(picks)), lengths] = EOS
        logits = model.forward_logits(images, padded)
        loss = F.cross_entropy(logits.reshape(-1, model.n_classes), padded.reshape(-1),
                               ignore_index=PAD)
        opt.zero_grad()
        loss.backward()
        opt.step()
        if log is not None and (step % 50 == 0 or step == steps - 1):
            log(f"recognizer step {step}: loss {loss.item():.4f}")
    model.eval()
    save_recognizer(model, charset, out_path)
    return model
