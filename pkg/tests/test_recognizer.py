import numpy as np
import pytest
import torch

from sste.data.collate import to_unit_tensor
from sste.errors import ConfigurationError, ContractViolation
from sste.recognizer import (DEFAULT_CHARSET, EOS, GO, N_SPECIALS, PAD, Charset,
                             Recognizer, encode_batch, load_recognizer,
                             pretrain_recognizer)


def test_charset_roundtrip():
    cs = Charset("abc")
    assert len(cs) == N_SPECIALS + 3
    ids = cs.encode("cab")
    assert ids == [N_SPECIALS + 2, N_SPECIALS + 0, N_SPECIALS + 1]
    assert cs.decode(ids) == "cab"


def test_charset_decode_stops_at_eos_and_skips_specials():
    cs = Charset("xyz")
    seq = [N_SPECIALS, GO, N_SPECIALS + 1, EOS, N_SPECIALS + 2]
    assert cs.decode(seq) == "xy"


def test_charset_rejects_unknown_char_and_duplicates():
    cs = Charset("abc")
    with pytest.raises(ContractViolation):
        cs.encode("abd")
    with pytest.raises(ConfigurationError):
        Charset("aab")


def test_charset_file_roundtrip(tmp_path):
    path = str(tmp_path / "charset.json")
    DEFAULT_CHARSET.save(path)
    assert Charset.load(path).chars == DEFAULT_CHARSET.chars
    with pytest.raises(ConfigurationError):
        Charset.load(str(tmp_path / "missing.json"))


def test_encode_batch_pads_and_reports_lengths():
    ids, lengths = encode_batch(["ab", "abcd"], Charset("abcd"))
    assert ids.shape == (2, 4)
    assert lengths.tolist() == [2, 4]
    assert ids[0, 2:].tolist() == [PAD, PAD]


def test_forward_logits_one_step_per_target_position():
    model = Recognizer(len(DEFAULT_CHARSET), conv_widths=(8, 12, 16, 24), hidden=32)
    images = torch.rand(3, 3, 64, 96) * 2 - 1
    targets, _ = encode_batch(["cat", "dog", "ox"], DEFAULT_CHARSET)
    logits = model.forward_logits(images, targets)
    assert logits.shape == (3, targets.shape[1], len(DEFAULT_CHARSET))


def test_rejects_wrong_crop_height():
    model = Recognizer(10, conv_widths=(8, 12, 16, 24), hidden=32)
    with pytest.raises(ContractViolation):
        model.forward_logits(torch.rand(1, 3, 32, 64),
                             torch.zeros(1, 2, dtype=torch.long))


def test_decode_terminates():
    model = Recognizer(len(DEFAULT_CHARSET), conv_widths=(8, 12, 16, 24), hidden=32)
    seqs = model.decode(torch.rand(2, 3, 64, 64) * 2 - 1, max_len=7)
    assert len(seqs) == 2 and all(len(s) <= 7 for s in seqs)


def _distinct_crops():
    """Four visually distinct 64x64 'glyph' crops with fake labels."""
    rng = np.random.default_rng(0)
    crops, texts = [], []
    for i, word in enumerate(["ab", "cd", "ef", "gh"]):
        img = np.full((64, 64, 3), 200, dtype=np.uint8)
        img[8 + 10 * i:20 + 10 * i, 5:60] = 20 + 40 * i
        img[40:50, 10 * i + 2:10 * i + 30] = 255 - 30 * i
        crops.append(img + rng.integers(0, 5, img.shape, dtype=np.uint8))
        texts.append(word)
    return crops, texts


def test_pretraining_overfits_tiny_set(tmp_path):
    crops, texts = _distinct_crops()
    path = str(tmp_path / "rec.pt")
    model = pretrain_recognizer(crops, texts, path, steps=150, batch_size=8,
                                lr=2e-3, seed=0, conv_widths=(8, 12, 16, 24),
                                hidden=48)
    images = torch.stack([to_unit_tensor(c) for c in crops])
    assert model.read_texts(images, DEFAULT_CHARSET) == texts


def test_checkpoint_roundtrip_bit_identical(tmp_path):
    crops, texts = _distinct_crops()
    path = str(tmp_path / "rec.pt")
    model = pretrain_recognizer(crops, texts, path, steps=2, batch_size=4,
                                seed=1, conv_widths=(8, 12, 16, 24), hidden=32)
    loaded, charset = load_recognizer(path)
    assert charset.chars == DEFAULT_CHARSET.chars
    images = torch.stack([to_unit_tensor(c) for c in crops])
    targets, _ = encode_batch(texts, charset)
    with torch.no_grad():
        a = model.forward_logits(images, targets)
        b = loaded.forward_logits(images, targets)
    assert torch.equal(a, b)


def test_pretrain_rejects_mismatched_inputs(tmp_path):
    with pytest.raises(ContractViolation):
        pretrain_recognizer([np.zeros((64, 64, 3), np.uint8)], ["a", "b"],
                            str(tmp_path / "x.pt"))
