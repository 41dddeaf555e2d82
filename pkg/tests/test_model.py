import itertools

import pytest
import torch

from sste.config import AblationFlags, ModelConfig
from sste.errors import ContractViolation
from sste.inpaint import roi_crop
from sste.model import (EditingModel, apply_ablation, graph_signature, load_model,
                        save_model, trace_stages)

TINY = ModelConfig.tiny()

ALL_FLAGS = ("no_background_inpainting", "no_style_encoder", "no_content_encoder",
             "no_style_map_net", "no_recognizer", "no_shared_weight", "dcota", "csac")


def _inputs(b=1, w=64, seed=0):
    g = torch.Generator().manual_seed(seed)
    scene = torch.rand(b, 3, 128, 2 * w, generator=g) * 2 - 1
    mask = torch.zeros(b, 1, 128, 2 * w)
    mask[..., 30:90, 20:20 + w] = 1.0
    crop = torch.rand(b, 3, 64, w, generator=g) * 2 - 1
    c1 = torch.rand(b, 3, 64, w, generator=g) * 2 - 1
    c2 = torch.rand(b, 3, 64, w, generator=g) * 2 - 1
    bboxes = torch.tensor([[20.0, 30.0, 20.0 + w, 90.0]] * b)
    return scene, mask, crop, c1, c2, bboxes


def test_forward_pair_shapes():
    model = EditingModel(TINY)
    model.eval()
    scene, mask, crop, c1, c2, bb = _inputs(b=2, w=96)
    with torch.no_grad():
        out = model.forward_pair(scene, mask, crop, c1, c2, bb)
    assert out.g_c1.shape == (2, 3, 64, 96)
    assert out.g_c2.shape == (2, 3, 64, 96)
    assert out.background.shape == (2, 3, 64, 96)
    assert out.z.shape == (2, 512)
    assert out.codes.stack.shape == (2, 5, 2, 512)
    assert out.inpainted.shape == scene.shape


@pytest.mark.parametrize("flag", ALL_FLAGS)
def test_each_flag_builds_and_runs(flag):
    model = EditingModel(TINY, AblationFlags(**{flag: True}))
    model.eval()
    scene, mask, crop, c1, c2, bb = _inputs()
    with torch.no_grad():
        out = model.forward_pair(scene, mask, crop, c1, c2, bb)
    assert out.g_c1.shape == (1, 3, 64, 64)


def test_each_flag_changes_graph_signature():
    base = graph_signature(EditingModel(TINY))
    sigs = {graph_signature(EditingModel(TINY, AblationFlags(**{f: True})))
            for f in ALL_FLAGS}
    assert base not in sigs
    assert len(sigs) == len(ALL_FLAGS)


def test_signature_stable_across_instances():
    assert graph_signature(EditingModel(TINY)) == graph_signature(EditingModel(TINY))


def test_no_background_inpainting_uses_raw_roi():
    model = EditingModel(TINY, AblationFlags(no_background_inpainting=True))
    model.eval()
    scene, mask, crop, c1, c2, bb = _inputs()
    with torch.no_grad():
        out = model.forward_pair(scene, mask, crop, c1, c2, bb)
    expected = roi_crop(scene, bb, out_size=(64, 64))
    assert out.inpainted is None
    assert torch.equal(out.background, expected)


def test_dcota_keeps_text_pixels_in_stack():
    """dcota skips the cut-out, so scene * mask is non-zero by construction."""
    base_trace = trace_stages(EditingModel(TINY))
    dcota_trace = trace_stages(EditingModel(TINY, AblationFlags(dcota=True)))
    assert "bg.cutout" in base_trace and "bg.dcota_stack" not in base_trace
    assert "bg.dcota_stack" in dcota_trace and "bg.cutout" not in dcota_trace


def test_no_shared_weight_builds_independent_branch():
    model = EditingModel(TINY, AblationFlags(no_shared_weight=True))
    assert model.branch_c2 is not None
    a = dict(model.branch.named_parameters())
    b = dict(model.branch_c2.named_parameters())
    assert a.keys() == b.keys()
    assert any(not torch.equal(a[k], b[k]) for k in a)
    shared = EditingModel(TINY)
    assert shared.branch_c2 is None


def test_shared_weights_mean_identical_branch_outputs():
    """Same content for both branches -> identical outputs when shared."""
    model = EditingModel(TINY)
    model.eval()
    scene, mask, crop, c1, _, bb = _inputs()
    with torch.no_grad():
        out = model.forward_pair(scene, mask, crop, c1, c1, bb)
    assert torch.equal(out.g_c1, out.g_c2)


def test_constant_branch_flags_change_encoder_inputs():
    m1 = EditingModel(TINY, AblationFlags(no_style_encoder=True))
    assert m1.branch.style_encoder is None
    assert m1.branch.content_encoder.in_channels == 6
    m2 = EditingModel(TINY, AblationFlags(no_content_encoder=True))
    assert m2.branch.content_encoder is None
    assert m2.branch.style_encoder.in_channels == 6


def test_both_encoder_flags_rejected():
    with pytest.raises(Exception):
        EditingModel(TINY, AblationFlags(no_style_encoder=True,
                                         no_content_encoder=True))


def test_apply_ablation_carries_matching_weights():
    model = EditingModel(TINY)
    rewired = apply_ablation(model, AblationFlags(no_style_map_net=True))
    src = dict(model.named_parameters())
    dst = dict(rewired.named_parameters())
    key = "branch.style_encoder.stem.0.weight"
    assert torch.equal(src[key], dst[key])
    assert "branch.mapper.net.weight" in dst  # rewired to one affine


def test_checkpoint_roundtrip_bit_identical(tmp_path):
    model = EditingModel(TINY, AblationFlags(csac=True))
    model.eval()
    path = str(tmp_path / "model.pt")
    save_model(model, path, extra={"step": 7})
    loaded = load_model(path)
    assert loaded.flags.csac and loaded.cfg == model.cfg
    scene, mask, crop, c1, c2, bb = _inputs()
    with torch.no_grad():
        a = model.forward_pair(scene, mask, crop, c1, c2, bb)
        b = loaded.forward_pair(scene, mask, crop, c1, c2, bb)
    assert torch.equal(a.g_c1, b.g_c1) and torch.equal(a.g_c2, b.g_c2)
