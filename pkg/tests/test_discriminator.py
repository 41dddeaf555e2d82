import torch
from torch.nn.utils import parametrize

from sste.discriminator import PatchDiscriminator
from sste.losses import adversarial_losses


def power_iteration_sigma_max(weight: torch.Tensor, steps: int = 50) -> float:
    """Independent largest-singular-value estimate on the 2D-reshaped weight."""
    mat = weight.detach().reshape(weight.shape[0], -1).double()
    v = torch.randn(mat.shape[1], dtype=torch.float64)
    v /= v.norm()
    for _ in range(steps):
        u = mat @ v
        u /= u.norm().clamp_min(1e-12)
        v = mat.t() @ u
        v /= v.norm().clamp_min(1e-12)
    return float(u @ (mat @ v))


def _conv_weights(disc):
    return [(name, m.weight) for name, m in disc.named_modules()
            if isinstance(m, torch.nn.Conv2d)]


def test_output_is_patch_logit_map():
    disc = PatchDiscriminator(widths=(8, 12, 16))
    out = disc(torch.randn(2, 3, 64, 96))
    assert out.shape[0] == 2 and out.shape[1] == 1
    assert out.shape[2] > 1 and out.shape[3] > 1  # patch map, not a scalar


def test_every_conv_weight_is_spectrally_normalized():
    disc = PatchDiscriminator(widths=(8, 12, 16))
    convs = [(n, m) for n, m in disc.named_modules()
             if isinstance(m, torch.nn.Conv2d)]
    assert len(convs) == 5
    for name, m in convs:
        assert parametrize.is_parametrized(m, "weight"), \
            f"{name} escaped spectral norm"


def test_spectral_norm_bound_after_training():
    torch.manual_seed(0)
    disc = PatchDiscriminator(widths=(8, 12, 16))
    opt = torch.optim.RMSprop(disc.parameters(), lr=1e-3)
    disc.train()
    for _ in range(100):
        real = torch.rand(4, 3, 64, 64) * 2 - 1
        fake = torch.rand(4, 3, 64, 64) * 2 - 1
        d_loss, _ = adversarial_losses(disc(real), disc(fake))
        opt.zero_grad()
        (-d_loss).backward()
        opt.step()
    disc.eval()
    with torch.no_grad():
        disc(torch.zeros(1, 3, 64, 64))  # settle the power-iteration buffers
        for name, weight in _conv_weights(disc):
            sigma = power_iteration_sigma_max(weight, steps=50)
            assert sigma <= 1.0 + 1e-2, f"{name}: sigma {sigma:.4f}"


def test_gradients_flow_to_input():
    disc = PatchDiscriminator(widths=(8, 12, 16))
    x = torch.randn(1, 3, 64, 64, requires_grad=True)
    disc(x).sum().backward()
    assert x.grad.abs().sum() > 0
