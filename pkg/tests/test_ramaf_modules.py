"""Glimpse sensor geometry and episode invariants."""

import math

import pytest
import torch
from hypothesis import given, settings
from hypothesis import strategies as st

from lesionattn.config import RamafConfig
from lesionattn.ramaf.modules import (
    GlimpseNetwork,
    GlimpseSensor,
    PatchEncoder,
    RamafAgent,
    to_pixel,
)


def _tiny_cfg(**overrides):
    base = dict(
        num_glimpses=3,
        patch_size=8,
        enc_maps=4,
        hidden_size=16,
        loc_embed_dim=8,
        batch_size=4,
    )
    base.update(overrides)
    return RamafConfig(**base)


# ------------------------------------------------------------------- sensor


def test_to_pixel_endpoints():
    size = 32
    assert to_pixel(torch.tensor(-1.0), size).item() == 0.0
    assert to_pixel(torch.tensor(1.0), size).item() == float(size - 1)
    assert to_pixel(torch.tensor(0.0), size).item() == (size - 1) / 2.0


def test_uniform_image_gives_uniform_patches():
    sensor = GlimpseSensor(8)
    images = torch.full((1, 1, 32, 32), 0.7)
    fine, coarse = sensor.extract(images, torch.zeros(1, 2))
    assert fine.shape == (1, 1, 8, 8)
    assert coarse.shape == (1, 1, 8, 8)
    torch.testing.assert_close(fine, torch.full_like(fine, 0.7))
    torch.testing.assert_close(coarse, torch.full_like(coarse, 0.7))


def test_corner_center_reads_zero_padding():
    sensor = GlimpseSensor(8)
    images = torch.ones(1, 1, 32, 32)
    fine, coarse = sensor.extract(images, torch.tensor([[-1.0, -1.0]]))
    # fixation at pixel (0, 0): everything above/left of it is padding
    assert (fine[0, 0, :4, :] == 0.0).all()
    assert (fine[0, 0, :, :4] == 0.0).all()
    assert (fine[0, 0, 4:, 4:] == 1.0).all()
    assert coarse.min() == 0.0 and coarse.max() == 1.0


def test_interior_fine_patch_is_a_direct_crop():
    torch.manual_seed(0)
    sensor = GlimpseSensor(8)
    images = torch.rand(1, 1, 32, 32)
    center = torch.tensor([[1.0 / 31.0, 1.0 / 31.0]])  # maps to pixel (16, 16)
    fine, coarse = sensor.extract(images, center)
    torch.testing.assert_close(fine[0], images[0, :, 12:20, 12:20])
    expected_coarse = torch.nn.functional.avg_pool2d(images[:, :, 8:24, 8:24], 2)
    torch.testing.assert_close(coarse, expected_coarse)


def test_checkerboard_coarse_averages_to_half():
    sensor = GlimpseSensor(8)
    ij = torch.arange(32)
    board = ((ij[:, None] + ij[None, :]) % 2).to(torch.float32)
    images = board.reshape(1, 1, 32, 32)
    _, coarse = sensor.extract(images, torch.tensor([[1.0 / 31.0, 1.0 / 31.0]]))
    torch.testing.assert_close(coarse, torch.full_like(coarse, 0.5))


@given(
    cx=st.floats(min_value=-1.0, max_value=1.0),
    cy=st.floats(min_value=-1.0, max_value=1.0),
)
@settings(max_examples=80, deadline=None)
def test_sensor_total_and_bounded(cx, cy):
    sensor = GlimpseSensor(8)
    torch.manual_seed(1)
    images = torch.rand(1, 1, 24, 24)
    fine, coarse = sensor.extract(images, torch.tensor([[cx, cy]]))
    assert fine.shape == (1, 1, 8, 8) and coarse.shape == (1, 1, 8, 8)
    assert fine.min() >= 0.0 and fine.max() <= 1.0
    assert coarse.min() >= 0.0 and coarse.max() <= 1.0


# ------------------------------------------------------------------ encoder


def test_encoder_output_shape():
    enc = PatchEncoder(4)
    out = enc(torch.randn(3, 1, 8, 8))
    assert out.shape == (3, 4, 2, 2)


def test_encoder_forward_is_stage_composition():
    torch.manual_seed(2)
    enc = PatchEncoder(4)
    x = torch.randn(2, 1, 8, 8)
    torch.testing.assert_close(enc(x), enc.stage2(enc.stage1(x)))


# ------------------------------------------------------------- glimpse fusion


def test_glimpse_network_output_dim_and_purity():
    torch.manual_seed(3)
    net = GlimpseNetwork(_tiny_cfg())
    images = torch.rand(2, 1, 32, 32)
    centers = torch.tensor([[0.0, 0.0], [0.5, -0.25]])
    a = net(images, centers)
    b = net(images, centers)
    assert a.shape == (2, 16)
    torch.testing.assert_close(a, b)


def test_zero_image_zero_bias_depends_only_on_location():
    torch.manual_seed(4)
    net = GlimpseNetwork(_tiny_cfg())
    with torch.no_grad():
        net.encoder.conv1.bias.zero_()
        net.encoder.conv2.bias.zero_()
    images = torch.zeros(2, 1, 32, 32)
    same = net(images, torch.tensor([[0.25, 0.25], [0.25, 0.25]]))
    torch.testing.assert_close(same[0], same[1])
    different = net(images, torch.tensor([[0.25, 0.25], [-0.75, 0.5]]))
    assert not torch.allclose(different[0], different[1])


# ------------------------------------------------------------------ episodes


def test_episode_shapes_and_invariants():
    torch.manual_seed(5)
    cfg = _tiny_cfg()
    agent = RamafAgent(cfg)
    images = torch.rand(4, 1, 32, 32)
    ep = agent.run_episode(images, generator=torch.Generator().manual_seed(0))
    assert ep.logits.shape == (4, 2)
    assert ep.log_probs.shape == (4, 3)
    assert ep.centers.shape == (4, 3, 2)
    assert ep.baseline.shape == (4,)
    torch.testing.assert_close(ep.log_probs[:, 0], torch.zeros(4))
    torch.testing.assert_close(ep.centers[:, 0], torch.zeros(4, 2))
    assert ep.centers.abs().max() <= 1.0
    torch.testing.assert_close(ep.probs.sum(dim=-1), torch.ones(4))
    assert ep.hidden.abs().max() < 1.0


def test_episode_deterministic_under_seed():
    torch.manual_seed(6)
    agent = RamafAgent(_tiny_cfg())
    images = torch.rand(3, 1, 32, 32)
    a = agent.run_episode(images, generator=torch.Generator().manual_seed(9))
    b = agent.run_episode(images, generator=torch.Generator().manual_seed(9))
    torch.testing.assert_close(a.centers, b.centers)
    torch.testing.assert_close(a.log_probs, b.log_probs)
    torch.testing.assert_close(a.logits, b.logits)
    c = agent.run_episode(images, generator=torch.Generator().manual_seed(10))
    assert not torch.allclose(a.centers, c.centers)


def test_mean_path_episode_has_no_noise():
    torch.manual_seed(7)
    agent = RamafAgent(_tiny_cfg())
    images = torch.rand(2, 1, 32, 32)
    a = agent.run_episode(images, sample=False)
    b = agent.run_episode(images, sample=False)
    torch.testing.assert_close(a.centers, b.centers)
    # at the mean, each coordinate contributes the density peak
    std = agent.loc_std
    peak = 2 * (-0.5 * math.log(2 * math.pi) - math.log(std))
    torch.testing.assert_close(
        a.log_probs[:, 1:], torch.full_like(a.log_probs[:, 1:], peak)
    )


def test_single_glimpse_episode_never_moves():
    torch.manual_seed(8)
    agent = RamafAgent(_tiny_cfg(num_glimpses=1))
    ep = agent.run_episode(torch.rand(2, 1, 32, 32), generator=torch.Generator().manual_seed(0))
    assert ep.centers.shape == (2, 1, 2)
    assert ep.log_probs.shape == (2, 1)
    assert (ep.log_probs == 0.0).all()


def test_init_uniform_range_and_determinism():
    cfg = _tiny_cfg()
    a = RamafAgent(cfg)
    a.init_uniform(torch.Generator().manual_seed(1))
    for p in a.parameters():
        assert p.abs().max() <= cfg.init_range
    b = RamafAgent(cfg)
    b.init_uniform(torch.Generator().manual_seed(1))
    for pa, pb in zip(a.parameters(), b.parameters()):
        torch.testing.assert_close(pa, pb, atol=0, rtol=0)


def test_loc_std_interprets_sigma_mode():
    variance = RamafAgent(_tiny_cfg(sigma_sq=0.22, sigma_mode="variance"))
    assert variance.loc_std == pytest.approx(math.sqrt(0.22))
    stdev = RamafAgent(_tiny_cfg(sigma_sq=0.22, sigma_mode="stdev"))
    assert stdev.loc_std == pytest.approx(0.22)


def test_baseline_is_detached_from_the_policy():
    torch.manual_seed(9)
    agent = RamafAgent(_tiny_cfg())
    ep = agent.run_episode(torch.rand(2, 1, 32, 32), generator=torch.Generator().manual_seed(2))
    loss = ((ep.baseline - 1.0) ** 2).mean()
    loss.backward()
    assert agent.baseline_head.weight.grad is not None
    assert agent.baseline_head.weight.grad.abs().sum() > 0
    for name, p in agent.named_parameters():
        if not name.startswith("baseline_head"):
            assert p.grad is None or p.grad.abs().sum() == 0, name
