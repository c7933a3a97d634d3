"""Two-branch network shapes and output ranges."""

import pytest
import torch

from lesionattn.conaf.network import (
    ClassifierHead,
    ConafNet,
    FeatureExtractor,
    LocalizerHead,
)


def test_feature_shapes_desk_default():
    torch.manual_seed(0)
    net = FeatureExtractor((16, 32, 64, 128))
    out = net(torch.randn(2, 1, 128, 128))
    assert out.shape == (2, 128, 8, 8)
    assert net.downsample_factor == 16
    assert torch.isfinite(out).all()


def test_feature_shapes_scale_with_blocks():
    torch.manual_seed(0)
    net = FeatureExtractor((2, 3), convs_per_block=1)
    assert net.downsample_factor == 4
    assert net(torch.randn(1, 1, 16, 16)).shape == (1, 3, 4, 4)


def test_feature_extractor_rejects_bad_input():
    net = FeatureExtractor((4, 8))
    with pytest.raises(ValueError, match="not divisible"):
        net(torch.randn(1, 1, 18, 16))
    with pytest.raises(ValueError, match="input channels"):
        net(torch.randn(1, 3, 16, 16))
    with pytest.raises(ValueError, match="block width"):
        FeatureExtractor(())


def test_zero_input_zero_bias_gives_zero_features():
    torch.manual_seed(1)
    net = FeatureExtractor((8, 16))
    with torch.no_grad():
        for module in net.modules():
            if isinstance(module, torch.nn.Conv2d):
                module.bias.zero_()
    out = net(torch.zeros(1, 1, 32, 32))
    assert (out == 0.0).all()


def test_classifier_outputs_probabilities():
    torch.manual_seed(2)
    head = ClassifierHead(32)
    probs = head(torch.randn(5, 32, 4, 4))
    assert probs.shape == (5, 2)
    assert (probs >= 0).all()
    torch.testing.assert_close(probs.sum(dim=-1), torch.ones(5), atol=1e-6, rtol=0)


def test_classifier_zero_weights_is_coin_flip():
    head = ClassifierHead(16)
    with torch.no_grad():
        for p in head.parameters():
            p.zero_()
    probs = head(torch.randn(3, 16, 2, 2))
    torch.testing.assert_close(probs, torch.full((3, 2), 0.5), atol=1e-7, rtol=0)


def test_classifier_channel_halving():
    head = ClassifierHead(64)
    assert head.fc1.out_features == 32
    assert head.fc2.out_features == 2


def test_localizer_outputs_unit_interval_map():
    torch.manual_seed(3)
    head = LocalizerHead(32)
    scoremap = head(torch.randn(4, 32, 6, 6) * 5)
    assert scoremap.shape == (4, 6, 6)
    assert scoremap.min() >= 0.0
    assert scoremap.max() <= 1.0


def test_localizer_zero_weights_is_half():
    head = LocalizerHead(8)
    with torch.no_grad():
        for p in head.parameters():
            p.zero_()
    scoremap = head(torch.randn(2, 8, 3, 3))
    torch.testing.assert_close(scoremap, torch.full((2, 3, 3), 0.5), atol=1e-7, rtol=0)


def test_full_network_forward():
    torch.manual_seed(4)
    net = ConafNet(channels=(8, 16, 32, 64), convs_per_block=1)
    probs, scoremap = net(torch.randn(3, 1, 96, 96))
    assert probs.shape == (3, 2)
    assert scoremap.shape == (3, 6, 6)
    assert net.downsample_factor == 16
    torch.testing.assert_close(probs.sum(dim=-1), torch.ones(3), atol=1e-6, rtol=0)
    assert scoremap.min() >= 0.0 and scoremap.max() <= 1.0


def test_network_init_is_seed_deterministic():
    torch.manual_seed(7)
    a = ConafNet(channels=(4, 8), convs_per_block=1)
    torch.manual_seed(7)
    b = ConafNet(channels=(4, 8), convs_per_block=1)
    for pa, pb in zip(a.parameters(), b.parameters()):
        torch.testing.assert_close(pa, pb, atol=0, rtol=0)


def test_branches_share_the_trunk():
    net = ConafNet(channels=(4, 8), convs_per_block=1)
    trunk_params = {id(p) for p in net.features.parameters()}
    assert trunk_params
    head_params = {id(p) for p in net.classifier.parameters()}
    head_params |= {id(p) for p in net.localizer.parameters()}
    assert not trunk_params & head_params
    x = torch.randn(1, 1, 32, 32)
    probs, scoremap = net(x)
    loss = probs.sum() + scoremap.sum()
    loss.backward()
    assert all(p.grad is not None for p in net.features.parameters())
