import time

import numpy as np
import pytest
import torch

import oracles
from artbrain.attention import (
    ChannelAttention,
    ConcatBlock,
    ChannelImportance,
    channel_importance,
    concat_taps,
    global_average_pool,
    weight_channels,
)
from artbrain.backbone import FeatureTaps
from artbrain.errors import AlignmentError, ConfigurationError


def _random_taps(rng, channels=(8, 16, 32), sides=(8, 8, 4)):
    return FeatureTaps(
        low=torch.from_numpy(rng.standard_normal((1, channels[0], sides[0], sides[0]))).float(),
        mid=torch.from_numpy(rng.standard_normal((1, channels[1], sides[1], sides[1]))).float(),
        high=torch.from_numpy(rng.standard_normal((1, channels[2], sides[2], sides[2]))).float(),
    )


def test_concat_channel_count_and_order(rng):
    taps = _random_taps(rng)
    block = concat_taps(taps, align_side=4)
    assert block.data.shape == (1, 56, 4, 4)
    assert block.channel_origins == ("low",) * 8 + ("mid",) * 16 + ("high",) * 32


def test_concat_one_by_one_blocks_ordering():
    taps = FeatureTaps(
        low=torch.full((1, 1, 1, 1), 1.0),
        mid=torch.full((1, 1, 1, 1), 2.0),
        high=torch.full((1, 1, 1, 1), 3.0),
    )
    block = concat_taps(taps)
    assert block.data[0, :, 0, 0].tolist() == [1.0, 2.0, 3.0]


def test_concat_pooling_matches_mean_pool_oracle(rng):
    taps = _random_taps(rng, sides=(8, 8, 4))
    block = concat_taps(taps, align_side=4)
    low = taps.low[0].numpy().astype(np.float64)
    expected = oracles.adaptive_avg_pool(low, 4)
    np.testing.assert_allclose(block.data[0, :8].numpy(), expected, atol=1e-6)


def test_concat_refuses_upsampling(rng):
    taps = _random_taps(rng, sides=(8, 8, 4))
    with pytest.raises(AlignmentError):
        concat_taps(taps, align_side=8)  # high tap is only 4 wide


def test_global_average_pool_examples(rng):
    constant = ConcatBlock(data=torch.full((1, 3, 5, 5), 2.25), channel_origins=("low",) * 3)
    np.testing.assert_allclose(global_average_pool(constant).numpy(), [[2.25] * 3])

    quad = torch.tensor([[[[1.0, 2.0], [3.0, 4.0]]]])
    assert global_average_pool(quad).item() == pytest.approx(2.5)

    block = torch.from_numpy(rng.standard_normal((1, 3, 5, 7)))
    pooled = global_average_pool(block)[0].numpy()
    for c in range(3):
        total = 0.0
        for i in range(5):
            for j in range(7):
                total += float(block[0, c, i, j])
        assert pooled[c] == pytest.approx(total / 35, abs=1e-6)


def test_importance_zero_weights_give_half():
    pooled = torch.randn(1, 8, generator=torch.Generator().manual_seed(0))
    omega = channel_importance(pooled, torch.zeros(2, 8), torch.zeros(8, 2))
    np.testing.assert_allclose(omega.numpy(), np.full((1, 8), 0.5))


def test_importance_hand_sized_matrices_match_oracle(rng):
    pooled = rng.standard_normal(4)
    w1 = rng.standard_normal((2, 4))
    w2 = rng.standard_normal((4, 2))
    got = channel_importance(pooled, w1, w2).numpy()
    expected = oracles.attention_importance(pooled, w1, w2)
    np.testing.assert_allclose(got, expected, atol=1e-6)


def test_importance_range_and_shape_errors(rng):
    pooled = rng.standard_normal(8)
    w1 = rng.standard_normal((2, 8))
    w2 = rng.standard_normal((8, 2))
    omega = channel_importance(pooled, w1, w2).numpy()
    assert np.all((omega > 0) & (omega < 1))
    with pytest.raises(ConfigurationError):
        channel_importance(pooled, rng.standard_normal((2, 7)), w2)
    with pytest.raises(ConfigurationError):
        channel_importance(pooled, w1, rng.standard_normal((7, 2)))


def test_channel_importance_type_enforces_open_interval():
    with pytest.raises(ConfigurationError):
        ChannelImportance(omega=np.array([0.0, 0.5]), reduction_factor=4)
    with pytest.raises(ConfigurationError):
        ChannelImportance(omega=np.array([0.5, 1.0]), reduction_factor=4)
    ChannelImportance(omega=np.array([0.1, 0.9]), reduction_factor=4)


def test_weight_channels_identity_and_annihilation(rng):
    block = torch.from_numpy(rng.standard_normal((1, 6, 3, 3))).float()
    np.testing.assert_allclose(
        weight_channels(block, torch.ones(6)).numpy(), block.numpy()
    )
    assert weight_channels(block, torch.zeros(6)).abs().max().item() == 0.0


def test_weight_channels_matches_scalar_loop_oracle(rng):
    block = rng.standard_normal((5, 3, 4))
    omega = rng.uniform(0.05, 0.95, size=5)
    got = weight_channels(torch.from_numpy(block[None]).float(), omega)[0].numpy()
    expected = oracles.attention_weight(block, omega)
    np.testing.assert_allclose(got, expected, atol=1e-7)
    with pytest.raises(ConfigurationError):
        weight_channels(torch.from_numpy(block[None]).float(), omega[:4])


def test_weight_channels_linearity(rng):
    block = torch.from_numpy(rng.standard_normal((1, 6, 4, 4))).float()
    omega = torch.from_numpy(rng.uniform(0.1, 0.9, size=6)).float()
    a = weight_channels(3.0 * block, omega)
    b = 3.0 * weight_channels(block, omega)
    np.testing.assert_allclose(a.numpy(), b.numpy(), atol=1e-6)


def test_full_module_matches_straight_line_oracle_100_instances():
    # full path (pool -> importance -> reweighting) vs explicit loops; the
    # composition bound is 1e-5 per element over 100 random instances
    rng = np.random.default_rng(42)
    start = time.monotonic()
    for _ in range(100):
        channels = int(rng.integers(1, 15)) * 4  # divisible by the reduction, <= 56
        side = int(rng.integers(1, 9))
        module = ChannelAttention(channels, reduction=4)
        with torch.no_grad():
            block = torch.from_numpy(rng.standard_normal((1, channels, side, side))).float()
            got = module(block)[0].numpy()
            pooled_t = global_average_pool(block)
            omega_t = module.importance(pooled_t)
        pooled, omega, weighted = oracles.attention_full(
            block[0].numpy().astype(np.float64),
            module.w1.detach().numpy().astype(np.float64),
            module.w2.detach().numpy().astype(np.float64),
        )
        np.testing.assert_allclose(pooled_t[0].numpy(), pooled, atol=1e-5)
        np.testing.assert_allclose(omega_t[0].numpy(), omega, atol=1e-5)
        np.testing.assert_allclose(got, weighted, atol=1e-5)
    assert time.monotonic() - start < 10.0


def test_channel_permutation_equivariance(rng):
    channels, side = 8, 3
    module = ChannelAttention(channels, reduction=4)
    block = torch.from_numpy(rng.standard_normal((1, channels, side, side))).float()
    with torch.no_grad():
        omega = module.importance(global_average_pool(block))[0].numpy()

    perm = rng.permutation(channels)
    permuted_block = block[:, perm]
    permuted = ChannelAttention(channels, reduction=4)
    with torch.no_grad():
        # permute W1 columns with the channels; W2 rows map back to channels
        permuted.w1.copy_(module.w1[:, perm])
        permuted.w2.copy_(module.w2[perm])
        omega_p = permuted.importance(global_average_pool(permuted_block))[0].numpy()
    np.testing.assert_allclose(omega_p, omega[perm], atol=1e-6)


def test_attention_gradients_match_finite_differences(rng):
    # scalar loss through pool -> importance -> reweight, 64-bit, eps 1e-3
    for trial in range(5):
        channels = int(rng.integers(1, 5)) * 4  # <= 16
        side = int(rng.integers(1, 5))
        module = ChannelAttention(channels, reduction=4).double()
        block0 = rng.standard_normal((1, channels, side, side))
        proj = rng.standard_normal((channels, side, side))

        def loss_torch(block_np):
            block = torch.from_numpy(block_np).double().requires_grad_(True)
            out = module(block)
            value = (out[0] * torch.from_numpy(proj).double()).sum()
            return block, value

        block, value = loss_torch(block0)
        value.backward()
        analytic = block.grad[0].numpy()

        def f(x):
            with torch.no_grad():
                out = module(torch.from_numpy(x[None]).double())
                return float((out[0] * torch.from_numpy(proj).double()).sum())

        numeric = oracles.central_difference(f, block0[0], eps=1e-3)
        denom = np.maximum(np.abs(numeric), 1e-6)
        assert np.max(np.abs(analytic - numeric) / denom) < 1e-4


def test_reduction_must_divide_channels():
    with pytest.raises(ConfigurationError):
        ChannelAttention(10, reduction=4)
    with pytest.raises(ConfigurationError):
        ChannelAttention(8, reduction=0)
