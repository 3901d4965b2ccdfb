import math

import numpy as np
import pytest

from tactilesim.channel import (
    ChannelConfig,
    ChannelState,
    ConstantDelay,
    OutOfOrderSample,
    RandomWalkDelay,
    channel_step,
)


def run_channel(cfg: ChannelConfig, inputs: np.ndarray) -> np.ndarray:
    state = ChannelState(cfg)
    return np.stack(
        [channel_step(state, cfg, inputs[n], n) for n in range(len(inputs))]
    )


class TestConfig:
    def test_scalar_variance_broadcasts(self):
        cfg = ChannelConfig(noise_variance=1e-6)
        assert cfg.noise_variance == (1e-6, 1e-6, 1e-6)

    def test_negative_variance_rejected(self):
        with pytest.raises(ValueError):
            ChannelConfig(noise_variance=(-1e-6, 0, 0))

    def test_delay_validation(self):
        with pytest.raises(ValueError):
            ConstantDelay(-1)
        with pytest.raises(ValueError):
            RandomWalkDelay(5, 3)


class TestTransparency:
    def test_identity_is_bit_exact(self):
        cfg = ChannelConfig.transparent()
        rng = np.random.default_rng(3)
        inputs = rng.uniform(-0.3, 0.3, (200, 3))
        inputs[0] = (-0.0, 0.1, -0.1)
        out = run_channel(cfg, inputs)
        assert np.array_equal(out, inputs)
        # Including the sign of zero.
        assert math.copysign(1.0, out[0, 0]) == -1.0


class TestDelay:
    def test_step_delayed_with_zero_hold(self):
        cfg = ChannelConfig(delay=ConstantDelay(3), initial_hold=(0.0, 0.0, 0.0))
        inputs = np.ones((8, 3))  # unit step at n = 0
        out = run_channel(cfg, inputs)
        expected = np.array([0, 0, 0, 1, 1, 1, 1, 1], dtype=float)
        assert np.array_equal(out[:, 0], expected)

    def test_default_hold_is_first_input(self):
        cfg = ChannelConfig(delay=ConstantDelay(3))
        inputs = np.ones((8, 3)) * 0.25
        out = run_channel(cfg, inputs)
        assert np.array_equal(out, inputs)

    def test_causality(self):
        # Output at n only depends on inputs up to n: two sequences agreeing
        # up to n produce identical outputs up to n.
        cfg = ChannelConfig(delay=RandomWalkDelay(1, 4), seed=9)
        rng = np.random.default_rng(5)
        a = rng.uniform(-1, 1, (50, 3))
        b = a.copy()
        b[30:] += 10.0
        out_a = run_channel(cfg, a)
        out_b = run_channel(cfg, b)
        assert np.array_equal(out_a[:30], out_b[:30])

    def test_random_walk_stays_bounded(self):
        cfg = ChannelConfig(delay=RandomWalkDelay(2, 6), seed=12)
        state = ChannelState(cfg)
        seen = []
        for n in range(500):
            seen.append(state.delays.copy())
            channel_step(state, cfg, (0.0, 0.0, 0.0), n)
        seen = np.stack(seen)
        assert seen.min() >= 2 and seen.max() <= 6
        assert np.abs(np.diff(seen, axis=0)).max() <= 1


class TestNoise:
    def test_deterministic_given_seed(self):
        cfg = ChannelConfig(noise_variance=1e-6, seed=42)
        rng = np.random.default_rng(7)
        inputs = rng.uniform(-1, 1, (300, 3))
        assert np.array_equal(run_channel(cfg, inputs), run_channel(cfg, inputs))

    def test_different_seeds_differ(self):
        inputs = np.zeros((100, 3))
        a = run_channel(ChannelConfig(noise_variance=1e-6, seed=1), inputs)
        b = run_channel(ChannelConfig(noise_variance=1e-6, seed=2), inputs)
        assert not np.array_equal(a, b)

    def test_statistics(self):
        sigma2 = 1e-4
        cfg = ChannelConfig(noise_variance=sigma2, seed=77)
        inputs = np.zeros((20_000, 3))
        out = run_channel(cfg, inputs)
        sigma = math.sqrt(sigma2)
        assert abs(out.mean()) <= 4 * sigma / math.sqrt(out.size)
        assert abs(out.var() - sigma2) <= 0.05 * sigma2


class TestOrdering:
    def test_out_of_order_rejected(self):
        cfg = ChannelConfig.transparent()
        state = ChannelState(cfg)
        channel_step(state, cfg, (0.0, 0.0, 0.0), 0)
        with pytest.raises(OutOfOrderSample):
            channel_step(state, cfg, (0.0, 0.0, 0.0), 2)

    def test_restart_required(self):
        cfg = ChannelConfig.transparent()
        state = ChannelState(cfg)
        channel_step(state, cfg, (1.0, 1.0, 1.0), 0)
        with pytest.raises(OutOfOrderSample):
            channel_step(state, cfg, (1.0, 1.0, 1.0), 0)
