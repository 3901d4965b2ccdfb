"""Discrete-time channel impairment: per-component integer sample delay plus
additive Gaussian noise, with seeded, reproducible randomness.

Noise values come from ``numpy.random.Generator`` / PCG64 ``standard_normal``
draws; the noise and delay streams are derived from the configured seed via
``SeedSequence([seed, 0])`` and ``SeedSequence([seed, 1])``, so a trace is
reproducible bit for bit from the scenario file alone.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

__all__ = [
    "OutOfOrderSample",
    "ConstantDelay",
    "RandomWalkDelay",
    "ChannelConfig",
    "ChannelState",
    "channel_step",
]


class OutOfOrderSample(RuntimeError):
    """Channel stepped with a sample index that is not the expected next one."""


@dataclass(frozen=True)
class ConstantDelay:
    delay: int = 0

    def __post_init__(self) -> None:
        if self.delay < 0:
            raise ValueError("delay must be a nonnegative integer")

    @property
    def max_delay(self) -> int:
        return self.delay


@dataclass(frozen=True)
class RandomWalkDelay:
    """Bounded integer random walk: each component's delay moves by +-1 per
    sample and is clamped to [d_min, d_max]; the walk starts at d_min."""

    d_min: int
    d_max: int

    def __post_init__(self) -> None:
        if self.d_min < 0 or self.d_max < self.d_min:
            raise ValueError("need 0 <= d_min <= d_max")

    @property
    def max_delay(self) -> int:
        return self.d_max


@dataclass(frozen=True)
class ChannelConfig:
    """Noise variance per component (signal units squared), delay profile,
    RNG seed and the value emitted before the first delayed sample arrives
    (``None``: hold the n = 0 input)."""

    noise_variance: tuple[float, float, float] = (0.0, 0.0, 0.0)
    delay: ConstantDelay | RandomWalkDelay = ConstantDelay(0)
    seed: int = 0
    initial_hold: tuple[float, float, float] | None = None

    def __post_init__(self) -> None:
        nv = self.noise_variance
        if isinstance(nv, (int, float)):
            nv = (float(nv),) * 3
        else:
            nv = tuple(float(v) for v in nv)
        if len(nv) != 3:
            raise ValueError("noise_variance must be a scalar or a 3-vector")
        if any(v < 0 for v in nv):
            raise ValueError("noise variance must be nonnegative")
        object.__setattr__(self, "noise_variance", nv)
        if self.initial_hold is not None:
            hold = tuple(float(v) for v in self.initial_hold)
            if len(hold) != 3:
                raise ValueError("initial_hold must be a 3-vector")
            object.__setattr__(self, "initial_hold", hold)

    @classmethod
    def transparent(cls) -> "ChannelConfig":
        """Zero-noise, zero-delay channel (bit-exact identity)."""
        return cls()


class ChannelState:
    """Single-owner mutable state of one channel instance: the input history
    ring buffer, the per-component delays and the RNG streams."""

    def __init__(self, cfg: ChannelConfig):
        depth = cfg.delay.max_delay + 1
        self.buffer = np.zeros((depth, 3))
        self.expected_n = 0
        self.hold = None if cfg.initial_hold is None else np.asarray(cfg.initial_hold, float)
        if isinstance(cfg.delay, RandomWalkDelay):
            self.delays = np.full(3, cfg.delay.d_min, dtype=np.int64)
        else:
            self.delays = np.full(3, cfg.delay.delay, dtype=np.int64)
        self.noise_rng = np.random.default_rng(np.random.SeedSequence([cfg.seed, 0]))
        self.delay_rng = np.random.default_rng(np.random.SeedSequence([cfg.seed, 1]))


def channel_step(
    state: ChannelState,
    cfg: ChannelConfig,
    sample,
    n: int,
) -> np.ndarray:
    """Push one 3-vector sample through the channel at index ``n``.

    out_i = in_i(n - d_i(n)) + r_i(n), with r_i drawn from N(0, sigma_i^2).
    Before the first delayed sample is available the component emits the hold
    value exactly (no noise).  ``n`` must increase by one per call.
    """
    if n != state.expected_n:
        raise OutOfOrderSample(f"expected sample {state.expected_n}, got {n}")
    state.expected_n = n + 1

    x = np.asarray(sample, dtype=float)
    if x.shape != (3,):
        raise ValueError("sample must be a 3-vector")
    if state.hold is None:
        state.hold = x.copy()

    depth = state.buffer.shape[0]
    state.buffer[n % depth] = x

    sigma2 = cfg.noise_variance
    noisy = any(v > 0 for v in sigma2)
    # One draw per sample keeps the noise stream aligned with the sample index
    # regardless of delays.
    eps = state.noise_rng.standard_normal(3) if noisy else None

    out = np.empty(3)
    for i in range(3):
        k = n - int(state.delays[i])
        if k < 0:
            out[i] = state.hold[i]
        else:
            out[i] = state.buffer[k % depth, i]
            if noisy and sigma2[i] > 0:
                out[i] += eps[i] * np.sqrt(sigma2[i])

    if isinstance(cfg.delay, RandomWalkDelay):
        step = 2 * state.delay_rng.integers(0, 2, size=3) - 1
        state.delays = np.clip(state.delays + step, cfg.delay.d_min, cfg.delay.d_max)

    return out
