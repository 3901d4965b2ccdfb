"""Hybrid number system: signed Q-format values, float conversions and a
fixed-point CORDIC kernel for sin/cos, atan2 and acos, plus a single-precision
square root.

The trig functions mirror a hardware trigonometric function block (TFB): a
float32 operand is quantized to fixed point (F2FP), rotated by the integer
CORDIC datapath and converted back to float32 (FP2F).  All other arithmetic in
the surrounding circuits stays in 32-bit floats; see `tfb_sincos` and friends
for the float32-facing composites.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np

__all__ = [
    "NegativeRadicand",
    "QFormat",
    "FixedValue",
    "CordicConfig",
    "S16_13",
    "DEFAULT_CORDIC",
    "float_to_fixed",
    "fixed_to_float",
    "cordic_sincos",
    "cordic_atan2",
    "cordic_acos",
    "sqrt32",
    "tfb_sincos",
    "tfb_atan2",
    "tfb_acos",
]

# Extra fractional bits carried inside the CORDIC datapath.  The I/O format
# stays at the configured Q-format; the internal registers are wider so that
# shift rounding noise stays below the output resolution.
_GUARD_BITS = 6

_QFORMAT_RE = re.compile(r"^s(\d+)\.(\d+)$")


class NegativeRadicand(ValueError):
    """Square root requested for a negative operand."""


@dataclass(frozen=True)
class QFormat:
    """Signed fixed-point format with ``total_bits`` bits, ``frac_bits`` of
    which are fractional (written ``s<total>.<frac>``, e.g. ``s16.13``)."""

    total_bits: int
    frac_bits: int
    signed: bool = True

    def __post_init__(self) -> None:
        if not self.signed:
            raise ValueError("only signed formats are supported")
        if not 2 <= self.total_bits <= 64:
            raise ValueError(f"total_bits must be in [2, 64], got {self.total_bits}")
        if not 0 <= self.frac_bits <= self.total_bits - 1:
            raise ValueError(
                f"frac_bits must be in [0, {self.total_bits - 1}], got {self.frac_bits}"
            )

    @property
    def scale(self) -> int:
        return 1 << self.frac_bits

    @property
    def raw_min(self) -> int:
        return -(1 << (self.total_bits - 1))

    @property
    def raw_max(self) -> int:
        return (1 << (self.total_bits - 1)) - 1

    @property
    def min_value(self) -> float:
        return self.raw_min / self.scale

    @property
    def max_value(self) -> float:
        return self.raw_max / self.scale

    @property
    def resolution(self) -> float:
        """Value of one least significant bit."""
        return 1.0 / self.scale

    @classmethod
    def from_string(cls, text: str) -> "QFormat":
        m = _QFORMAT_RE.match(text.strip())
        if m is None:
            raise ValueError(f"not a Q-format string: {text!r} (expected e.g. 's16.13')")
        return cls(int(m.group(1)), int(m.group(2)))

    def __str__(self) -> str:
        return f"s{self.total_bits}.{self.frac_bits}"


S16_13 = QFormat(16, 13)


@dataclass(frozen=True)
class FixedValue:
    """A sample in a signed Q-format: integer ``raw`` scaled by 2**-frac_bits."""

    raw: int
    fmt: QFormat

    def __post_init__(self) -> None:
        if not self.fmt.raw_min <= self.raw <= self.fmt.raw_max:
            raise ValueError(
                f"raw {self.raw} outside {self.fmt} range "
                f"[{self.fmt.raw_min}, {self.fmt.raw_max}]"
            )

    @property
    def value(self) -> float:
        return self.raw / self.fmt.scale


def _cordic_gain(iterations: int) -> float:
    return math.prod(1.0 / math.sqrt(1.0 + 2.0 ** (-2 * i)) for i in range(iterations))


@dataclass(frozen=True)
class CordicConfig:
    """Rotation count, operand format and the precomputed gain compensation of
    the CORDIC datapath."""

    iterations: int = 16
    fmt: QFormat = S16_13
    gain_compensation: float = field(default=math.nan)

    def __post_init__(self) -> None:
        if self.iterations < 1:
            raise ValueError(f"iterations must be >= 1, got {self.iterations}")
        exact = _cordic_gain(self.iterations)
        if math.isnan(self.gain_compensation):
            object.__setattr__(self, "gain_compensation", exact)
        elif abs(self.gain_compensation - exact) > self.fmt.resolution:
            raise ValueError(
                f"gain_compensation {self.gain_compensation} differs from "
                f"{exact} by more than one LSB of {self.fmt}"
            )


DEFAULT_CORDIC = CordicConfig()


def float_to_fixed(x: float, fmt: QFormat, rounding: str = "nearest") -> FixedValue:
    """Quantize ``x`` to ``fmt`` with saturation instead of overflow.

    ``rounding`` is ``"nearest"`` (round to nearest, ties to even; the F2FP
    default) or ``"truncate"`` (two's-complement bit truncation, i.e. floor).
    """
    x = float(x)
    if math.isnan(x):
        raise ValueError("cannot quantize NaN")
    scaled = x * fmt.scale
    if rounding == "nearest":
        if math.isinf(scaled):
            raw = fmt.raw_max if scaled > 0 else fmt.raw_min
        else:
            raw = round(scaled)
    elif rounding == "truncate":
        if math.isinf(scaled):
            raw = fmt.raw_max if scaled > 0 else fmt.raw_min
        else:
            raw = math.floor(scaled)
    else:
        raise ValueError(f"unknown rounding mode {rounding!r}")
    raw = min(max(raw, fmt.raw_min), fmt.raw_max)
    return FixedValue(raw, fmt)


def fixed_to_float(v: FixedValue) -> float:
    """Exact real value of ``v`` (raw / 2**frac_bits)."""
    return v.raw / v.fmt.scale


@lru_cache(maxsize=16)
def _kernel_constants(iterations: int, frac_bits: int):
    """Integer constants of the CORDIC datapath at working precision."""
    work = frac_bits + _GUARD_BITS
    one = 1 << work
    atan_table = tuple(round(math.atan(2.0 ** -i) * one) for i in range(iterations))
    x0 = round(_cordic_gain(iterations) * one)
    pi_io = round(math.pi * (1 << frac_bits))
    half_pi_io = round(math.pi / 2 * (1 << frac_bits))
    return atan_table, x0, pi_io, half_pi_io


def _round_shift(v: int, bits: int) -> int:
    """Arithmetic right shift with rounding to nearest."""
    if bits == 0:
        return v
    return (v + (1 << (bits - 1))) >> bits


def _rotate(z: int, iterations: int, atan_table, x0: int) -> tuple[int, int]:
    """Rotation-mode CORDIC: drive the residual angle ``z`` (working-precision
    raw, in [0, pi/2]) to zero; returns (cos, sin) at working precision."""
    x = x0
    y = 0
    for i, a in enumerate(atan_table):
        if z >= 0:
            x, y = x - _round_shift(y, i), y + _round_shift(x, i)
            z -= a
        else:
            x, y = x + _round_shift(y, i), y - _round_shift(x, i)
            z += a
    return x, y


def _vector_angle(xr: int, yr: int, iterations: int, atan_table) -> int:
    """Vectoring-mode CORDIC: rotate (xr, yr) with xr > 0, yr >= 0 onto the
    positive x axis; returns the accumulated angle at working precision."""
    x = xr << _GUARD_BITS
    y = yr << _GUARD_BITS
    z = 0
    for i, a in enumerate(atan_table):
        if y > 0:
            x, y = x + _round_shift(y, i), y - _round_shift(x, i)
            z += a
        else:
            x, y = x - _round_shift(y, i), y + _round_shift(x, i)
            z -= a
    return z


def cordic_sincos(angle: FixedValue, cfg: CordicConfig = DEFAULT_CORDIC) -> tuple[FixedValue, FixedValue]:
    """Fixed-point sine and cosine.

    The angle is reduced to the first quadrant before rotation; sign symmetry
    is applied on the outputs, so ``sincos(-a)`` mirrors ``sincos(a)`` exactly
    at the raw level.  With the default 16-iteration configuration the error
    stays within 4 LSB of the output format.
    """
    fmt = cfg.fmt
    if angle.fmt != fmt:
        raise ValueError(f"angle format {angle.fmt} does not match config {fmt}")
    atan_table, x0, pi_io, half_pi_io = _kernel_constants(cfg.iterations, fmt.frac_bits)

    raw = angle.raw
    two_pi = 2 * pi_io
    while raw > pi_io:
        raw -= two_pi
    while raw < -pi_io:
        raw += two_pi

    sign_sin = 1
    if raw < 0:
        raw = -raw
        sign_sin = -1
    sign_cos = 1
    if raw > half_pi_io:
        raw = pi_io - raw
        sign_cos = -1

    cos_w, sin_w = _rotate(raw << _GUARD_BITS, cfg.iterations, atan_table, x0)
    sin_raw = _round_shift(sin_w, _GUARD_BITS)
    cos_raw = _round_shift(cos_w, _GUARD_BITS)
    sin_raw = min(max(sin_raw, fmt.raw_min), fmt.raw_max)
    cos_raw = min(max(cos_raw, fmt.raw_min), fmt.raw_max)
    return (
        FixedValue(sign_sin * sin_raw, fmt),
        FixedValue(sign_cos * cos_raw, fmt),
    )


def cordic_atan2(y: FixedValue, x: FixedValue, cfg: CordicConfig = DEFAULT_CORDIC) -> FixedValue:
    """Fixed-point four-quadrant arctangent via vectoring-mode CORDIC.

    The result lies in (-pi, pi] at the resolution of the format; (0, 0) maps
    to 0 by convention.  Accuracy degrades for operands only a few LSB in
    magnitude, as in the hardware, where the datapath resolution limits the
    representable direction of short vectors.
    """
    fmt = cfg.fmt
    if y.fmt != fmt or x.fmt != fmt:
        raise ValueError("operand formats do not match the CORDIC config")
    atan_table, _x0, pi_io, half_pi_io = _kernel_constants(cfg.iterations, fmt.frac_bits)

    xr = x.raw
    yr = y.raw
    sign = 1
    if yr < 0:
        yr = -yr
        sign = -1

    if xr == 0 and yr == 0:
        return FixedValue(0, fmt)
    if yr == 0:
        return FixedValue(0 if xr > 0 else pi_io, fmt)
    if xr == 0:
        return FixedValue(sign * half_pi_io, fmt)

    if xr > 0:
        ang = _round_shift(_vector_angle(xr, yr, cfg.iterations, atan_table), _GUARD_BITS)
    else:
        ang = pi_io - _round_shift(
            _vector_angle(-xr, yr, cfg.iterations, atan_table), _GUARD_BITS
        )
    return FixedValue(sign * ang, fmt)


def cordic_acos(t: FixedValue, cfg: CordicConfig = DEFAULT_CORDIC) -> FixedValue:
    """Fixed-point arccosine as atan2(sqrt(1 - t^2), t).

    The operand is clamped to [-1, 1]; the result lies in [0, pi].  Error can
    exceed the atan2 envelope near |t| = 1 where the square-root slope
    amplifies the operand quantization.
    """
    fmt = cfg.fmt
    if t.fmt != fmt:
        raise ValueError(f"operand format {t.fmt} does not match config {fmt}")
    one = fmt.scale
    raw = min(max(t.raw, -one), one)
    t = FixedValue(raw, fmt)
    tf = np.float32(t.value)
    s = sqrt32(np.float32(1.0) - tf * tf)
    s_fix = float_to_fixed(float(s), fmt)
    return cordic_atan2(s_fix, t, cfg)


def sqrt32(x) -> np.float32:
    """Correctly rounded single-precision square root."""
    xf = np.float32(x)
    if xf < 0:
        raise NegativeRadicand(f"sqrt of negative value {x!r}")
    return np.float32(np.sqrt(xf))


def tfb_sincos(angle, cfg: CordicConfig = DEFAULT_CORDIC) -> tuple[np.float32, np.float32]:
    """Float32-facing TFB: F2FP, CORDIC rotation, FP2F on both outputs."""
    a = float_to_fixed(float(angle), cfg.fmt)
    s, c = cordic_sincos(a, cfg)
    return np.float32(fixed_to_float(s)), np.float32(fixed_to_float(c))


def tfb_atan2(y, x, cfg: CordicConfig = DEFAULT_CORDIC) -> np.float32:
    """Float32-facing TFB for the four-quadrant arctangent.

    The operand pair is scaled by a common power of two so the larger
    magnitude lands in [1, 2) before quantization.  The scaling is exact in
    float32 and the arctangent is invariant under it, so this input
    conditioning makes the angular resolution independent of the operand
    magnitude.
    """
    yf = np.float32(y)
    xf = np.float32(x)
    m = max(abs(float(yf)), abs(float(xf)))
    if m > 0.0:
        scale = np.float32(2.0 ** (1 - math.frexp(m)[1]))
        yf = yf * scale
        xf = xf * scale
    y_fix = float_to_fixed(float(yf), cfg.fmt)
    x_fix = float_to_fixed(float(xf), cfg.fmt)
    return np.float32(fixed_to_float(cordic_atan2(y_fix, x_fix, cfg)))


def tfb_acos(t, cfg: CordicConfig = DEFAULT_CORDIC) -> np.float32:
    """Float32-facing TFB for the arccosine: sqrt(1 - t^2) in the float32
    domain, then the vectoring stage on (sqrt, t).

    Quantization happens after the square root, on the two vectoring
    operands; in that form the angle is well conditioned, whereas quantizing
    ``t`` before the square root would amplify the grid error near |t| = 1.
    """
    tf = min(max(np.float32(t), np.float32(-1.0)), np.float32(1.0))
    s = sqrt32(np.float32(1.0) - tf * tf)
    s_fix = float_to_fixed(float(s), cfg.fmt)
    t_fix = float_to_fixed(float(tf), cfg.fmt)
    return np.float32(fixed_to_float(cordic_atan2(s_fix, t_fix, cfg)))
