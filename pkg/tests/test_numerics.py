import math

import numpy as np
import pytest

from tactilesim.numerics import (
    CordicConfig,
    FixedValue,
    NegativeRadicand,
    QFormat,
    S16_13,
    cordic_acos,
    cordic_atan2,
    cordic_sincos,
    fixed_to_float,
    float_to_fixed,
    sqrt32,
    tfb_acos,
    tfb_atan2,
    tfb_sincos,
)

LSB = 2.0 ** -13


class TestQFormat:
    def test_string_round_trip(self):
        fmt = QFormat.from_string("s16.13")
        assert fmt == S16_13
        assert str(fmt) == "s16.13"
        assert QFormat.from_string("s32.21") == QFormat(32, 21)

    @pytest.mark.parametrize("text", ["16.13", "u16.13", "s16", "s16.13.2", "s-1.0"])
    def test_bad_strings(self, text):
        with pytest.raises(ValueError):
            QFormat.from_string(text)

    def test_invariants(self):
        with pytest.raises(ValueError):
            QFormat(1, 0)
        with pytest.raises(ValueError):
            QFormat(65, 13)
        with pytest.raises(ValueError):
            QFormat(16, 16)
        with pytest.raises(ValueError):
            QFormat(16, -1)
        with pytest.raises(ValueError):
            QFormat(16, 13, signed=False)

    def test_range(self):
        assert S16_13.raw_max == 32767
        assert S16_13.raw_min == -32768
        assert S16_13.max_value == 32767 / 8192
        assert S16_13.min_value == -4.0
        assert S16_13.resolution == LSB


class TestFixedValue:
    def test_value(self):
        assert FixedValue(8192, S16_13).value == 1.0
        assert FixedValue(-8192, S16_13).value == -1.0
        assert FixedValue(1, S16_13).value == LSB

    def test_raw_range_checked(self):
        with pytest.raises(ValueError):
            FixedValue(32768, S16_13)
        with pytest.raises(ValueError):
            FixedValue(-32769, S16_13)


class TestConversions:
    def test_float_to_fixed_examples(self):
        assert float_to_fixed(1.0, S16_13).raw == 8192
        assert float_to_fixed(0.5, S16_13).raw == 4096
        # Values beyond the format range saturate instead of wrapping.
        assert float_to_fixed(5.0, S16_13).raw == 32767
        assert float_to_fixed(-5.0, S16_13).raw == -32768
        assert float_to_fixed(math.inf, S16_13).raw == 32767
        assert float_to_fixed(-math.inf, S16_13).raw == -32768

    def test_fixed_to_float_examples(self):
        assert fixed_to_float(FixedValue(8192, S16_13)) == 1.0
        assert fixed_to_float(FixedValue(-8192, S16_13)) == -1.0
        assert fixed_to_float(FixedValue(1, S16_13)) == 2.0 ** -13

    def test_ties_to_even(self):
        assert float_to_fixed(0.5 * LSB, S16_13).raw == 0
        assert float_to_fixed(1.5 * LSB, S16_13).raw == 2
        assert float_to_fixed(2.5 * LSB, S16_13).raw == 2

    def test_truncate_mode(self):
        assert float_to_fixed(0.99 * LSB, S16_13, rounding="truncate").raw == 0
        assert float_to_fixed(-0.01 * LSB, S16_13, rounding="truncate").raw == -1
        with pytest.raises(ValueError):
            float_to_fixed(1.0, S16_13, rounding="stochastic")

    def test_nan_rejected(self):
        with pytest.raises(ValueError):
            float_to_fixed(math.nan, S16_13)

    def test_round_trip_exhaustive(self):
        # Every representable s16.13 value must survive the round trip.
        scale = S16_13.scale
        for raw in range(S16_13.raw_min, S16_13.raw_max + 1):
            assert float_to_fixed(raw / scale, S16_13).raw == raw

    def test_monotone(self):
        rng = np.random.default_rng(11)
        xs = np.sort(rng.uniform(-6.0, 6.0, 2000))
        for mode in ("nearest", "truncate"):
            raws = [float_to_fixed(float(x), S16_13, rounding=mode).raw for x in xs]
            assert all(a <= b for a, b in zip(raws, raws[1:]))


class TestCordicConfig:
    def test_default_gain(self):
        cfg = CordicConfig()
        expected = math.prod(1.0 / math.sqrt(1.0 + 2.0 ** (-2 * i)) for i in range(16))
        assert cfg.gain_compensation == pytest.approx(expected, abs=1e-15)

    def test_gain_invariant_checked(self):
        with pytest.raises(ValueError):
            CordicConfig(iterations=16, gain_compensation=0.7)
        # Within one LSB is accepted.
        good = math.prod(1.0 / math.sqrt(1.0 + 2.0 ** (-2 * i)) for i in range(16))
        CordicConfig(iterations=16, gain_compensation=good + 0.5 * LSB)

    def test_iterations_checked(self):
        with pytest.raises(ValueError):
            CordicConfig(iterations=0)


class TestSinCos:
    def test_zero_is_exact(self):
        s, c = cordic_sincos(FixedValue(0, S16_13))
        assert (s.raw, c.raw) == (0, 8192)

    def test_quadrant_boundary(self):
        s, c = cordic_sincos(float_to_fixed(math.pi / 2, S16_13))
        assert abs(s.value - 1.0) <= 4 * LSB
        assert abs(c.value - 0.0) <= 4 * LSB

    def test_pi_over_six(self):
        s, _ = cordic_sincos(float_to_fixed(math.pi / 6, S16_13))
        assert abs(s.value - math.sin(math.pi / 6)) <= 4 * LSB

    def test_symmetry_bit_exact(self):
        rng = np.random.default_rng(5)
        raws = list(rng.integers(0, 25736, 500)) + [0, 1, 12868, 25735, 25736]
        for raw in raws:
            sp, cp = cordic_sincos(FixedValue(int(raw), S16_13))
            sn, cn = cordic_sincos(FixedValue(-int(raw), S16_13))
            assert sn.raw == -sp.raw
            assert cn.raw == cp.raw

    def test_error_envelope_sample(self):
        rng = np.random.default_rng(17)
        worst = 0.0
        for a in rng.uniform(-math.pi, math.pi, 10_000):
            s, c = cordic_sincos(float_to_fixed(a, S16_13))
            worst = max(worst, abs(s.value - math.sin(a)), abs(c.value - math.cos(a)))
        assert worst <= 4 * LSB

    def test_argument_reduction(self):
        # Any representable angle (|a| <= 4 in s16.13) reduces internally; a
        # wrap adds at most a fraction of an LSB on top of the envelope.
        for a in (3.5, -3.6, 3.9, -3.99):
            s, c = cordic_sincos(float_to_fixed(a, S16_13))
            assert abs(s.value - math.sin(a)) <= 5 * LSB
            assert abs(c.value - math.cos(a)) <= 5 * LSB

    def test_out_of_range_angle_saturates_first(self):
        # Angles beyond the format range clip at the conversion stage, like
        # the hardware converter; the kernel then sees the clipped angle.
        sat = S16_13.max_value
        s, _ = cordic_sincos(float_to_fixed(2.0 * math.pi + 0.3, S16_13))
        assert abs(s.value - math.sin(sat)) <= 5 * LSB

    def test_format_mismatch_rejected(self):
        with pytest.raises(ValueError):
            cordic_sincos(FixedValue(0, QFormat(18, 15)))


class TestAtan2:
    def test_axis_cases(self):
        assert cordic_atan2(FixedValue(0, S16_13), float_to_fixed(1, S16_13)).raw == 0
        pi_raw = round(math.pi * 8192)
        assert cordic_atan2(FixedValue(0, S16_13), float_to_fixed(-1, S16_13)).raw == pi_raw
        half = round(math.pi / 2 * 8192)
        assert cordic_atan2(float_to_fixed(1, S16_13), FixedValue(0, S16_13)).raw == half
        assert cordic_atan2(float_to_fixed(-1, S16_13), FixedValue(0, S16_13)).raw == -half

    def test_both_zero_defined(self):
        assert cordic_atan2(FixedValue(0, S16_13), FixedValue(0, S16_13)).raw == 0

    def test_diagonals(self):
        one = float_to_fixed(1, S16_13)
        neg = float_to_fixed(-1, S16_13)
        assert abs(cordic_atan2(one, one).value - math.pi / 4) <= 4 * LSB
        assert abs(cordic_atan2(one, neg).value - 3 * math.pi / 4) <= 4 * LSB

    def test_antisymmetry_bit_exact(self):
        rng = np.random.default_rng(23)
        for _ in range(300):
            y = float_to_fixed(rng.uniform(0.05, 3.5), S16_13)
            x = float_to_fixed(rng.uniform(-3.5, 3.5), S16_13)
            pos = cordic_atan2(y, x)
            neg = cordic_atan2(FixedValue(-y.raw, S16_13), x)
            assert neg.raw == -pos.raw

    def test_range(self):
        rng = np.random.default_rng(29)
        pi_raw = round(math.pi * 8192)
        for _ in range(300):
            y = float_to_fixed(rng.uniform(-3.5, 3.5), S16_13)
            x = float_to_fixed(rng.uniform(-3.5, 3.5), S16_13)
            a = cordic_atan2(y, x)
            assert -pi_raw < a.raw <= pi_raw

    def test_accuracy_against_double(self):
        rng = np.random.default_rng(31)
        worst = 0.0
        for _ in range(3000):
            ang = rng.uniform(-math.pi, math.pi)
            r = rng.uniform(0.5, 3.5)
            y = float_to_fixed(r * math.sin(ang), S16_13)
            x = float_to_fixed(r * math.cos(ang), S16_13)
            got = cordic_atan2(y, x).value
            worst = max(worst, abs(got - math.atan2(y.value, x.value)))
        assert worst <= 4 * LSB


class TestAcos:
    def test_endpoints(self):
        assert cordic_acos(float_to_fixed(1.0, S16_13)).raw == 0
        pi_raw = round(math.pi * 8192)
        assert cordic_acos(float_to_fixed(-1.0, S16_13)).raw == pi_raw

    def test_zero(self):
        a = cordic_acos(FixedValue(0, S16_13))
        assert abs(a.value - math.pi / 2) <= 8 * LSB

    def test_mid_value(self):
        a = cordic_acos(float_to_fixed(0.7071, S16_13))
        assert abs(a.value - math.acos(0.7071)) <= 8 * LSB

    def test_clamping(self):
        assert cordic_acos(float_to_fixed(1.5, S16_13)).raw == 0
        assert cordic_acos(float_to_fixed(-1.4, S16_13)).raw == round(math.pi * 8192)

    def test_result_in_range(self):
        rng = np.random.default_rng(37)
        pi_raw = round(math.pi * 8192)
        for t in rng.uniform(-1, 1, 500):
            a = cordic_acos(float_to_fixed(float(t), S16_13))
            assert 0 <= a.raw <= pi_raw


class TestSqrt32:
    def test_exact_cases(self):
        assert sqrt32(0.0) == 0.0
        assert sqrt32(4.0) == 2.0

    def test_correctly_rounded(self):
        # Such a small set of operations must agree with the double-precision
        # square root to within half an ULP of float32.
        rng = np.random.default_rng(41)
        for x in rng.uniform(0.0, 16.0, 2000):
            x32 = np.float32(x)
            got = sqrt32(x32)
            expected = math.sqrt(float(x32))
            assert abs(float(got) - expected) <= 0.5 * float(np.spacing(got))

    def test_home_pose_radicand(self):
        got = sqrt32(np.float32(0.03645))
        expected = math.sqrt(float(np.float32(0.03645)))
        assert abs(float(got) - expected) <= 0.5 * float(np.spacing(got))

    def test_negative_rejected(self):
        with pytest.raises(NegativeRadicand):
            sqrt32(-1e-6)

    def test_returns_float32(self):
        assert isinstance(sqrt32(2.0), np.float32)


class TestTfbWrappers:
    def test_sincos(self):
        s, c = tfb_sincos(np.float32(0.5))
        assert isinstance(s, np.float32) and isinstance(c, np.float32)
        assert abs(float(s) - math.sin(0.5)) <= 5 * LSB
        assert abs(float(c) - math.cos(0.5)) <= 5 * LSB

    def test_atan2(self):
        a = tfb_atan2(np.float32(1.0), np.float32(1.0))
        assert abs(float(a) - math.pi / 4) <= 5 * LSB

    def test_acos(self):
        a = tfb_acos(np.float32(0.5))
        assert abs(float(a) - math.acos(0.5)) <= 8 * LSB
