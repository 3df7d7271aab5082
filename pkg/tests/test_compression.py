"""Signal-path tests: preprocessing, wavelet shortening, quantization, lines.

The single-level transform is cross-checked against a deliberately naive
loop-based reimplementation (`oracle_dwt_level`) with its own copy of the
filter taps, so a vectorization bug in the package cannot hide.
"""

import math
import warnings

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from numpy.testing import assert_allclose

from eegemr.compression import (
    Channel,
    CompressedChannel,
    CompressionConfig,
    PreprocessWarning,
    RawRecording,
    channel_lines,
    compress_recording,
    dwt_compress,
    dwt_single_level,
    parse_channel_line,
    preprocess,
    quantize,
    resample_linear,
    segment_serialize,
    serialize_channel,
)

# Independent copies of the analysis low-pass taps (standard published
# values), NOT imported from the package.
ORACLE_TAPS = {
    "haar": [0.7071067811865476, 0.7071067811865476],
    "db4": [
        0.23037781330885523,
        0.7148465705525415,
        0.6308807679295904,
        -0.02798376941698385,
        -0.18703481171888114,
        0.030841381835986965,
        0.032883011666982945,
        -0.010597401784997278,
    ],
}


def oracle_dwt_level(x, wavelet):
    """Plain-loop periodized analysis step: the reference implementation.

    Odd inputs are extended by repeating the last sample.  High-pass taps
    come from the quadrature mirror rule g[i] = (-1)^i h[L-1-i].
    """
    h = ORACLE_TAPS[wavelet]
    x = [float(v) for v in x]
    if len(x) % 2 == 1:
        x = x + [x[-1]]
    n, L = len(x), len(h)
    g = [((-1.0) ** i) * h[L - 1 - i] for i in range(L)]
    approx = [sum(h[k] * x[(2 * i + k) % n] for k in range(L)) for i in range(n // 2)]
    detail = [sum(g[k] * x[(2 * i + k) % n] for k in range(L)) for i in range(n // 2)]
    return np.array(approx), np.array(detail)


class TestSingleLevel:
    @pytest.mark.parametrize("wavelet", ["haar", "db4"])
    @pytest.mark.parametrize("n", [2, 4, 7, 16, 33, 100, 257])
    def test_matches_loop_oracle(self, wavelet, n):
        rng = np.random.default_rng(42)
        x = rng.normal(size=n)
        a, d = dwt_single_level(x, wavelet)
        ea, ed = oracle_dwt_level(x, wavelet)
        assert_allclose(a, ea, atol=1e-12)
        assert_allclose(d, ed, atol=1e-12)

    def test_haar_constant_block(self):
        """A constant pair averages to value*sqrt(2) with zero detail."""
        a, d = dwt_single_level(np.ones(4), "haar")
        assert_allclose(a, [math.sqrt(2.0), math.sqrt(2.0)], atol=1e-14)
        assert_allclose(d, [0.0, 0.0], atol=1e-14)

    def test_haar_hand_values(self):
        a, d = dwt_single_level(np.array([1.0, 2.0, 3.0, 4.0]), "haar")
        r2 = math.sqrt(2.0)
        assert_allclose(a, [3.0 / r2, 7.0 / r2], atol=1e-14)
        assert_allclose(d, [-1.0 / r2, -1.0 / r2], atol=1e-14)

    @pytest.mark.parametrize("wavelet", ["haar", "db4"])
    @pytest.mark.parametrize("n", [8, 16, 50, 128, 501])
    def test_energy_conservation(self, wavelet, n):
        """||a||^2 + ||d||^2 == ||x||^2 once the input has even length."""
        rng = np.random.default_rng(7)
        x = rng.normal(size=n)
        if n % 2 == 1:
            x = np.concatenate([x, x[-1:]])  # padding changes the signal
        a, d = dwt_single_level(x, wavelet)
        total = np.sum(a**2) + np.sum(d**2)
        assert_allclose(total, np.sum(x**2), rtol=1e-9)

    @pytest.mark.parametrize("wavelet", ["haar", "db4"])
    def test_level_is_orthogonal_map(self, wavelet):
        """Rows of the analysis operator form an orthonormal basis."""
        n = 16
        rows = []
        for i in range(n):
            e = np.zeros(n)
            e[i] = 1.0
            a, d = dwt_single_level(e, wavelet)
            rows.append(np.concatenate([a, d]))
        m = np.stack(rows).T  # columns are images of basis vectors
        assert_allclose(m @ m.T, np.eye(n), atol=1e-12)

    @pytest.mark.parametrize("wavelet", ["haar", "db4"])
    def test_odd_length_repeats_last_sample(self, wavelet):
        rng = np.random.default_rng(3)
        x = rng.normal(size=11)
        padded = np.concatenate([x, x[-1:]])
        a1, d1 = dwt_single_level(x, wavelet)
        a2, d2 = dwt_single_level(padded, wavelet)
        assert_allclose(a1, a2, atol=0)
        assert_allclose(d1, d2, atol=0)


class TestCascade:
    def test_exact_power_of_two_reduction(self):
        """1000 -> 500 -> 250 -> 125 stops in [50, 100) for target 50."""
        rng = np.random.default_rng(0)
        out = dwt_compress(rng.normal(size=1000), CompressionConfig.for_w())
        assert out.shape == (50,)

    def test_constant_signal_gain(self):
        # each haar level scales a constant by sqrt(2); 400 -> 50 is 3 levels
        out = dwt_compress(np.ones(400), CompressionConfig.for_w())
        assert_allclose(out, np.full(50, 2.0**1.5), rtol=1e-12)

    def test_already_at_target_passes_through(self):
        rng = np.random.default_rng(1)
        x = rng.normal(size=50)
        out = dwt_compress(x, CompressionConfig.for_w())
        assert_allclose(out, x, atol=0)

    def test_below_twice_target_only_resamples(self):
        """Lengths in [target, 2*target) take no transform level at all."""
        x = np.arange(80, dtype=np.float64)
        out = dwt_compress(x, CompressionConfig.for_w())
        assert_allclose(out, np.linspace(0.0, 79.0, 50), atol=1e-12)

    def test_shorter_than_target_raises(self):
        with pytest.raises(ValueError, match="shorter than target"):
            dwt_compress(np.ones(49), CompressionConfig.for_w())

    @settings(max_examples=200, deadline=None)
    @given(
        src_len=st.integers(min_value=1, max_value=3000),
        target=st.integers(min_value=1, max_value=120),
        wavelet=st.sampled_from(["haar", "db4"]),
    )
    def test_output_length_always_exact(self, src_len, target, wavelet):
        if src_len < target:
            return
        cfg = CompressionConfig(method="W", target_len=target, wavelet=wavelet)
        rng = np.random.default_rng(src_len * 1000 + target)
        out = dwt_compress(rng.normal(size=src_len), cfg)
        assert out.shape == (target,)
        assert np.all(np.isfinite(out))


class TestResample:
    def test_identity_when_length_matches(self):
        x = np.array([3.0, 1.0, 4.0])
        assert_allclose(resample_linear(x, 3), x, atol=0)

    def test_endpoints_preserved(self):
        rng = np.random.default_rng(5)
        x = rng.normal(size=37)
        out = resample_linear(x, 12)
        assert out[0] == x[0]
        assert out[-1] == x[-1]

    def test_linear_ramp_stays_linear(self):
        out = resample_linear(np.arange(10.0), 25)
        assert_allclose(out, np.linspace(0.0, 9.0, 25), atol=1e-12)

    def test_upsampling_allowed(self):
        assert resample_linear(np.array([0.0, 1.0]), 5).shape == (5,)


class TestQuantize:
    def test_hand_example(self):
        assert quantize([-2.0, 0.0, 2.0], 256) == [0, 128, 255]

    def test_all_zero_maps_to_center(self):
        assert quantize([0.0, 0.0, 0.0], 256) == [128, 128, 128]
        assert quantize([0.0], 7) == [3]

    def test_peak_values_hit_the_ends(self):
        q = quantize([-3.5, 3.5], 256)
        assert q == [0, 255]

    def test_empty_rejected(self):
        with pytest.raises(ValueError):
            quantize([], 256)

    @settings(max_examples=150, deadline=None)
    @given(
        vals=st.lists(
            st.floats(min_value=-1e6, max_value=1e6, allow_nan=False),
            min_size=1,
            max_size=40,
        ),
        bins=st.integers(min_value=2, max_value=1024),
    )
    def test_range_and_monotonicity(self, vals, bins):
        q = quantize(vals, bins)
        assert all(0 <= v < bins for v in q)
        order = np.argsort(np.asarray(vals), kind="stable")
        sorted_q = [q[i] for i in order]
        assert sorted_q == sorted(sorted_q)


def _make_recording(data, names=None, **kw):
    names = names or [f"C{i}" for i in range(len(data))]
    defaults = dict(
        subject_id="s0", gender="female", age=30, sampling_rate_hz=250.0
    )
    defaults.update(kw)
    return RawRecording(
        channels=[Channel(n, np.asarray(row, dtype=np.float64)) for n, row in zip(names, data)],
        **defaults,
    )


class TestPreprocess:
    def test_common_average_is_removed(self):
        rng = np.random.default_rng(11)
        rec = preprocess(_make_recording(rng.normal(size=(4, 200))))
        stacked = np.stack([ch.samples for ch in rec.channels])
        assert_allclose(stacked.mean(axis=0), np.zeros(200), atol=1e-10)

    def test_detrend_kills_pure_trends(self):
        t = np.arange(100, dtype=np.float64)
        rec = preprocess(_make_recording([2.0 + 3.0 * t, 5.0 - 1.0 * t]))
        for ch in rec.channels:
            assert_allclose(ch.samples, np.zeros(100), atol=1e-8)

    def test_detrend_flag_off(self):
        t = np.arange(50, dtype=np.float64)
        rec = preprocess(_make_recording([t, -t]), detrend=False)
        # mirrored channels already average to zero, so they pass unchanged
        assert_allclose(rec.channels[0].samples, t, atol=1e-12)
        assert_allclose(rec.channels[1].samples, -t, atol=1e-12)

    def test_idempotent(self):
        rng = np.random.default_rng(13)
        once = preprocess(_make_recording(rng.normal(size=(3, 128))))
        twice = preprocess(once)
        for a, b in zip(once.channels, twice.channels):
            assert_allclose(a.samples, b.samples, atol=1e-9)

    def test_single_channel_warns_and_skips_reref(self):
        t = np.arange(64, dtype=np.float64)
        rng = np.random.default_rng(17)
        noise = rng.normal(size=64)
        with pytest.warns(PreprocessWarning):
            rec = preprocess(_make_recording([noise + 4.0 * t]))
        assert not np.allclose(rec.channels[0].samples, 0.0)

    def test_validation_rejects_bad_input(self):
        with pytest.raises(ValueError, match="gender"):
            _make_recording([[1.0, 2.0]], gender="x").validate()
        with pytest.raises(ValueError, match="equal sample count"):
            _make_recording([[1.0, 2.0], [1.0, 2.0, 3.0]]).validate()
        with pytest.raises(ValueError, match="unique"):
            _make_recording([[1.0, 2.0], [3.0, 4.0]], names=["A", "A"]).validate()


class TestSerialization:
    def test_single_line_format(self):
        ch = CompressedChannel("Fp1", np.array([0.1, 0.1, 2.0]), [7, 7, 255])
        assert serialize_channel(ch) == "Fp1: 7 7 255"

    def test_segment_lines_are_one_based_and_cover(self):
        cfg = CompressionConfig.for_wtos()
        vals = list(range(500))
        quant = [v % 256 for v in vals]
        ch = CompressedChannel("Oz", np.array(vals, dtype=np.float64), quant)
        lines = segment_serialize(ch, cfg)
        assert len(lines) == 10
        reassembled = []
        for k, line in enumerate(lines, start=1):
            name, seg, parsed = parse_channel_line(line)
            assert name == "Oz"
            assert seg == k
            assert len(parsed) == 50
            reassembled.extend(parsed)
        assert reassembled == quant

    def test_channel_lines_dispatch(self):
        w = CompressionConfig.for_w()
        ch = CompressedChannel("Cz", np.zeros(50), [1] * 50)
        assert len(channel_lines(ch, w)) == 1
        wtos = CompressionConfig.for_wtos()
        ch10 = CompressedChannel("Cz", np.zeros(500), [1] * 500)
        assert len(channel_lines(ch10, wtos)) == 10

    def test_parse_plain_line(self):
        assert parse_channel_line("Fp1: 7 7 255") == ("Fp1", None, [7, 7, 255])

    def test_parse_rejects_garbage(self):
        with pytest.raises(ValueError):
            parse_channel_line("no separator here")

    @settings(max_examples=100, deadline=None)
    @given(
        name=st.text(
            alphabet=st.sampled_from("ABCFOPZabcz0123456789"), min_size=1, max_size=6
        ),
        vals=st.lists(st.integers(min_value=0, max_value=255), min_size=1, max_size=30),
    )
    def test_round_trip_property(self, name, vals):
        ch = CompressedChannel(name, np.zeros(len(vals)), vals)
        parsed_name, seg, parsed = parse_channel_line(serialize_channel(ch))
        assert parsed_name == name
        assert seg is None
        assert parsed == vals


class TestEndToEnd:
    def _sine_recording(self):
        t = np.arange(1000) / 250.0
        chans = [np.sin(2 * np.pi * (2 + i) * t) for i in range(4)]
        return _make_recording(chans, names=["Fp1", "Fp2", "Cz", "Oz"])

    def test_full_w_pipeline(self):
        rec = preprocess(self._sine_recording())
        comp = compress_recording(rec, CompressionConfig.for_w())
        assert len(comp) == 4
        for ch in comp:
            assert len(ch.quantized) == 50
            assert all(0 <= q <= 255 for q in ch.quantized)

    def test_full_wtos_pipeline(self):
        rec = preprocess(self._sine_recording())
        cfg = CompressionConfig.for_wtos()
        comp = compress_recording(rec, cfg)
        lines = [ln for ch in comp for ln in channel_lines(ch, cfg)]
        assert len(lines) == 40
        assert lines[0].startswith("Fp1[1]:")
        assert lines[9].startswith("Fp1[10]:")

    def test_recording_dict_round_trip(self):
        rec = self._sine_recording()
        back = RawRecording.from_dict(rec.to_dict())
        assert back.subject_id == rec.subject_id
        for a, b in zip(rec.channels, back.channels):
            assert_allclose(a.samples, b.samples, atol=0)

    def test_config_validation(self):
        with pytest.raises(ValueError, match="divisible"):
            CompressionConfig(method="WtoS", target_len=500, segments=7)
        with pytest.raises(ValueError, match="wavelet"):
            CompressionConfig(wavelet="sym5")
        with pytest.raises(ValueError, match="method"):
            CompressionConfig(method="Z")
