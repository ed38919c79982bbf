"""Configuration, decoding, tone generation, and timing-error draws."""

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from csdaclab import (
    DacConfig,
    DigitalSequence,
    TimingErrorSet,
    ToneSpec,
    binary_to_thermometer,
    default_warmup,
    draw_timing_errors,
    equivalent_timing_errors,
    generate_tone_codes,
)


class TestDacConfig:
    def test_fully_segmented_cell_count(self):
        for m in (1, 3, 8, 16):
            cfg = DacConfig(resolution_bits=m)
            assert cfg.cell_count == 2**m - 1
            assert cfg.is_fully_segmented
            assert np.all(cfg.cell_weights == 1)

    def test_partial_inventory_weights_sum_to_full_scale(self):
        for m in range(1, 13):
            for t in range(0, m + 1):
                cfg = DacConfig(resolution_bits=m, thermometer_bits=t)
                w = cfg.cell_weights
                assert cfg.cell_count == (2**t - 1) + (m - t)
                assert w.size == cfg.cell_count
                assert w.sum() == 2**m - 1
                # unit cells first, then binary weights in descending order
                assert np.all(w[: 2**t - 1] == 2 ** (m - t))
                assert list(w[2**t - 1 :]) == [2**b for b in range(m - t - 1, -1, -1)]

    def test_validation(self):
        with pytest.raises(ValueError):
            DacConfig(resolution_bits=0)
        with pytest.raises(ValueError):
            DacConfig(resolution_bits=17)
        with pytest.raises(ValueError):
            DacConfig(resolution_bits=4, thermometer_bits=5)
        with pytest.raises(ValueError):
            DacConfig(resolution_bits=4, unit_current=0.0)
        with pytest.raises(ValueError):
            DacConfig(resolution_bits=4, oversampling_ratio=1)

    def test_period_and_tick(self):
        cfg = DacConfig(resolution_bits=4, sample_rate=2.0, oversampling_ratio=8)
        assert cfg.period == 0.5
        assert cfg.tick == 0.5 / 8


class TestThermometerDecode:
    def test_spec_examples(self):
        # displayed msb-first in datasheets; index 0 is the first cell on
        assert list(binary_to_thermometer(1, 3)) == [1, 0, 0]
        assert list(binary_to_thermometer(2, 3)) == [1, 1, 0]
        assert list(binary_to_thermometer(0, 3)) == [0, 0, 0]
        assert list(binary_to_thermometer(7, 7)) == [1] * 7

    def test_out_of_range(self):
        with pytest.raises(ValueError):
            binary_to_thermometer(4, 3)
        with pytest.raises(ValueError):
            binary_to_thermometer(-1, 3)

    @given(st.integers(0, 255))
    def test_popcount_identity(self, code):
        assert binary_to_thermometer(code, 255).sum() == code

    @given(st.integers(0, 63), st.integers(0, 63))
    def test_monotone(self, a, b):
        lo, hi = sorted((a, b))
        ta = binary_to_thermometer(lo, 63)
        tb = binary_to_thermometer(hi, 63)
        assert np.all(ta <= tb)


class TestToneSpec:
    def test_coherence_enforced(self):
        with pytest.raises(ValueError, match="coherent"):
            ToneSpec(frequency_ratio=0.013, record_length=100)
        ToneSpec(frequency_ratio=0.013, record_length=1000)

    def test_frequency_range(self):
        with pytest.raises(ValueError):
            ToneSpec(frequency_ratio=0.5, record_length=100)
        with pytest.raises(ValueError):
            ToneSpec(frequency_ratio=0.0, record_length=100)

    def test_amplitude_cap(self):
        cfg = DacConfig(resolution_bits=3)
        tone = ToneSpec(frequency_ratio=0.25, record_length=4, amplitude=4.0)
        with pytest.raises(ValueError, match="full scale"):
            tone.resolve_amplitude(cfg)
        assert ToneSpec(frequency_ratio=0.25, record_length=4).resolve_amplitude(cfg) == 3.5


class TestGenerateToneCodes:
    def test_one_bit_sine(self):
        # the n=2 sample sits exactly at the 0.5 rounding boundary; float
        # sin(pi) lands a hair above zero, so half-up rounding takes it to 1
        cfg = DacConfig(resolution_bits=1)
        tone = ToneSpec(frequency_ratio=0.25, record_length=4, amplitude=0.5)
        seq = generate_tone_codes(cfg, tone)
        assert list(seq.codes) == [1, 1, 1, 0]

    def test_zero_amplitude_is_dc(self):
        cfg = DacConfig(resolution_bits=8)
        tone = ToneSpec(frequency_ratio=0.01, record_length=100, amplitude=0.0)
        seq = generate_tone_codes(cfg, tone)
        assert np.all(seq.codes == 128)  # round(127.5 + 0) half up
        assert np.all(seq.deltas[1:] == 0)

    def test_codes_in_range_and_periodic(self):
        cfg = DacConfig(resolution_bits=8)
        tone = ToneSpec(frequency_ratio=0.05, record_length=400, phase=0.3)
        seq = generate_tone_codes(cfg, tone)
        assert seq.codes.min() >= 0 and seq.codes.max() <= 255
        two = generate_tone_codes(
            DacConfig(resolution_bits=8),
            ToneSpec(frequency_ratio=0.05, record_length=800, phase=0.3),
        )
        assert np.array_equal(two.codes[:400], two.codes[400:])
        assert np.array_equal(two.codes[:400], seq.codes)

    def test_warmup_prefix_continues_the_sine(self):
        cfg = DacConfig(resolution_bits=6)
        tone = ToneSpec(frequency_ratio=0.02, record_length=200)
        seq = generate_tone_codes(cfg, tone, warmup=50)
        assert len(seq) == 250
        assert seq.warmup == 50
        body = seq.drop_warmup()
        assert len(body) == 200
        assert np.array_equal(body.codes, generate_tone_codes(cfg, tone).codes)
        # warm-up codes are one tone period earlier, so they match the tail
        assert np.array_equal(seq.codes[:50], body.codes[150:])
        # boundary delta of the analyzed record uses the true previous code
        assert body.deltas[0] == body.codes[0] - seq.codes[49]

    def test_wrap_initial_code(self):
        cfg = DacConfig(resolution_bits=5)
        tone = ToneSpec(frequency_ratio=0.01, record_length=100)
        seq = generate_tone_codes(cfg, tone, initial_code="wrap")
        assert seq.initial_code == seq.codes[-1]
        assert seq.deltas[0] == seq.codes[0] - seq.codes[-1]

    def test_default_warmup_is_one_tone_period(self):
        assert default_warmup(ToneSpec(frequency_ratio=0.01, record_length=100)) == 100
        assert default_warmup(ToneSpec(frequency_ratio=0.25, record_length=4)) == 4
        assert default_warmup(ToneSpec(frequency_ratio=0.499, record_length=1000)) == 3


class TestDigitalSequence:
    def test_delta_definition(self):
        seq = DigitalSequence.from_codes([3, 5, 5, 2], initial_code=1)
        assert list(seq.deltas) == [2, 2, 0, -3]
        assert np.all(seq.deltas[1:] == np.diff(seq.codes))

    def test_validation(self):
        with pytest.raises(ValueError):
            DigitalSequence.from_codes([])
        with pytest.raises(ValueError):
            DigitalSequence.from_codes([-1, 2])
        with pytest.raises(ValueError):
            DigitalSequence.from_codes([1, 2], warmup=2)

    def test_arrays_are_readonly(self):
        seq = DigitalSequence.from_codes([1, 2, 3])
        with pytest.raises(ValueError):
            seq.codes[0] = 5


class TestDrawTimingErrors:
    def test_zero_sigma_all_zero(self, cfg3):
        taus = draw_timing_errors(cfg3, 0.0, seed=123)
        assert np.all(taus.offsets == 0.0)

    def test_negative_sigma_rejected(self, cfg3):
        with pytest.raises(ValueError):
            draw_timing_errors(cfg3, -1e-3, seed=0)

    def test_determinism(self, cfg3):
        a = draw_timing_errors(cfg3, 1e-3, seed=77)
        b = draw_timing_errors(cfg3, 1e-3, seed=77)
        assert np.array_equal(a.offsets, b.offsets)
        c = draw_timing_errors(cfg3, 1e-3, seed=78)
        assert not np.array_equal(a.offsets, c.offsets)

    def test_one_offset_per_physical_cell(self):
        cfg = DacConfig(resolution_bits=10, thermometer_bits=4)
        taus = draw_timing_errors(cfg, 1e-3, seed=5)
        assert taus.offsets.size == (2**4 - 1) + 6

    def test_sample_moments_converge(self):
        # largest supported inventory, 65535 cells
        cfg = DacConfig(resolution_bits=16)
        sigma = 1e-3 * cfg.period
        taus = draw_timing_errors(cfg, sigma, seed=31415)
        assert abs(taus.offsets.mean()) < 0.02 * sigma
        assert abs(taus.offsets.std() / sigma - 1.0) < 0.02


class TestEquivalentTimingErrors:
    def test_zero_delta_gives_zero(self, cfg3):
        seq = DigitalSequence.from_codes([4, 4, 4], initial_code=4)
        taus = draw_timing_errors(cfg3, 1e-3, seed=1)
        trans = equivalent_timing_errors(seq, taus)
        assert np.all(trans.equivalent_errors == 0.0)
        assert np.all(trans.charge_errors == 0.0)

    def test_single_cell_transition(self, cfg3):
        seq = DigitalSequence.from_codes([0, 1])
        offsets = np.zeros(7)
        offsets[0] = 2e-12
        taus = TimingErrorSet(offsets=offsets, sigma=0.0, seed=0, config=cfg3)
        trans = equivalent_timing_errors(seq, taus)
        assert trans.equivalent_errors[1] == 2e-12

    def test_mean_of_switching_cells(self, cfg3):
        # 2 -> 5 switches cells 2, 3, 4
        seq = DigitalSequence.from_codes([2, 5], initial_code=2)
        offsets = np.zeros(7)
        offsets[2:5] = [1e-12, -2e-12, 4e-12]
        taus = TimingErrorSet(offsets=offsets, sigma=0.0, seed=0, config=cfg3)
        trans = equivalent_timing_errors(seq, taus)
        assert trans.equivalent_errors[1] == pytest.approx(1e-12, rel=1e-15)
        assert trans.charge_errors[1] == pytest.approx(3e-12, rel=1e-15)
        # downward move over the same span averages the same offsets
        back = DigitalSequence.from_codes([5, 2], initial_code=5)
        trans_back = equivalent_timing_errors(back, taus)
        assert trans_back.equivalent_errors[1] == trans.equivalent_errors[1]

    def test_full_scale_transition_uses_last_cell(self, cfg3):
        seq = DigitalSequence.from_codes([6, 7], initial_code=6)
        offsets = np.zeros(7)
        offsets[6] = 5e-12
        taus = TimingErrorSet(offsets=offsets, sigma=0.0, seed=0, config=cfg3)
        trans = equivalent_timing_errors(seq, taus)
        assert trans.equivalent_errors[1] == 5e-12

    def test_partial_segmentation_rejected(self):
        cfg = DacConfig(resolution_bits=4, thermometer_bits=2)
        seq = DigitalSequence.from_codes([0, 5])
        taus = draw_timing_errors(cfg, 1e-3, seed=9)
        with pytest.raises(ValueError, match="fully segmented"):
            equivalent_timing_errors(seq, taus)

    def test_code_beyond_inventory_is_a_fault(self, cfg3):
        taus = draw_timing_errors(cfg3, 1e-3, seed=9)
        seq = DigitalSequence.from_codes([0, 12])
        with pytest.raises(RuntimeError):
            equivalent_timing_errors(seq, taus)

    def test_zero_sigma_collapse(self, cfg3, tone_slow):
        seq = generate_tone_codes(cfg3, tone_slow)
        taus = draw_timing_errors(cfg3, 0.0, seed=4)
        trans = equivalent_timing_errors(seq, taus)
        assert np.all(trans.equivalent_errors == 0.0)

    def test_variance_law(self, cfg3):
        # T_eps ~ N(0, sigma^2 / |dx|); chi-square style bound, 1e4 draws.
        # 99.9% two-sided band for a sample variance at n = 1e4 is
        # [0.9540, 1.0473] around the true value.
        seq = DigitalSequence.from_codes([2, 5], initial_code=2)
        sigma = 1.0
        samples = np.empty(10_000)
        for s in range(samples.size):
            taus = draw_timing_errors(cfg3, sigma, seed=s)
            samples[s] = equivalent_timing_errors(seq, taus).equivalent_errors[1]
        ratio = np.var(samples, ddof=1) / (sigma**2 / 3.0)
        assert 0.9540 < ratio < 1.0473
