import numpy as np
import pytest

from csdaclab import DacConfig, ToneSpec, generate_tone_codes


@pytest.fixture
def cfg3():
    return DacConfig(resolution_bits=3, oversampling_ratio=256)


@pytest.fixture
def tone_slow():
    # 10 cycles in 1000 codes, the workhorse low-frequency stimulus
    return ToneSpec(frequency_ratio=0.01, record_length=1000)


def make_run(m=3, osr=256, f0=0.05, n=200, warmup=0, phase=0.0):
    cfg = DacConfig(resolution_bits=m, oversampling_ratio=osr)
    tone = ToneSpec(frequency_ratio=f0, record_length=n, phase=phase)
    seq = generate_tone_codes(cfg, tone, warmup=warmup)
    return cfg, tone, seq


def as_waveform(samples, cfg):
    from csdaclab import OversampledWaveform

    samples = np.asarray(samples, dtype=np.float64)
    assert samples.size % cfg.oversampling_ratio == 0
    return OversampledWaveform(samples, cfg.tick, cfg)
