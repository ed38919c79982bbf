"""Power, periodogram, and band-limited SDR extraction from waveforms.

All tones are coherent by construction, so a single-record rectangular
window keeps the fundamental in one bin and Parseval exact.  Signal power
is the measured fundamental bin of the ideal waveform compensated for the
zero-order-hold envelope, which makes it directly comparable with the
code-domain analytic value A^2/2 at any tone frequency; quantization
energy never leaks into it.  Error powers exclude the DC bin: a static
offset is not distortion, and the differencing method cancels DC exactly
in any case.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from pathlib import Path
from typing import Literal

import numpy as np

from .core import DigitalSequence, _frozen_array
from .waveform import OversampledWaveform


@dataclass(frozen=True)
class Spectrum:
    """One-sided power spectrum; bin powers sum to the mean power."""

    bin_power: np.ndarray
    bin_width: float
    rate: float

    @property
    def freqs(self) -> np.ndarray:
        return np.arange(self.bin_power.size) * self.bin_width

    def to_csv(self, path: str | Path):
        lines = ["freq_hz,power"]
        lines += [
            f"{f:.9g},{p:.9g}" for f, p in zip(self.freqs, self.bin_power)
        ]
        Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


@dataclass(frozen=True)
class SdrReport:
    """Signal power over error power for one band, in dB."""

    signal_power: float
    error_power: float
    sdr_db: float
    band: Literal["wideband", "nyquist"]
    unbounded: bool = False


@dataclass(frozen=True)
class TransitionTrace:
    """Squared error samples around one switching instant, t=0 at n T_s."""

    index: int
    delta: int
    t_offsets: np.ndarray
    squared_error: np.ndarray


def mean_power(w: OversampledWaveform) -> float:
    """Time-domain mean power, (1/L) sum of squared samples."""
    if w.samples.size == 0:
        raise ValueError("waveform is empty")
    return float(np.mean(np.square(w.samples)))


def periodogram(w: OversampledWaveform) -> Spectrum:
    """Single-record rectangular-window one-sided periodogram."""
    s = w.samples
    if s.size == 0:
        raise ValueError("waveform is empty")
    if s.size % 2:
        raise ValueError("record length must be even to keep bin frequencies exact")
    spectrum = np.fft.rfft(s)
    power = np.square(np.abs(spectrum)) / float(s.size) ** 2
    power[1:-1] *= 2.0
    rate = w.rate
    return Spectrum(
        bin_power=_frozen_array(power), bin_width=rate / s.size, rate=rate
    )


def _zoh_power_gain(k: int, n_codes: int, osr: int) -> float:
    """Power gain of the length-OSR hold at bin k, relative to the codes.

    This is the squared Dirichlet kernel magnitude over OSR; near 1 at low
    frequency, 4/pi^2 as the tone approaches f_s/2.
    """
    if k <= 0:
        return 1.0
    num = math.sin(math.pi * k / n_codes)
    den = osr * math.sin(math.pi * k / (n_codes * osr))
    if num == 0.0 or den == 0.0:
        # k sits on a hold null (multiple of the code count); no meaningful
        # compensation exists there, and no coherent fundamental lands there
        return 1.0
    g = num / den
    return g * g


def _signal_power(ideal: OversampledWaveform) -> float:
    spec = periodogram(ideal)
    k = int(np.argmax(spec.bin_power[1:])) + 1
    gain = _zoh_power_gain(k, ideal.n_codes, ideal.config.oversampling_ratio)
    return float(spec.bin_power[k] / gain)


def _check_pair(ideal: OversampledWaveform, error: OversampledWaveform):
    if ideal.samples.size != error.samples.size:
        raise ValueError("ideal and error waveform lengths differ")
    if ideal.config != error.config:
        raise ValueError("ideal and error waveforms use different configurations")


def _report(psig: float, perr: float, band) -> SdrReport:
    if perr == 0.0:
        return SdrReport(psig, 0.0, math.inf, band, unbounded=True)
    return SdrReport(psig, perr, 10.0 * math.log10(psig / perr), band)


def wideband_sdr(ideal: OversampledWaveform, error: OversampledWaveform) -> SdrReport:
    """SDR with the total (all-frequency) error power in the denominator."""
    _check_pair(ideal, error)
    psig = _signal_power(ideal)
    perr = float(np.var(error.samples))
    return _report(psig, perr, "wideband")


def nyquist_sdr(ideal: OversampledWaveform, error: OversampledWaveform) -> SdrReport:
    """SDR counting only error spectral content from DC to f_s / 2."""
    _check_pair(ideal, error)
    psig = _signal_power(ideal)
    spec = periodogram(error)
    cut = error.samples.size // (2 * error.config.oversampling_ratio)
    perr = float(np.sum(spec.bin_power[1 : cut + 1]))
    return _report(psig, perr, "nyquist")


def transition_traces(
    error: OversampledWaveform,
    seq: DigitalSequence,
    window_ticks: int,
    transitions=None,
) -> list[TransitionTrace]:
    """Squared-error windows centered on the nominal switching instants.

    ``transitions`` selects code-period indices; by default every nonzero
    transition whose window fits inside the record is returned.
    """
    osr = error.config.oversampling_ratio
    if not 0 < window_ticks < osr:
        raise ValueError(f"window_ticks must lie in (0, {osr})")
    if error.n_codes != len(seq):
        raise ValueError("error waveform and sequence lengths differ")
    deltas = seq.deltas
    total = error.samples.size
    if transitions is None:
        picks = [
            int(n)
            for n in np.nonzero(deltas)[0]
            if n * osr - window_ticks >= 0 and n * osr + window_ticks <= total
        ]
    else:
        picks = [int(n) for n in transitions]
        for n in picks:
            if not 0 <= n < len(seq) or deltas[n] == 0:
                raise ValueError(f"no code transition at index {n}")
            if n * osr - window_ticks < 0 or n * osr + window_ticks > total:
                raise ValueError(f"trace window around transition {n} leaves the record")
    offsets = np.arange(-window_ticks, window_ticks) * error.sample_period
    out = []
    for n in picks:
        lo = n * osr - window_ticks
        chunk = error.samples[lo : lo + 2 * window_ticks]
        out.append(
            TransitionTrace(
                index=n,
                delta=int(deltas[n]),
                t_offsets=_frozen_array(offsets),
                squared_error=_frozen_array(np.square(chunk)),
            )
        )
    return out
