"""Converter configuration, code sequences, and per-cell timing errors.

Conventions used throughout the package:

* Codes are integers in [0, 2^M - 1], expressed in LSB units.
* A fully segmented M-bit converter has 2^M - 1 unit current cells; unit
  cell m is on exactly when the code exceeds m.
* A partially segmented converter keeps 2^T - 1 unit cells of weight
  2^(M-T) LSB for the T MSBs, plus M - T binary cells with weights
  2^(M-T-1), ..., 2, 1 for the remaining LSBs.  In the per-cell timing
  error array the unit cells come first (index 0 .. 2^T - 2) followed by
  the binary cells in descending weight order.
* Time is measured in seconds; the code period is 1 / sample_rate.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np


def _frozen_array(values, dtype=None) -> np.ndarray:
    out = np.array(values, dtype=dtype)
    out.setflags(write=False)
    return out


@dataclass(frozen=True)
class DacConfig:
    """Static description of one converter under simulation."""

    resolution_bits: int
    thermometer_bits: int | None = None
    unit_current: float = 1.0
    sample_rate: float = 1.0
    oversampling_ratio: int = 1024

    def __post_init__(self):
        m = self.resolution_bits
        if not 1 <= m <= 16:
            raise ValueError(f"resolution_bits must be in [1, 16], got {m}")
        t = m if self.thermometer_bits is None else self.thermometer_bits
        if not 0 <= t <= m:
            raise ValueError(f"thermometer_bits must be in [0, {m}], got {t}")
        object.__setattr__(self, "thermometer_bits", t)
        if not self.unit_current > 0:
            raise ValueError("unit_current must be positive")
        if not self.sample_rate > 0:
            raise ValueError("sample_rate must be positive")
        if self.oversampling_ratio < 2:
            raise ValueError("oversampling_ratio must be at least 2")

    @property
    def full_scale(self) -> int:
        """Largest representable code, 2^M - 1."""
        return (1 << self.resolution_bits) - 1

    @property
    def is_fully_segmented(self) -> bool:
        return self.thermometer_bits == self.resolution_bits

    @property
    def cell_count(self) -> int:
        """Number of physical current cells."""
        m, t = self.resolution_bits, self.thermometer_bits
        return ((1 << t) - 1) + (m - t)

    @property
    def cell_weights(self) -> np.ndarray:
        """Per-cell weights in LSB units; unit cells first, then binary."""
        m, t = self.resolution_bits, self.thermometer_bits
        unit = 1 << (m - t)
        weights = np.concatenate(
            [
                np.full((1 << t) - 1, unit, dtype=np.int64),
                (1 << np.arange(m - t - 1, -1, -1, dtype=np.int64)) if m > t else np.empty(0, dtype=np.int64),
            ]
        )
        return weights

    @property
    def period(self) -> float:
        """Code period T_s in seconds."""
        return 1.0 / self.sample_rate

    @property
    def tick(self) -> float:
        """Oversampled waveform sample period in seconds."""
        return self.period / self.oversampling_ratio


@dataclass(frozen=True)
class ToneSpec:
    """A coherent single-tone test stimulus.

    ``amplitude`` is in LSB units; ``None`` resolves to full scale,
    (2^M - 1) / 2, once a converter configuration is known.
    """

    frequency_ratio: float
    record_length: int
    amplitude: float | None = None
    phase: float = 0.0

    def __post_init__(self):
        if not 0.0 < self.frequency_ratio < 0.5:
            raise ValueError("frequency_ratio must lie in (0, 0.5)")
        if self.record_length < 1:
            raise ValueError("record_length must be positive")
        cycles = self.frequency_ratio * self.record_length
        if abs(cycles - round(cycles)) > 1e-9:
            raise ValueError(
                f"tone is not coherent: {self.frequency_ratio} * {self.record_length} "
                f"= {cycles} is not an integer number of cycles"
            )
        if self.amplitude is not None and self.amplitude < 0:
            raise ValueError("amplitude must be nonnegative")

    @property
    def cycles(self) -> int:
        """Whole tone cycles inside one record."""
        return round(self.frequency_ratio * self.record_length)

    def resolve_amplitude(self, cfg: DacConfig) -> float:
        a = cfg.full_scale / 2.0 if self.amplitude is None else self.amplitude
        if a > cfg.full_scale / 2.0:
            raise ValueError(
                f"amplitude {a} exceeds full scale {cfg.full_scale / 2.0} LSB"
            )
        return a


@dataclass(frozen=True)
class DigitalSequence:
    """An input code sequence together with its first differences.

    ``deltas[n] = codes[n] - codes[n-1]`` with ``codes[-1]`` taken to be
    ``initial_code``.  The first ``warmup`` codes are a settling prefix
    that metrics discard via :meth:`drop_warmup`.
    """

    codes: np.ndarray
    deltas: np.ndarray
    initial_code: int = 0
    warmup: int = 0

    @classmethod
    def from_codes(cls, codes, initial_code: int = 0, warmup: int = 0) -> "DigitalSequence":
        codes = np.asarray(codes, dtype=np.int64)
        if codes.size == 0:
            raise ValueError("code sequence is empty")
        if codes.min() < 0:
            raise ValueError("codes must be nonnegative")
        if not 0 <= warmup < codes.size:
            raise ValueError("warmup must leave at least one analyzed code")
        prev = np.concatenate(([initial_code], codes[:-1]))
        deltas = codes - prev
        return cls(
            codes=_frozen_array(codes),
            deltas=_frozen_array(deltas),
            initial_code=int(initial_code),
            warmup=warmup,
        )

    def __len__(self) -> int:
        return int(self.codes.size)

    @property
    def analyzed_length(self) -> int:
        return int(self.codes.size) - self.warmup

    def drop_warmup(self) -> "DigitalSequence":
        """The analyzed portion of the record, warm-up prefix removed."""
        if self.warmup == 0:
            return self
        w = self.warmup
        return DigitalSequence(
            codes=self.codes[w:],
            deltas=self.deltas[w:],
            initial_code=int(self.codes[w - 1]),
            warmup=0,
        )


@dataclass(frozen=True)
class TimingErrorSet:
    """One Monte Carlo draw of per-cell firing-time offsets (seconds)."""

    offsets: np.ndarray
    sigma: float
    seed: int
    config: DacConfig


@dataclass(frozen=True)
class TransitionSet:
    """Per-transition lumped timing error and charge error magnitude."""

    equivalent_errors: np.ndarray
    charge_errors: np.ndarray


def binary_to_thermometer(code: int, width: int) -> np.ndarray:
    """Decode a binary code to a thermometer word of ``width`` cells.

    Element i of the result is 1 exactly when ``i < code``, so cells fill
    from index 0 upward and the popcount equals the input code.
    """
    if not 0 <= code <= width:
        raise ValueError(f"code {code} outside [0, {width}]")
    out = np.zeros(width, dtype=np.int64)
    out[:code] = 1
    return out


def generate_tone_codes(
    cfg: DacConfig,
    tone: ToneSpec,
    warmup: int = 0,
    initial_code: int | str = 0,
) -> DigitalSequence:
    """Quantize a coherent sine into a code sequence.

    codes[n] = clamp(round(offset + A sin(2 pi (f0/fs) n + phase))), with
    offset = (2^M - 1) / 2 and round half up.  ``warmup`` extra codes are
    prepended by evaluating the same sine at n = -warmup .. -1, keeping
    the analyzed record exactly ``tone.record_length`` coherent codes.
    ``initial_code="wrap"`` uses the last code as the predecessor of the
    first, which makes the record exactly circular.
    """
    amplitude = tone.resolve_amplitude(cfg)
    offset = cfg.full_scale / 2.0
    n = np.arange(-warmup, tone.record_length, dtype=np.float64)
    values = offset + amplitude * np.sin(
        2.0 * np.pi * tone.frequency_ratio * n + tone.phase
    )
    # round half away from zero; values are nonnegative so floor(x + 0.5) works
    codes = np.floor(values + 0.5).astype(np.int64)
    np.clip(codes, 0, cfg.full_scale, out=codes)
    if initial_code == "wrap":
        initial = int(codes[-1])
    else:
        initial = int(initial_code)
        if not 0 <= initial <= cfg.full_scale:
            raise ValueError(f"initial_code {initial} outside [0, {cfg.full_scale}]")
    return DigitalSequence.from_codes(codes, initial_code=initial, warmup=warmup)


def draw_timing_errors(cfg: DacConfig, sigma: float, seed: int) -> TimingErrorSet:
    """Draw one i.i.d. N(0, sigma^2) firing-time offset per physical cell."""
    if sigma < 0:
        raise ValueError("sigma must be nonnegative")
    if sigma == 0.0:
        offsets = np.zeros(cfg.cell_count)
    else:
        rng = np.random.default_rng(seed)
        offsets = rng.normal(0.0, sigma, size=cfg.cell_count)
    return TimingErrorSet(
        offsets=_frozen_array(offsets), sigma=float(sigma), seed=int(seed), config=cfg
    )


def equivalent_timing_errors(seq: DigitalSequence, taus: TimingErrorSet) -> TransitionSet:
    """Lump the switching cells' offsets into one timing error per transition.

    For a nonzero code step the lumped error is the mean of the offsets of
    the unit cells indexed min(x_n, x_{n-1}) .. max(x_n, x_{n-1}) - 1; it
    is zero when the code does not change.  Defined for fully segmented
    configurations only.
    """
    cfg = taus.config
    if not cfg.is_fully_segmented:
        raise ValueError(
            "equivalent timing errors are defined for fully segmented "
            "configurations only; use the per-cell model for partial segmentation"
        )
    codes = seq.codes
    if codes.max() > cfg.full_scale:
        raise RuntimeError(
            f"code {codes.max()} exceeds full scale {cfg.full_scale} of the "
            "configuration the timing errors were drawn for"
        )
    prev = np.concatenate(([seq.initial_code], codes[:-1]))
    deltas = seq.deltas
    mask = deltas != 0

    t_eps = np.zeros(codes.size)
    if np.any(mask):
        lo = np.minimum(codes, prev)[mask]
        hi = np.maximum(codes, prev)[mask]
        # segment sums over [lo, hi); the pad keeps reduceat indices in range
        # when a transition reaches full scale (hi == cell_count)
        padded = np.concatenate([taus.offsets, [0.0]])
        bounds = np.empty(2 * lo.size, dtype=np.int64)
        bounds[0::2] = lo
        bounds[1::2] = hi
        sums = np.add.reduceat(padded, bounds)[0::2]
        t_eps[mask] = sums / np.abs(deltas[mask])

    charges = cfg.unit_current * np.abs(deltas * t_eps)
    return TransitionSet(
        equivalent_errors=_frozen_array(t_eps), charge_errors=_frozen_array(charges)
    )


def default_warmup(tone: ToneSpec) -> int:
    """Warm-up length in codes: one full tone period, rounded up."""
    return int(math.ceil(1.0 / tone.frequency_ratio - 1e-9))
