"""Closed-form error power and SDR predictions.

Two analyses are implemented.  The earlier one spreads each transition's
charge error over the whole code period, giving an error power
proportional to sigma^2 and the mean absolute code step.  The refined one
keeps the error concentrated in pulses whose expected width follows the
folded normal mean, giving an error power proportional to sigma and the
mean 3/2 power of the code step.  Both carry the unit current squared so
the expressions stay dimensionally consistent for any I_u; they reduce to
the normalized forms at I_u = 1.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass

import numpy as np

from .core import DacConfig, DigitalSequence, ToneSpec

log = logging.getLogger(__name__)

SQRT_2_OVER_PI = math.sqrt(2.0 / math.pi)


@dataclass(frozen=True)
class DeltaStats:
    """Time averages of |dx_n| and |dx_n|^(3/2) over a code record."""

    mean_abs_delta: float
    mean_abs_delta_32: float


def delta_stats(seq: DigitalSequence) -> DeltaStats:
    """Exact record averages of the absolute code step and its 3/2 power."""
    d = np.abs(seq.deltas).astype(np.float64)
    if d.size == 0:
        raise ValueError("sequence is empty")
    return DeltaStats(
        mean_abs_delta=float(d.mean()),
        mean_abs_delta_32=float((d * np.sqrt(d)).mean()),
    )


def folded_normal_mean(sigma_eff: float) -> float:
    """Mean of |X| for X ~ N(0, sigma_eff^2): sigma_eff * sqrt(2/pi)."""
    if sigma_eff < 0:
        raise ValueError("sigma_eff must be nonnegative")
    return sigma_eff * SQRT_2_OVER_PI


def signal_power(cfg: DacConfig) -> float:
    """Analytic full-scale sine power, (I_u (2^M - 1) / 2)^2 / 2."""
    return (cfg.unit_current * cfg.full_scale / 2.0) ** 2 / 2.0


def error_power_previous(
    sigma: float, t_s: float, stats: DeltaStats, unit_current: float = 1.0
) -> float:
    """Charge-spread-over-the-period error power: I_u^2 sigma^2/T_s^2 <|dx|>."""
    if t_s <= 0:
        raise ValueError("t_s must be positive")
    return unit_current**2 * (sigma / t_s) ** 2 * stats.mean_abs_delta


def error_power_improved(
    sigma: float, t_s: float, stats: DeltaStats, unit_current: float = 1.0
) -> float:
    """Pulse-width-aware error power: sqrt(2/pi) sigma I_u^2 <|dx|^(3/2)> / T_s."""
    if t_s <= 0:
        raise ValueError("t_s must be positive")
    return SQRT_2_OVER_PI * sigma * unit_current**2 * stats.mean_abs_delta_32 / t_s


def sdr_wideband_improved(cfg: DacConfig, stats: DeltaStats, sigma: float) -> float:
    """Wideband SDR (dB) from the pulse-width-aware error power.

    Returns +inf when sigma or the delta statistics vanish (no error
    power, unbounded ratio).
    """
    if sigma == 0.0 or stats.mean_abs_delta_32 == 0.0:
        return math.inf
    p_e = error_power_improved(sigma, cfg.period, stats, cfg.unit_current)
    return 10.0 * math.log10(signal_power(cfg) / p_e)


def sdr_wideband_previous(cfg: DacConfig, stats: DeltaStats, sigma: float) -> float:
    """Wideband SDR (dB) from the charge-spread error power; slope -20 dB/decade."""
    if sigma == 0.0 or stats.mean_abs_delta == 0.0:
        return math.inf
    p_e = error_power_previous(sigma, cfg.period, stats, cfg.unit_current)
    return 10.0 * math.log10(signal_power(cfg) / p_e)


def sdr_nyquist_previous(cfg: DacConfig, tone: ToneSpec, sigma: float) -> float:
    """Nyquist-band SDR (dB) for a low-frequency tone: A_1 / (8 f_1 f_s sigma^2).

    A_1 is the tone amplitude in LSB units.  Derived for f_1 much below
    f_s; a warning is logged above f_1/f_s = 0.1 where the low-frequency
    assumption starts to fray.
    """
    if sigma == 0.0:
        return math.inf
    if tone.frequency_ratio > 0.1:
        log.warning(
            "Nyquist-band prediction requested at f0/fs = %.3g, above its "
            "low-frequency validity range (f0/fs <= 0.1)",
            tone.frequency_ratio,
        )
    a1 = tone.resolve_amplitude(cfg)
    f1 = tone.frequency_ratio * cfg.sample_rate
    ratio = a1 / (8.0 * f1 * cfg.sample_rate * sigma**2)
    return 10.0 * math.log10(ratio)
