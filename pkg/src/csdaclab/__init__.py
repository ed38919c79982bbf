"""Behavioral simulation lab for timing mismatch in current-steering DACs."""

__version__ = "0.1.0"

from .core import (
    DacConfig,
    DigitalSequence,
    TimingErrorSet,
    ToneSpec,
    TransitionSet,
    binary_to_thermometer,
    default_warmup,
    draw_timing_errors,
    equivalent_timing_errors,
    generate_tone_codes,
)
from .waveform import (
    EDGE_MODES,
    EdgeEvent,
    OversampledWaveform,
    dump_waveform,
    error_pulse_train,
    extract_error,
    list_edge_events,
    period_charges,
    render_equivalent,
    render_ideal,
    render_percell,
)
from .spectral import (
    SdrReport,
    Spectrum,
    TransitionTrace,
    mean_power,
    nyquist_sdr,
    periodogram,
    transition_traces,
    wideband_sdr,
)
from .predictions import (
    DeltaStats,
    delta_stats,
    error_power_improved,
    error_power_previous,
    folded_normal_mean,
    sdr_nyquist_previous,
    sdr_wideband_improved,
    sdr_wideband_previous,
    signal_power,
)
from .experiments import (
    AggregateRecord,
    RunRecord,
    SweepPlan,
    capture_traces,
    derive_seed,
    run_point,
    run_sweep,
    write_aggregates_csv,
    write_records_csv,
    write_sidecar,
)

__all__ = [
    "__version__",
    "DacConfig",
    "ToneSpec",
    "DigitalSequence",
    "TimingErrorSet",
    "TransitionSet",
    "binary_to_thermometer",
    "generate_tone_codes",
    "draw_timing_errors",
    "equivalent_timing_errors",
    "default_warmup",
    "OversampledWaveform",
    "EdgeEvent",
    "EDGE_MODES",
    "render_ideal",
    "render_percell",
    "render_equivalent",
    "error_pulse_train",
    "extract_error",
    "list_edge_events",
    "period_charges",
    "dump_waveform",
    "Spectrum",
    "SdrReport",
    "TransitionTrace",
    "mean_power",
    "periodogram",
    "wideband_sdr",
    "nyquist_sdr",
    "transition_traces",
    "DeltaStats",
    "delta_stats",
    "folded_normal_mean",
    "signal_power",
    "error_power_previous",
    "error_power_improved",
    "sdr_wideband_improved",
    "sdr_wideband_previous",
    "sdr_nyquist_previous",
    "SweepPlan",
    "RunRecord",
    "AggregateRecord",
    "derive_seed",
    "run_point",
    "run_sweep",
    "capture_traces",
    "write_records_csv",
    "write_aggregates_csv",
    "write_sidecar",
]
