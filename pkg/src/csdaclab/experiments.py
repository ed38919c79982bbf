"""Seeded Monte Carlo sweeps with confidence intervals and CSV output.

A sweep runs ``runs`` independent seeds at every grid point; each (grid
value, run) pair is a self-contained task, so the record set is identical
for any worker count and the emitted CSV files reproduce byte for byte.
Per-run seeds mix the grid value's bit pattern with the run index, which
keeps every point's random draws stable when more points are added.
"""

from __future__ import annotations

import dataclasses
import math
import struct
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, replace
from pathlib import Path

import numpy as np

from . import __version__
from .core import (
    DacConfig,
    DigitalSequence,
    ToneSpec,
    default_warmup,
    draw_timing_errors,
    equivalent_timing_errors,
    generate_tone_codes,
)
from .predictions import DeltaStats, delta_stats
from .spectral import SdrReport, nyquist_sdr, transition_traces, wideband_sdr
from .waveform import extract_error, render_equivalent, render_ideal, render_percell

SWEEP_VARIABLES = ("sigma_ratio", "frequency_ratio", "thermometer_bits")
MODELS = ("equivalent", "percell")
BANDS = ("wideband", "nyquist")

RECORD_HEADER = (
    "sweep_var,sweep_value,m_bits,t_bits,osr,f0_over_fs,sigma_over_ts,"
    "model,band,run,seed,sdr_db,signal_power,error_power"
)
AGGREGATE_HEADER = (
    "sweep_var,sweep_value,m_bits,t_bits,model,band,runs,sdr_db_mean,sdr_db_ci95"
)

_MASK64 = (1 << 64) - 1


def _mix64(x: int) -> int:
    """Finalizer of the splitmix64 generator; a 64-bit bijection."""
    x &= _MASK64
    x = ((x ^ (x >> 30)) * 0xBF58476D1CE4E5B9) & _MASK64
    x = ((x ^ (x >> 27)) * 0x94D049BB133111EB) & _MASK64
    return x ^ (x >> 31)


def derive_seed(base_seed: int, sweep_value: float, run: int) -> int:
    """Stable per-run seed: base_seed xor mix(value bits, run index)."""
    value_bits = struct.unpack("<Q", struct.pack("<d", float(sweep_value)))[0]
    h = _mix64(_mix64(value_bits) + run)
    return (base_seed ^ h) & _MASK64


@dataclass(frozen=True)
class RunRecord:
    """Outcome of one model/band measurement of one Monte Carlo run."""

    sweep_var: str
    sweep_value: float
    run: int
    seed: int
    model: str
    band: str
    sdr_db: float
    signal_power: float
    error_power: float
    unbounded: bool
    m_bits: int
    t_bits: int
    osr: int
    f0_over_fs: float
    sigma_over_ts: float
    mean_abs_delta: float
    mean_abs_delta_32: float


@dataclass(frozen=True)
class AggregateRecord:
    """Per grid point mean SDR and 95% confidence half-width over runs."""

    sweep_var: str
    sweep_value: float
    m_bits: int
    t_bits: int
    model: str
    band: str
    runs: int
    sdr_db_mean: float
    sdr_db_ci95: float


@dataclass(frozen=True)
class SweepPlan:
    """Specification of one Monte Carlo sweep."""

    sweep_var: str
    grid: tuple
    cfg: DacConfig
    tone: ToneSpec
    sigma_ratio: float = 1e-3
    runs: int = 50
    models: tuple = ("percell",)
    bands: tuple = ("wideband",)
    base_seed: int = 1
    edge_mode: str = "fractional_edge"
    warmup: int | None = None

    def __post_init__(self):
        if self.sweep_var not in SWEEP_VARIABLES:
            raise ValueError(f"sweep_var must be one of {SWEEP_VARIABLES}")
        grid = tuple(self.grid)
        object.__setattr__(self, "grid", grid)
        if not grid:
            raise ValueError("sweep grid is empty")
        diffs = np.diff(np.asarray(grid, dtype=np.float64))
        if len(grid) > 1 and not (np.all(diffs > 0) or np.all(diffs < 0)):
            raise ValueError("sweep grid must be strictly monotone")
        if self.runs < 2:
            raise ValueError("runs must be at least 2 for confidence intervals")
        models = tuple(self.models)
        bands = tuple(self.bands)
        object.__setattr__(self, "models", models)
        object.__setattr__(self, "bands", bands)
        if not models or any(m not in MODELS for m in models):
            raise ValueError(f"models must be a nonempty subset of {MODELS}")
        if not bands or any(b not in BANDS for b in bands):
            raise ValueError(f"bands must be a nonempty subset of {BANDS}")
        # fail plan assembly early for combinations run_point would reject
        for value in grid:
            cfg, tone, _ = self.resolve(value)
            if "equivalent" in models and not cfg.is_fully_segmented:
                raise ValueError(
                    "the equivalent-timing-error model supports fully segmented "
                    f"configurations only (t_bits={cfg.thermometer_bits} < "
                    f"m_bits={cfg.resolution_bits} at sweep value {value})"
                )

    def resolve(self, value) -> tuple[DacConfig, ToneSpec, float]:
        """Configuration, tone, and sigma (seconds) at one grid value."""
        cfg, tone = self.cfg, self.tone
        sigma_ratio = self.sigma_ratio
        if self.sweep_var == "sigma_ratio":
            sigma_ratio = float(value)
        elif self.sweep_var == "frequency_ratio":
            tone = replace(tone, frequency_ratio=float(value))
        else:
            t = int(value)
            if t != value or not 0 <= t <= cfg.resolution_bits:
                raise ValueError(
                    f"thermometer_bits sweep value {value} must be an integer "
                    f"in [0, {cfg.resolution_bits}]"
                )
            cfg = replace(cfg, thermometer_bits=t)
        if sigma_ratio < 0:
            raise ValueError("sigma ratio must be nonnegative")
        return cfg, tone, sigma_ratio * cfg.period


def _simulate(cfg, tone, sigma, seed, models, bands, edge_mode, warmup):
    """One seeded run: reports for every requested (model, band) pair."""
    if warmup is None:
        warmup = default_warmup(tone)
    seq = generate_tone_codes(cfg, tone, warmup=warmup)
    taus = draw_timing_errors(cfg, sigma, seed)
    ideal = render_ideal(cfg, seq)
    ideal_a = ideal.drop_codes(warmup) if warmup else ideal
    stats = delta_stats(seq.drop_warmup())

    reports: dict[tuple[str, str], SdrReport] = {}
    for model in models:
        if model == "equivalent":
            trans = equivalent_timing_errors(seq, taus)
            nonideal = render_equivalent(cfg, seq, trans, edge_mode)
        elif model == "percell":
            nonideal = render_percell(cfg, seq, taus, edge_mode)
        else:
            raise ValueError(f"unknown model {model!r}")
        nonideal_a = nonideal.drop_codes(warmup) if warmup else nonideal
        error = extract_error(nonideal_a, ideal_a)
        for band in bands:
            fn = wideband_sdr if band == "wideband" else nyquist_sdr
            reports[(model, band)] = fn(ideal_a, error)
    return reports, stats


def run_point(
    cfg: DacConfig,
    tone: ToneSpec,
    sigma: float,
    seed: int,
    model: str,
    band: str,
    edge_mode: str = "fractional_edge",
    warmup: int | None = None,
    sweep_var: str = "",
    sweep_value: float = math.nan,
    run: int = 0,
) -> RunRecord:
    """Execute one seeded simulation and measure one model in one band."""
    if model not in MODELS:
        raise ValueError(f"model must be one of {MODELS}")
    if band not in BANDS:
        raise ValueError(f"band must be one of {BANDS}")
    if model == "equivalent" and not cfg.is_fully_segmented:
        raise ValueError(
            "the equivalent-timing-error model supports fully segmented "
            "configurations only; use the per-cell model"
        )
    reports, stats = _simulate(cfg, tone, sigma, seed, (model,), (band,), edge_mode, warmup)
    rep = reports[(model, band)]
    return RunRecord(
        sweep_var=sweep_var,
        sweep_value=sweep_value,
        run=run,
        seed=seed,
        model=model,
        band=band,
        sdr_db=rep.sdr_db,
        signal_power=rep.signal_power,
        error_power=rep.error_power,
        unbounded=rep.unbounded,
        m_bits=cfg.resolution_bits,
        t_bits=cfg.thermometer_bits,
        osr=cfg.oversampling_ratio,
        f0_over_fs=tone.frequency_ratio,
        sigma_over_ts=sigma * cfg.sample_rate,
        mean_abs_delta=stats.mean_abs_delta,
        mean_abs_delta_32=stats.mean_abs_delta_32,
    )


def _sweep_task(plan: SweepPlan, grid_index: int, run: int) -> list[RunRecord]:
    """All records of one (grid point, run): one draw shared by all models."""
    value = plan.grid[grid_index]
    cfg, tone, sigma = plan.resolve(value)
    seed = derive_seed(plan.base_seed, value, run)
    reports, stats = _simulate(
        cfg, tone, sigma, seed, plan.models, plan.bands, plan.edge_mode, plan.warmup
    )
    records = []
    for model in plan.models:
        for band in plan.bands:
            rep = reports[(model, band)]
            records.append(
                RunRecord(
                    sweep_var=plan.sweep_var,
                    sweep_value=float(value),
                    run=run,
                    seed=seed,
                    model=model,
                    band=band,
                    sdr_db=rep.sdr_db,
                    signal_power=rep.signal_power,
                    error_power=rep.error_power,
                    unbounded=rep.unbounded,
                    m_bits=cfg.resolution_bits,
                    t_bits=cfg.thermometer_bits,
                    osr=cfg.oversampling_ratio,
                    f0_over_fs=tone.frequency_ratio,
                    sigma_over_ts=sigma * cfg.sample_rate,
                    mean_abs_delta=stats.mean_abs_delta,
                    mean_abs_delta_32=stats.mean_abs_delta_32,
                )
            )
    return records


def run_sweep(
    plan: SweepPlan, parallelism: int = 1
) -> tuple[list[RunRecord], list[AggregateRecord]]:
    """Execute every (grid point, run) task and aggregate per grid point.

    Results are merged in a deterministic order, so the output does not
    depend on ``parallelism``.  Unbounded-SDR records (zero error power)
    are kept in the record list but excluded from aggregation; the
    aggregate ``runs`` column counts the records actually averaged.
    """
    tasks = [(g, r) for g in range(len(plan.grid)) for r in range(plan.runs)]
    results: dict[tuple[int, int], list[RunRecord]] = {}
    if parallelism <= 1:
        for g, r in tasks:
            try:
                results[(g, r)] = _sweep_task(plan, g, r)
            except Exception as exc:
                raise RuntimeError(
                    f"sweep failed at {plan.sweep_var}={plan.grid[g]} run {r}: {exc}"
                ) from exc
    else:
        with ProcessPoolExecutor(max_workers=parallelism) as pool:
            futures = {
                pool.submit(_sweep_task, plan, g, r): (g, r) for g, r in tasks
            }
            for fut, (g, r) in futures.items():
                try:
                    results[(g, r)] = fut.result()
                except Exception as exc:
                    raise RuntimeError(
                        f"sweep failed at {plan.sweep_var}={plan.grid[g]} run {r}: {exc}"
                    ) from exc

    # canonical order: grid point, then model, band, run; each task list is
    # already model-major/band-minor, so records can be indexed directly
    n_bands = len(plan.bands)
    records = []
    for g in range(len(plan.grid)):
        for mi in range(len(plan.models)):
            for bi in range(n_bands):
                for r in range(plan.runs):
                    records.append(results[(g, r)][mi * n_bands + bi])

    aggregates = []
    for g, value in enumerate(plan.grid):
        cfg, _, _ = plan.resolve(value)
        for mi, model in enumerate(plan.models):
            for bi, band in enumerate(plan.bands):
                sdrs = [
                    rec.sdr_db
                    for r in range(plan.runs)
                    for rec in [results[(g, r)][mi * n_bands + bi]]
                    if not rec.unbounded
                ]
                n = len(sdrs)
                if n == 0:
                    mean, ci = math.nan, math.nan
                elif n == 1:
                    mean, ci = sdrs[0], math.nan
                else:
                    mean = float(np.mean(sdrs))
                    ci = 1.96 * float(np.std(sdrs, ddof=1)) / math.sqrt(n)
                aggregates.append(
                    AggregateRecord(
                        sweep_var=plan.sweep_var,
                        sweep_value=float(value),
                        m_bits=cfg.resolution_bits,
                        t_bits=cfg.thermometer_bits,
                        model=model,
                        band=band,
                        runs=n,
                        sdr_db_mean=mean,
                        sdr_db_ci95=ci,
                    )
                )
    return records, aggregates


def capture_traces(
    cfg: DacConfig,
    tone: ToneSpec,
    sigma: float,
    seed: int,
    model: str,
    transitions=None,
    window_ticks: int | None = None,
    edge_mode: str = "fractional_edge",
    warmup: int | None = None,
):
    """Aligned squared-error traces for selected transitions of one run.

    Transition indices refer to the analyzed record (after warm-up).
    ``transitions=None`` keeps every nonzero transition whose window fits.
    """
    if model not in MODELS:
        raise ValueError(f"model must be one of {MODELS}")
    if model == "equivalent" and not cfg.is_fully_segmented:
        raise ValueError(
            "the equivalent-timing-error model supports fully segmented "
            "configurations only; use the per-cell model"
        )
    if warmup is None:
        warmup = default_warmup(tone)
    if window_ticks is None:
        window_ticks = cfg.oversampling_ratio // 2
    seq = generate_tone_codes(cfg, tone, warmup=warmup)
    taus = draw_timing_errors(cfg, sigma, seed)
    ideal = render_ideal(cfg, seq)
    if model == "equivalent":
        trans = equivalent_timing_errors(seq, taus)
        nonideal = render_equivalent(cfg, seq, trans, edge_mode)
    else:
        nonideal = render_percell(cfg, seq, taus, edge_mode)
    error = extract_error(nonideal, ideal)
    if warmup:
        error = error.drop_codes(warmup)
    return transition_traces(error, seq.drop_warmup(), window_ticks, transitions)


def _fmt(x: float) -> str:
    return f"{x:.9g}"


def write_records_csv(records: list[RunRecord], path: str | Path):
    lines = [RECORD_HEADER]
    for r in records:
        lines.append(
            ",".join(
                [
                    r.sweep_var,
                    _fmt(r.sweep_value),
                    str(r.m_bits),
                    str(r.t_bits),
                    str(r.osr),
                    _fmt(r.f0_over_fs),
                    _fmt(r.sigma_over_ts),
                    r.model,
                    r.band,
                    str(r.run),
                    str(r.seed),
                    _fmt(r.sdr_db),
                    _fmt(r.signal_power),
                    _fmt(r.error_power),
                ]
            )
        )
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


def write_aggregates_csv(aggregates: list[AggregateRecord], path: str | Path):
    lines = [AGGREGATE_HEADER]
    for a in aggregates:
        lines.append(
            ",".join(
                [
                    a.sweep_var,
                    _fmt(a.sweep_value),
                    str(a.m_bits),
                    str(a.t_bits),
                    a.model,
                    a.band,
                    str(a.runs),
                    _fmt(a.sdr_db_mean),
                    _fmt(a.sdr_db_ci95),
                ]
            )
        )
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


def sidecar_path(csv_path: str | Path) -> Path:
    csv_path = Path(csv_path)
    return csv_path.with_name(csv_path.stem + ".meta.txt")


def write_sidecar(plan: SweepPlan, csv_path: str | Path, extra: dict | None = None):
    """Echo the fully resolved parameter set next to a CSV output.

    Worker count is deliberately absent: the records are invariant to it,
    so the sidecar alone reproduces the file byte for byte.
    """
    cfg, tone = plan.cfg, plan.tone
    resolved_warmup = plan.warmup if plan.warmup is not None else default_warmup(tone)
    items = {
        "tool_version": __version__,
        "sweep_var": plan.sweep_var,
        "grid": ",".join(_fmt(float(v)) for v in plan.grid),
        "m_bits": cfg.resolution_bits,
        "t_bits": cfg.thermometer_bits,
        "osr": cfg.oversampling_ratio,
        "unit_current": _fmt(cfg.unit_current),
        "sample_rate": _fmt(cfg.sample_rate),
        "f0_over_fs": _fmt(tone.frequency_ratio),
        "amplitude": "full_scale" if tone.amplitude is None else _fmt(tone.amplitude),
        "phase": _fmt(tone.phase),
        "record_codes": tone.record_length,
        "sigma_over_ts": _fmt(plan.sigma_ratio),
        "runs": plan.runs,
        "models": ",".join(plan.models),
        "bands": ",".join(plan.bands),
        "base_seed": plan.base_seed,
        "edge_mode": plan.edge_mode,
        "warmup_codes": resolved_warmup,
    }
    if extra:
        items.update(extra)
    lines = [f"{k} = {v}" for k, v in items.items()]
    sidecar_path(csv_path).write_text("\n".join(lines) + "\n", encoding="utf-8")
