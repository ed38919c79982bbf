"""Command-line front end: closed-form predictions, sweeps, and traces.

Parameter precedence is command line over config file over built-in
defaults.  The config file is flat ``key = value`` text with ``#``
comments; keys match the long option names with dashes replaced by
underscores.  Frequencies and timing spreads are ratios (f0/fs and
sigma/Ts); absolute units only enter through an explicit sample rate in
the config file.
"""

from __future__ import annotations

import argparse
import os
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .core import DacConfig, ToneSpec, generate_tone_codes
from .experiments import (
    SweepPlan,
    capture_traces,
    run_sweep,
    sidecar_path,
    write_aggregates_csv,
    write_records_csv,
    write_sidecar,
)
from .predictions import (
    delta_stats,
    sdr_nyquist_previous,
    sdr_wideband_improved,
    sdr_wideband_previous,
)

OUTPUT_DIR_ENV = "CSDACLAB_OUTPUT_DIR"

EXIT_OK = 0
EXIT_RUNTIME = 1
EXIT_USAGE = 2

_SWEEP_VARS = {
    "sigma": "sigma_ratio",
    "freq": "frequency_ratio",
    "t-bits": "thermometer_bits",
}


class UsageError(Exception):
    """Invalid parameters or flags; maps to exit code 2."""


def load_config_file(path: str | Path) -> dict[str, str]:
    """Parse flat ``key = value`` lines; '#' starts a comment."""
    values: dict[str, str] = {}
    for lineno, raw in enumerate(Path(path).read_text(encoding="utf-8").splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise UsageError(f"{path}:{lineno}: expected 'key = value', got {raw!r}")
        key, value = line.split("=", 1)
        values[key.strip().replace("-", "_")] = value.strip()
    return values


class _Resolver:
    """Merges CLI values, config-file values, and defaults, and records
    the fully resolved set for the sidecar echo."""

    def __init__(self, args: argparse.Namespace):
        self.args = vars(args)
        self.file_values: dict[str, str] = {}
        path = self.args.get("config")
        if path:
            self.file_values = load_config_file(path)
        self.resolved: dict[str, object] = {}

    def get(self, key: str, default, cast=None):
        value = self.args.get(key)
        if value is None and key in self.file_values:
            raw = self.file_values[key]
            value = raw if cast is None else _safe_cast(key, raw, cast)
        if value is None:
            value = default
        self.resolved[key] = value
        return value


def _safe_cast(key, raw, cast):
    try:
        return cast(raw)
    except (TypeError, ValueError) as exc:
        raise UsageError(f"config value {key} = {raw!r}: {exc}") from None


def parse_grid(spec: str, integer: bool = False) -> tuple:
    """Grid syntax: 'lo:hi:linK', 'lo:hi:logK', 'lo:hi' (integer step 1),
    or an explicit comma list."""
    spec = spec.strip()
    if ":" in spec:
        parts = spec.split(":")
        if len(parts) == 2:
            lo, hi = (int(float(p)) for p in parts)
            if hi < lo:
                raise UsageError(f"grid range {spec!r} is empty")
            return tuple(range(lo, hi + 1))
        if len(parts) == 3:
            lo, hi = float(parts[0]), float(parts[1])
            kind, count = parts[2][:3], parts[2][3:]
            if kind not in ("lin", "log") or not count.isdigit():
                raise UsageError(f"grid step {parts[2]!r} must be linK or logK")
            n = int(count)
            if n < 1:
                raise UsageError("grid must have at least one point")
            if kind == "lin":
                values = np.linspace(lo, hi, n)
            else:
                if lo <= 0 or hi <= 0:
                    raise UsageError("log grids need positive endpoints")
                values = np.geomspace(lo, hi, n)
            values[0], values[-1] = lo, hi
            grid = tuple(float(v) for v in values)
            return tuple(int(v) for v in grid) if integer else grid
        raise UsageError(f"unrecognized grid spec {spec!r}")
    try:
        values = [float(tok) for tok in spec.split(",") if tok.strip()]
    except ValueError as exc:
        raise UsageError(f"bad grid value in {spec!r}: {exc}") from None
    if not values:
        raise UsageError("grid is empty")
    return tuple(int(v) for v in values) if integer else tuple(values)


def _split_list(raw, valid, what) -> tuple:
    items = tuple(tok.strip() for tok in raw.split(",") if tok.strip())
    for item in items:
        if item not in valid:
            raise UsageError(f"unknown {what} {item!r}; choose from {valid}")
    if not items:
        raise UsageError(f"no {what} selected")
    return items


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="csdaclab",
        description="Timing-mismatch simulation lab for current-steering DACs",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--config", help="flat key = value config file")
        p.add_argument("--out", help=f"output directory (default ${OUTPUT_DIR_ENV} or .)")
        p.add_argument("-v", "--verbose", action="store_true")
        p.add_argument("--m", type=int, dest="m", help="resolution in bits")
        p.add_argument("--t", type=int, dest="t", help="thermometer-decoded MSBs (default m)")
        p.add_argument("--f0", type=float, help="tone frequency ratio f0/fs")
        p.add_argument("--sigma-ratio", type=float, dest="sigma_ratio",
                       help="timing error spread sigma/Ts")
        p.add_argument("--codes", type=int, help="record length in codes")
        p.add_argument("--osr", type=int, help="oversampling ratio")
        p.add_argument("--amplitude", type=float, help="tone amplitude in LSB (default full scale)")
        p.add_argument("--phase", type=float, help="tone phase in radians")
        p.add_argument("--edge-mode", dest="edge_mode",
                       choices=["grid_round", "fractional_edge"],
                       help="sub-sample edge placement")

    predict = sub.add_parser("predict", help="closed-form SDR table")
    common(predict)
    predict.add_argument("--csv", help="also write the table as CSV")

    sweep = sub.add_parser("sweep", help="Monte Carlo sweep to CSV")
    common(sweep)
    sweep.add_argument("--var", choices=sorted(_SWEEP_VARS), help="sweep variable")
    sweep.add_argument("--grid", help="grid: lo:hi:linK | lo:hi:logK | lo:hi | v1,v2,...")
    sweep.add_argument("--runs", type=int, help="independent seeds per grid point")
    sweep.add_argument("--models", help="comma list from: equivalent,percell")
    sweep.add_argument("--bands", help="comma list from: wideband,nyquist")
    sweep.add_argument("--base-seed", type=int, dest="base_seed")
    sweep.add_argument("--warmup", type=int, help="warm-up codes (default one tone period)")
    sweep.add_argument("--jobs", type=int, help="worker processes (default 1)")
    sweep.add_argument("--paper-faithful", action="store_true",
                       help="preset: osr 4096 with grid-snapped edges")

    traces = sub.add_parser("traces", help="squared-error traces around transitions")
    common(traces)
    traces.add_argument("--seed", type=int, help="draw seed (default 1)")
    traces.add_argument("--model", choices=["equivalent", "percell"])
    traces.add_argument("--window-ticks", type=int, dest="window_ticks")
    traces.add_argument("--transitions",
                        help="'auto', 'all', or comma list of transition indices")
    return parser


def _resolve_common(res: _Resolver):
    m = res.get("m", 8, int)
    t = res.get("t", None, int)
    f0 = res.get("f0", 0.01, float)
    codes = res.get("codes", 1000, int)
    osr = res.get("osr", 1024, int)
    amplitude = res.get("amplitude", None, float)
    phase = res.get("phase", 0.0, float)
    sample_rate = res.get("sample_rate", 1.0, float)
    unit_current = res.get("unit_current", 1.0, float)
    try:
        cfg = DacConfig(
            resolution_bits=m,
            thermometer_bits=t,
            unit_current=unit_current,
            sample_rate=sample_rate,
            oversampling_ratio=osr,
        )
        tone = ToneSpec(
            frequency_ratio=f0, record_length=codes, amplitude=amplitude, phase=phase
        )
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    return cfg, tone


def _output_dir(res: _Resolver) -> Path:
    out = res.get("out", None)
    if out is None:
        out = os.environ.get(OUTPUT_DIR_ENV, ".")
    path = Path(out)
    path.mkdir(parents=True, exist_ok=True)
    return path


def cmd_predict(args: argparse.Namespace) -> int:
    res = _Resolver(args)
    cfg, tone = _resolve_common(res)
    sigma_ratio = res.get("sigma_ratio", None, float)
    if sigma_ratio is None:
        raise UsageError("predict requires --sigma-ratio")
    if sigma_ratio <= 0:
        raise UsageError("sigma-ratio must be positive (SDR is unbounded at zero)")
    sigma = sigma_ratio * cfg.period

    # steady-state statistics: the record wraps, so the first delta is the
    # true periodic one rather than a start-up jump
    seq = generate_tone_codes(cfg, tone, initial_code="wrap")
    stats = delta_stats(seq)
    rows = [
        ("mean_abs_delta", stats.mean_abs_delta),
        ("mean_abs_delta_32", stats.mean_abs_delta_32),
        ("sdr_wideband_improved_db", sdr_wideband_improved(cfg, stats, sigma)),
        ("sdr_wideband_previous_db", sdr_wideband_previous(cfg, stats, sigma)),
        ("sdr_nyquist_previous_db", sdr_nyquist_previous(cfg, tone, sigma)),
    ]

    width = max(len(name) for name, _ in rows)
    print(f"m={cfg.resolution_bits} t={cfg.thermometer_bits} "
          f"f0/fs={tone.frequency_ratio:.9g} sigma/Ts={sigma_ratio:.9g} "
          f"codes={tone.record_length}")
    for name, value in rows:
        print(f"  {name:<{width}}  {value:.4f}")
    if tone.frequency_ratio > 0.1:
        print("  note: nyquist prediction beyond its low-frequency validity range")

    csv_path = res.get("csv", None)
    if csv_path:
        lines = ["metric,value"] + [f"{n},{v:.9g}" for n, v in rows]
        Path(csv_path).write_text("\n".join(lines) + "\n", encoding="utf-8")
        if args.verbose:
            print(f"wrote {csv_path}")
    return EXIT_OK


def cmd_sweep(args: argparse.Namespace) -> int:
    res = _Resolver(args)
    cfg, tone = _resolve_common(res)
    var_key = res.get("var", None)
    if var_key is None:
        raise UsageError("sweep requires --var (sigma | freq | t-bits)")
    if var_key not in _SWEEP_VARS:
        raise UsageError(f"unknown sweep variable {var_key!r}")
    sweep_var = _SWEEP_VARS[var_key]
    grid_spec = res.get("grid", None)
    if grid_spec is None:
        raise UsageError("sweep requires --grid")
    grid = parse_grid(grid_spec, integer=(sweep_var == "thermometer_bits"))

    if sweep_var == "frequency_ratio":
        # snap to coherent ratios so every grid point fits an integer cycle count
        snapped = []
        for v in grid:
            coherent = round(v * tone.record_length) / tone.record_length
            if coherent != v:
                print(f"note: snapped f0/fs {v:.9g} to coherent {coherent:.9g}",
                      file=sys.stderr)
            snapped.append(coherent)
        grid = tuple(snapped)

    models = _split_list(res.get("models", "percell"), ("equivalent", "percell"), "model")
    bands = _split_list(res.get("bands", "wideband"), ("wideband", "nyquist"), "band")
    sigma_ratio = res.get("sigma_ratio", 1e-3, float)
    runs = res.get("runs", 50, int)
    base_seed = res.get("base_seed", 1, int)
    edge_mode = res.get("edge_mode", "fractional_edge")
    warmup = res.get("warmup", None, int)
    jobs = res.get("jobs", 1, int)
    if res.get("paper_faithful", False):
        cfg = DacConfig(
            resolution_bits=cfg.resolution_bits,
            thermometer_bits=cfg.thermometer_bits,
            unit_current=cfg.unit_current,
            sample_rate=cfg.sample_rate,
            oversampling_ratio=4096,
        )
        edge_mode = "grid_round"
        res.resolved["osr"] = 4096
        res.resolved["edge_mode"] = edge_mode

    try:
        plan = SweepPlan(
            sweep_var=sweep_var,
            grid=grid,
            cfg=cfg,
            tone=tone,
            sigma_ratio=sigma_ratio,
            runs=runs,
            models=models,
            bands=bands,
            base_seed=base_seed,
            edge_mode=edge_mode,
            warmup=warmup,
        )
    except ValueError as exc:
        raise UsageError(str(exc)) from None

    out_dir = _output_dir(res)
    records, aggregates = run_sweep(plan, parallelism=max(1, jobs))
    records_path = out_dir / "records.csv"
    aggregates_path = out_dir / "aggregates.csv"
    write_records_csv(records, records_path)
    write_aggregates_csv(aggregates, aggregates_path)
    write_sidecar(plan, records_path)
    write_sidecar(plan, aggregates_path)
    print(f"wrote {len(records)} records to {records_path}")
    print(f"wrote {len(aggregates)} aggregates to {aggregates_path}")
    return EXIT_OK


def cmd_traces(args: argparse.Namespace) -> int:
    res = _Resolver(args)
    cfg, tone = _resolve_common(res)
    sigma_ratio = res.get("sigma_ratio", 1e-3, float)
    if sigma_ratio < 0:
        raise UsageError("sigma-ratio must be nonnegative")
    seed = res.get("seed", 1, int)
    model = res.get("model", "percell")
    edge_mode = res.get("edge_mode", "fractional_edge")
    window = res.get("window_ticks", cfg.oversampling_ratio // 2, int)
    selection_raw = res.get("transitions", "auto")

    sigma = sigma_ratio * cfg.period
    try:
        all_traces = capture_traces(
            cfg, tone, sigma, seed, model,
            transitions=None, window_ticks=window, edge_mode=edge_mode,
        )
        if selection_raw == "all":
            traces = all_traces
        elif selection_raw == "auto":
            # one representative per |dx| class, largest steps first
            by_mag: dict[int, object] = {}
            for tr in all_traces:
                by_mag.setdefault(abs(tr.delta), tr)
            traces = [by_mag[k] for k in sorted(by_mag, reverse=True)][:8]
        else:
            picks = [int(tok) for tok in str(selection_raw).split(",") if tok.strip()]
            traces = capture_traces(
                cfg, tone, sigma, seed, model,
                transitions=picks, window_ticks=window, edge_mode=edge_mode,
            )
    except ValueError as exc:
        raise UsageError(str(exc)) from None

    out_dir = _output_dir(res)
    path = out_dir / "traces.csv"
    lines = ["transition_id,delta_x,t_offset_s,squared_error"]
    for tr in traces:
        for t_off, sq in zip(tr.t_offsets, tr.squared_error):
            lines.append(f"{tr.index},{tr.delta},{t_off:.9g},{sq:.9g}")
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")

    meta = sidecar_path(path)
    items = {
        "tool_version": __version__,
        "m_bits": cfg.resolution_bits,
        "t_bits": cfg.thermometer_bits,
        "osr": cfg.oversampling_ratio,
        "f0_over_fs": f"{tone.frequency_ratio:.9g}",
        "record_codes": tone.record_length,
        "sigma_over_ts": f"{sigma_ratio:.9g}",
        "seed": seed,
        "model": model,
        "edge_mode": edge_mode,
        "window_ticks": window,
        "transitions": selection_raw,
    }
    meta.write_text("\n".join(f"{k} = {v}" for k, v in items.items()) + "\n",
                    encoding="utf-8")
    print(f"wrote {len(traces)} traces to {path}")
    return EXIT_OK


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    handlers = {"predict": cmd_predict, "sweep": cmd_sweep, "traces": cmd_traces}
    try:
        return handlers[args.command](args)
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (OSError, RuntimeError, ValueError) as exc:
        print(f"runtime failure: {exc}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
