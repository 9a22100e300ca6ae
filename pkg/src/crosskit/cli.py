"""``crosskit`` command line: simulate, fit, mu, sweep, report.

Failures print one line ``error: <category>: <message>`` to stderr and
exit with the category's code (see :data:`EXIT_CODES`).
"""

from __future__ import annotations

import argparse
import math
import os
import sys
import warnings
from dataclasses import replace
from pathlib import Path

import numpy as np

from . import __version__
from .config import RunConfig, echo_config, parse_config, parse_range
from .dynamics import RabiTrace, cr_carrier, dressed_basis, simulate_cr_rabi
from .errors import ConfigError, MethodMismatchWarning, NumericalError, ResonancePole, SchemaError
from .pipeline import (
    auto_durations,
    curves_from_traces,
    detuning_sweep,
    lab_frame_check,
)
from .perturbation import cr_coefficients, mu_closed_form, validity_check
from .report import render_report
from .tables import (
    JEFF_COLUMNS,
    MU_COLUMNS,
    SATURATION_COLUMNS,
    SWEEP_MU_COLUMNS,
    TRACE_COLUMNS,
    TRACE_REQUIRED,
    float_column,
    read_csv,
    write_csv,
)

__all__ = ["main", "EXIT_CODES"]

CONFIG_ENV = "CROSSKIT_CONFIG"
EXIT_CODES = {"config": 2, "numerical": 3, "io": 4, "schema": 5}


class UsageError(ConfigError):
    pass


def _load_config(args) -> RunConfig:
    path = args.config or os.environ.get(CONFIG_ENV)
    if not path:
        raise UsageError(f"no config given (use --config or set {CONFIG_ENV})")
    cfg = parse_config(Path(path).read_text())
    if args.seed is not None:
        cfg = cfg.with_seed(args.seed)
    return cfg


def _base_device(cfg: RunConfig):
    return cfg.device(None if cfg.omega1_mhz is not None else 0.0)


# -- row builders ------------------------------------------------------------

def trace_rows(traces):
    for tr in traces:
        for t, p, q in zip(tr.durations, tr.p_excited, tr.p_leakage):
            yield (tr.delta, tr.amplitude, tr.control_state, t, p, q)


def jeff_rows(curves):
    nan = math.nan
    for delta, curve in curves.items():
        for p in curve.points:
            yield ("point", delta, p.amplitude, p.jeff, p.ci95, p.f_pi, p.f_0, nan, nan, nan, nan, 0)
        sat = curve.saturation
        yield (
            "summary", delta, nan, nan, nan, nan, nan,
            curve.slope, curve.slope_ci95,
            sat.level if sat else nan, sat.ci95 if sat else nan,
            curve.prefix_len,
        )


def _traces_from_csv(path) -> tuple[list, int]:
    cols, seed = read_csv(path, TRACE_REQUIRED)
    delta = float_column(cols, "delta_mhz")
    amp = float_column(cols, "amplitude")
    ctrl = float_column(cols, "control_state")
    dur = float_column(cols, "duration_ns")
    pex = float_column(cols, "p_excited")
    leak = float_column(cols, "p_leakage") if "p_leakage" in cols else np.zeros_like(pex)
    if not np.all(np.isin(ctrl, (0.0, 1.0))):
        raise SchemaError(f"{path}: control_state must be 0 or 1")
    traces = []
    keys = np.stack([delta, amp, ctrl], axis=1)
    uniq = np.unique(keys, axis=0)
    for d, a, c in uniq:
        m = (delta == d) & (amp == a) & (ctrl == c)
        order = np.argsort(dur[m], kind="stable")
        traces.append(RabiTrace(amplitude=float(a), control_state=int(c), durations=dur[m][order],
                                p_excited=pex[m][order], p_leakage=leak[m][order], delta=float(d)))
    return traces, (seed if seed is not None else 0)


# -- subcommands -------------------------------------------------------------

def cmd_simulate(args) -> int:
    cfg = _load_config(args)
    if args.tmax_ns is not None:
        cfg = replace(cfg, tmax_ns=args.tmax_ns)
    if args.dt_ns is not None:
        cfg = replace(cfg, dt_ns=args.dt_ns)
    settings = cfg.sweep_settings()
    amps = parse_range(args.amplitudes) if args.amplitudes else cfg.amplitude_grid()
    device = cfg.device(args.delta)
    dressing = dressed_basis(device)
    carrier = cr_carrier(device, settings.control_mode, dressing, settings.carrier_reference)
    fixed = cfg.durations()
    rate = None
    if fixed is None:
        m0, m1 = cr_coefficients(device, "numeric", settings.control_mode, cfg.pole_guard_mhz,
                                 cfg.levels + 1).conditional
        k = abs(cfg.crosstalk)
        rate = max(abs(m0 + k), abs(m1 + k), abs(m0 - k), abs(m1 - k))
    traces = []
    for amp in amps:
        grid = fixed if fixed is not None else auto_durations(amp, rate, settings)
        for c in (False, True):
            traces.append(simulate_cr_rabi(device, amp, grid, c, control_mode=settings.control_mode,
                                           carrier=carrier, crosstalk=cfg.crosstalk, dressing=dressing))
    write_csv(args.out, TRACE_COLUMNS, trace_rows(traces), cfg.seed)
    if cfg.lab_validation:
        err = lab_frame_check(device, settings=settings)
        print(f"lab-frame check: max population difference {err:.3g}", file=sys.stderr)
    return 0


def cmd_fit(args) -> int:
    traces, seed = _traces_from_csv(args.traces)
    curves = curves_from_traces(traces)
    write_csv(args.out, JEFF_COLUMNS, jeff_rows(curves), seed)
    for curve in curves.values():
        for line in curve.diagnostics:
            print(line, file=sys.stderr)
    return 0


def _mu_row(cfg: RunConfig, delta: float, method: str):
    device = cfg.device(delta)
    guard = cfg.pole_guard_mhz
    flags = [
        f"pole:{d.name}" if d.kind == "pole" else "strong-coupling"
        for d in validity_check(device, guard)
        if d.flagged
    ]
    out = {"closed": math.nan, "h1": math.nan, "h2": math.nan, "numeric": math.nan}
    jobs = {
        "closed": ("closed-form", lambda: mu_closed_form(device, guard)),
        "h1": ("matrix-element", lambda: cr_coefficients(device, "matrix-element", 1, guard).mu),
        "h2": ("matrix-element", lambda: cr_coefficients(device, "matrix-element", 2, guard).mu),
        "numeric": ("numeric", lambda: cr_coefficients(device, "numeric", 2, guard, cfg.levels + 1).mu),
    }
    for key, (name, fn) in jobs.items():
        if method not in ("all", name):
            continue
        with warnings.catch_warnings(record=True) as caught:
            warnings.simplefilter("always", MethodMismatchWarning)
            try:
                out[key] = fn()
            except ResonancePole:
                pass
            except NumericalError as exc:
                flags.append(f"{key}-failed:{type(exc).__name__}")
        if any(issubclass(w.category, MethodMismatchWarning) for w in caught):
            flags.append(f"mismatch-{key}")
    return (delta, out["closed"], out["h1"], out["h2"], out["numeric"], ";".join(dict.fromkeys(flags)))


def cmd_mu(args) -> int:
    cfg = _load_config(args)
    grid = parse_range(args.delta_range) if args.delta_range else cfg.delta_grid()
    rows = [_mu_row(cfg, d, args.method) for d in grid]
    write_csv(args.out, MU_COLUMNS, rows, cfg.seed)
    return 0


def cmd_sweep(args) -> int:
    cfg = _load_config(args)
    overrides = {}
    if args.deltas:
        overrides["deltas"] = args.deltas
    if args.amplitudes:
        overrides["amplitudes"] = args.amplitudes
    if args.workers is not None:
        overrides["workers"] = args.workers
    out = Path(args.out or cfg.output)
    overrides["output"] = str(out)
    cfg = replace(cfg, **overrides)
    parse_range(cfg.deltas)
    parse_range(cfg.amplitudes)
    out.mkdir(parents=True, exist_ok=True)
    (out / "config.txt").write_text(echo_config(cfg))
    settings = cfg.sweep_settings()
    base = _base_device(cfg)
    ckpt = out / "checkpoint" if args.resume else None
    result = detuning_sweep(base, cfg.delta_grid(), settings, checkpoint_dir=ckpt)

    traces = [tr for d in sorted(result.traces) for tr in result.traces[d]]
    write_csv(out / "traces.csv", TRACE_COLUMNS, trace_rows(traces), cfg.seed)
    write_csv(out / "jeff.csv", JEFF_COLUMNS, jeff_rows(result.curves), cfg.seed)
    write_csv(out / "mu.csv", SWEEP_MU_COLUMNS,
              ((p.delta, p.measured, p.ci95, p.theory, p.numeric) for p in result.mu.points), cfg.seed)
    sat = result.saturation
    write_csv(out / "saturation.csv", SATURATION_COLUMNS,
              ((p.delta, p.level, p.ci95, p.sign, int(p.level > sat.coupling_j + p.ci95)) for p in sat.points),
              cfg.seed)
    lines = [f"crosskit {__version__} seed={cfg.seed}"]
    lines += [f"excluded detuning {d:g} MHz (pole guard)" for d in result.excluded]
    sf = result.mu.scale_factor
    if sf is not None:
        lines.append(f"scale factor vs {result.mu.scale_reference} theory: {sf.scale!r} "
                     f"(ci95 {sf.ci95!r}, residual {sf.residual!r})")
    if cfg.lab_validation:
        err = lab_frame_check(base.with_detuning(cfg.delta_grid()[0]), settings=settings)
        lines.append(f"lab-frame check: max population difference {err!r}")
    lines += result.diagnostics
    (out / "diagnostics.txt").write_text("\n".join(lines) + "\n")
    return 0


def cmd_report(args) -> int:
    for path in render_report(args.directory):
        print(path)
    return 0


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="crosskit", description="Cross-resonance simulation and analysis.")
    p.add_argument("--version", action="version", version=f"crosskit {__version__}")
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp):
        sp.add_argument("--config", help=f"configuration file (default: ${CONFIG_ENV})")
        sp.add_argument("--seed", type=int, help="override the configured root seed")

    sp = sub.add_parser("simulate", help="Rabi traces at one detuning")
    common(sp)
    sp.add_argument("--delta", type=float, required=True, help="detuning omega1 - omega2 (MHz)")
    sp.add_argument("--amplitudes", help="amplitude range (MHz)")
    sp.add_argument("--tmax-ns", type=float, help="longest pulse (ns); default adapts per amplitude")
    sp.add_argument("--dt-ns", type=float, help="pulse-length step (ns)")
    sp.add_argument("--out", default="traces.csv")
    sp.set_defaults(func=cmd_simulate)

    sp = sub.add_parser("fit", help="J_eff from a traces CSV")
    sp.add_argument("traces")
    sp.add_argument("--out", default="jeff.csv")
    sp.set_defaults(func=cmd_fit)

    sp = sub.add_parser("mu", help="CR coefficient versus detuning")
    common(sp)
    sp.add_argument("--delta-range", help="detuning range (MHz)")
    sp.add_argument("--method", choices=("all", "closed-form", "matrix-element", "numeric"), default="all")
    sp.add_argument("--out", default="mu.csv")
    sp.set_defaults(func=cmd_mu)

    sp = sub.add_parser("sweep", help="amplitude sweeps over a detuning grid")
    common(sp)
    sp.add_argument("--deltas", help="detuning range (MHz)")
    sp.add_argument("--amplitudes", help="amplitude range (MHz)")
    sp.add_argument("--workers", type=int)
    sp.add_argument("--resume", action="store_true", help="keep per-detuning checkpoints and reuse them")
    sp.add_argument("--out", help="output directory")
    sp.set_defaults(func=cmd_sweep)

    sp = sub.add_parser("report", help="SVG plots of a sweep directory")
    sp.add_argument("directory")
    sp.set_defaults(func=cmd_report)
    return p


def _fail(category: str, message) -> int:
    text = " ".join(str(message).split())
    print(f"error: {category}: {text}", file=sys.stderr)
    return EXIT_CODES[category]


_VALUE_OPTIONS = {"--delta", "--amplitudes", "--deltas", "--delta-range", "--tmax-ns", "--dt-ns", "--seed"}


def _join_negative_values(argv):
    """Let ``--deltas -300:20:500`` through (argparse takes it for an option)."""
    out, i = [], 0
    while i < len(argv):
        tok = argv[i]
        nxt = argv[i + 1] if i + 1 < len(argv) else None
        if tok in _VALUE_OPTIONS and nxt and nxt[:1] in ("-", "−") and nxt[1:2].isdigit() | (nxt[1:2] == "."):
            out.append(f"{tok}={nxt}")
            i += 2
            continue
        out.append(tok)
        i += 1
    return out


def main(argv=None) -> int:
    argv = sys.argv[1:] if argv is None else list(argv)
    args = build_parser().parse_args(_join_negative_values(argv))
    try:
        return args.func(args)
    except ConfigError as exc:
        return _fail("config", exc)
    except SchemaError as exc:
        return _fail("schema", exc)
    except NumericalError as exc:
        return _fail("numerical", exc)
    except ValueError as exc:
        return _fail("config", exc)
    except OSError as exc:
        return _fail("io", exc)


if __name__ == "__main__":
    sys.exit(main())
