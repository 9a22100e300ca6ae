"""Sweeps over drive amplitude and detuning.

An amplitude sweep simulates both control states per amplitude, fits the
two Rabi traces and turns the frequency difference into J_eff; a detuning
sweep repeats that per detuning (moving mode 1 only) and collects the
linear-regime slopes (the CR coefficient) and saturation levels.
"""

from __future__ import annotations

import hashlib
import json
import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field, replace
from pathlib import Path

import numpy as np

from .dynamics import RabiTrace, cr_carrier, decoherence_envelope, dressed_basis, simulate_cr_rabi
from .errors import (
    CrosskitError,
    CurveRejected,
    DegenerateTheory,
    NoOscillation,
    NonConvergence,
    NumericalError,
)
from .fitting import JeffCurve, JeffPoint, compute_jeff, fit_damped_sinusoid
from .model import DeviceParams
from .perturbation import DEFAULT_POLE_GUARD, cr_coefficients, mu_closed_form, validity_check

__all__ = [
    "DEFAULT_AMPLITUDES",
    "DEFAULT_DELTAS",
    "SweepSettings",
    "MuPoint",
    "MuCurve",
    "SaturationPoint",
    "SaturationCurve",
    "ScaleFit",
    "SweepResult",
    "point_seed",
    "auto_durations",
    "jeff_from_traces",
    "curves_from_traces",
    "lab_frame_check",
    "amplitude_sweep",
    "detuning_sweep",
    "calibrate_scale_factor",
]

DEFAULT_AMPLITUDES = tuple(float(a) for a in np.geomspace(0.5, 250.0, 64))
DEFAULT_DELTAS = tuple(float(d) for d in np.arange(-300.0, 500.0 + 1e-9, 20.0))


@dataclass(frozen=True)
class SweepSettings:
    """Knobs shared by every point of a sweep.

    ``durations`` (ns) fixes the pulse-length grid; when ``None`` each
    amplitude gets ``n_samples`` lengths spanning ``periods`` of the fastest
    expected Rabi oscillation. ``crosstalk`` is the fraction of the CR tone
    reaching the target line directly.
    """

    amplitudes: tuple = DEFAULT_AMPLITUDES
    durations: tuple | None = None
    n_samples: int = 201
    periods: float = 5.0
    max_duration: float = 200_000.0
    crosstalk: float = 0.1
    max_leakage: float = 0.25
    carrier_reference: str = "mean"
    control_mode: int = 2
    levels: int = 4
    pole_guard: float = DEFAULT_POLE_GUARD
    t1_us: float | None = None
    t2_us: float | None = None
    shots: int = 0
    seed: int = 0
    workers: int = 1
    scale_reference: str = "numeric"


def point_seed(root: int, delta: float, amplitude: float, control_state: int) -> int:
    """Stable per-trace seed from the root seed and the trace key."""
    key = f"{int(root)}|{float(delta)!r}|{float(amplitude)!r}|{int(control_state)}"
    return int.from_bytes(hashlib.sha256(key.encode()).digest()[:8], "little")


def auto_durations(amplitude: float, rate_per_amp: float, settings: SweepSettings) -> np.ndarray:
    """Pulse-length grid (ns) covering ``settings.periods`` Rabi periods."""
    f = amplitude * rate_per_amp
    tmax = settings.max_duration if f <= 0 else min(settings.periods / f * 1e3, settings.max_duration)
    return np.linspace(0.0, tmax, settings.n_samples)


def _sample(trace: RabiTrace, shots: int, seed: int) -> RabiTrace:
    if shots <= 0:
        return trace
    rng = np.random.default_rng(seed)
    p = rng.binomial(shots, trace.p_excited) / shots
    return replace(trace, p_excited=p, meta={**trace.meta, "shots": shots})


def _fit_or_degenerate(durations, values, diagnostics, tag):
    try:
        return fit_damped_sinusoid(durations, values), True
    except NoOscillation as exc:
        diagnostics.append(f"{tag}: {exc}")
        return exc.result, False
    except (NonConvergence, ValueError) as exc:
        diagnostics.append(f"{tag}: {exc}")
        return None, False


def jeff_from_traces(trace_0: RabiTrace, trace_pi: RabiTrace, diagnostics=None, tag="") -> JeffPoint:
    """Fit both traces and combine their frequencies into a J_eff point.

    A point whose fits fail gets ``nan`` J_eff and infinite uncertainty.
    """
    diagnostics = diagnostics if diagnostics is not None else []
    amp = trace_0.amplitude
    if amp == 0:
        return JeffPoint(amplitude=0.0, jeff=0.0, ci95=0.0, f_pi=0.0, f_0=0.0, f_pi_ci95=0.0, f_0_ci95=0.0)
    fit0, ok0 = _fit_or_degenerate(trace_0.durations, trace_0.p_excited, diagnostics, f"{tag} control=0")
    fitpi, okpi = _fit_or_degenerate(trace_pi.durations, trace_pi.p_excited, diagnostics, f"{tag} control=1")
    if fit0 is None or fitpi is None or not (ok0 and okpi):
        return JeffPoint(amplitude=amp, jeff=math.nan, ci95=math.inf)
    return compute_jeff(fitpi, fit0, amplitude=amp)


@dataclass
class CurveResult:
    """An amplitude sweep: J_eff curve plus the traces it was fitted from."""

    curve: JeffCurve
    traces: list


def amplitude_sweep(
    device: DeviceParams,
    delta: float | None = None,
    amplitudes=None,
    durations=None,
    settings: SweepSettings | None = None,
) -> CurveResult:
    """J_eff versus CR amplitude at one detuning.

    ``delta`` (MHz) moves mode 1; ``None`` keeps the device as given.
    Raises :class:`CurveRejected` when fewer than 4 points could be fitted.
    """
    settings = settings or SweepSettings()
    if delta is not None:
        device = device.with_detuning(float(delta))
    device = device.with_levels((settings.levels, settings.levels))
    delta = device.detuning()
    amps = np.asarray(settings.amplitudes if amplitudes is None else amplitudes, dtype=float)
    if len(amps) < 6:
        raise ValueError("need at least 6 amplitudes")
    if np.any(np.diff(amps) < 0):
        raise ValueError("amplitudes must be ascending")
    if durations is None and settings.durations is not None:
        durations = settings.durations

    dressing = dressed_basis(device)
    carrier = cr_carrier(device, settings.control_mode, dressing, settings.carrier_reference)
    diagnostics: list[str] = []
    rate = 0.0
    if durations is None:
        coeff = cr_coefficients(device, "numeric", settings.control_mode, settings.pole_guard, settings.levels + 1)
        m0, m1 = coeff.conditional
        k = abs(settings.crosstalk)
        rate = max(abs(m0 + k), abs(m1 + k), abs(m0 - k), abs(m1 - k))

    points, traces = [], []
    for amp in amps:
        grid = auto_durations(amp, rate, settings) if durations is None else np.asarray(durations, dtype=float)
        pair = []
        for c in (0, 1):
            tr = simulate_cr_rabi(
                device, amp, grid, bool(c),
                control_mode=settings.control_mode,
                carrier=carrier,
                crosstalk=settings.crosstalk,
                dressing=dressing,
            )
            if settings.t1_us or settings.t2_us:
                tr = decoherence_envelope(tr, settings.t1_us or math.inf, settings.t2_us or math.inf)
            tr = _sample(tr, settings.shots, point_seed(settings.seed, delta, amp, c))
            pair.append(tr)
        traces.extend(pair)
        tag = f"delta={delta:g} amp={amp:g}"
        leak = max(float(tr.p_leakage.max()) for tr in pair)
        if leak > settings.max_leakage:
            diagnostics.append(f"{tag}: leakage {leak:.3f} exceeds {settings.max_leakage:g}, not fitted")
            points.append(JeffPoint(amplitude=float(amp), jeff=math.nan, ci95=math.inf))
            continue
        points.append(jeff_from_traces(pair[0], pair[1], diagnostics, tag))

    valid = [p for p in points if np.isfinite(p.jeff) and not math.isinf(p.ci95)]
    if len(valid) < 4:
        raise CurveRejected(f"delta={delta:g}: only {len(valid)} valid J_eff points")
    curve = JeffCurve(delta=delta, points=points, diagnostics=diagnostics).analyze()
    return CurveResult(curve=curve, traces=traces)


def curves_from_traces(traces) -> dict:
    """Fit J_eff curves from traces of any origin, keyed by detuning.

    Each (detuning, amplitude) needs one trace per control state. Detunings
    with fewer than 4 amplitudes get a curve with diagnostics but no fits.
    """
    groups: dict = {}
    for tr in traces:
        key = (math.nan if tr.delta is None else float(tr.delta), float(tr.amplitude))
        slot = groups.setdefault(key, [None, None])
        if slot[tr.control_state] is not None:
            raise ValueError(f"duplicate trace for delta={key[0]:g} amp={key[1]:g} control={tr.control_state}")
        slot[tr.control_state] = tr
    curves: dict = {}
    for delta in sorted({k[0] for k in groups}):
        diagnostics: list[str] = []
        points = []
        for (d, amp), (t0, t1) in sorted(groups.items()):
            if d != delta:
                continue
            tag = f"delta={delta:g} amp={amp:g}"
            if t0 is None or t1 is None:
                diagnostics.append(f"{tag}: missing control-state trace")
                continue
            points.append(jeff_from_traces(t0, t1, diagnostics, tag))
        curve = JeffCurve(delta=delta, points=points, diagnostics=diagnostics)
        if len(points) >= 4:
            curve.analyze()
        else:
            diagnostics.append(f"delta={delta:g}: only {len(points)} amplitudes, no curve fits")
        curves[delta] = curve
    return curves


def lab_frame_check(device: DeviceParams, amplitude: float = 2.0, duration: float = 20.0,
                    settings: SweepSettings | None = None, n: int = 5) -> float:
    """Largest target-population difference between lab-frame and RWA propagation."""
    settings = settings or SweepSettings()
    dressing = dressed_basis(device)
    carrier = cr_carrier(device, settings.control_mode, dressing, settings.carrier_reference)
    grid = np.linspace(0.0, duration, n)
    worst = 0.0
    for c in (False, True):
        kw = dict(control_mode=settings.control_mode, carrier=carrier, crosstalk=settings.crosstalk, dressing=dressing)
        lab = simulate_cr_rabi(device, amplitude, grid, c, frame="lab", **kw)
        rwa = simulate_cr_rabi(device, amplitude, grid, c, **kw)
        worst = max(worst, float(np.max(np.abs(lab.p_excited - rwa.p_excited))))
    return worst


def calibrate_scale_factor(measured, theory, sigma=None):
    """Weighted least-squares ``s`` minimizing ``sum w (measured - s * theory)^2``."""
    m = np.asarray(measured, dtype=float)
    t = np.asarray(theory, dtype=float)
    if m.shape != t.shape or m.ndim != 1 or len(m) < 2:
        raise ValueError("measured and theory must be equal-length sequences of at least 2")
    if sigma is None:
        w = np.ones_like(m)
    else:
        s = np.asarray(sigma, dtype=float)
        w = np.where((s > 0) & np.isfinite(s), 1.0 / np.where(s > 0, s, 1.0) ** 2, 0.0)
        if not np.any(w):
            w = np.ones_like(m)
    stt = np.sum(w * t * t)
    if stt == 0:
        raise DegenerateTheory("theory values are all zero")
    scale = float(np.sum(w * m * t) / stt)
    r = m - scale * t
    residual = float(math.sqrt(np.sum(w * r * r) / np.sum(w)))
    dof = max(len(m) - 1, 1)
    ci = float(1.96 * math.sqrt(np.sum(w * r * r) / dof / stt))
    return ScaleFit(scale=scale, residual=residual, ci95=ci)


@dataclass(frozen=True)
class ScaleFit:
    scale: float
    residual: float
    ci95: float


@dataclass(frozen=True)
class MuPoint:
    delta: float
    measured: float
    ci95: float
    theory: float
    numeric: float


@dataclass
class MuCurve:
    """Measured (fitted) CR slopes versus detuning next to the theory curves.

    ``theory`` is the closed-form participation ratio, ``numeric`` the
    exact-dressing coefficient for the simulated drive configuration;
    ``scale_factor`` maps theory to measured (``scale_reference`` says which).
    """

    points: list
    scale_factor: ScaleFit | None = None
    scale_reference: str = "numeric"


@dataclass(frozen=True)
class SaturationPoint:
    delta: float
    level: float
    ci95: float
    sign: int


@dataclass
class SaturationCurve:
    points: list
    coupling_j: float
    anh_control: float
    violations: list = field(default_factory=list)

    @property
    def reference_lines(self) -> dict:
        return {"delta_zero": 0.0, "delta_anharmonic": -self.anh_control, "coupling_j": self.coupling_j}


@dataclass
class SweepResult:
    curves: dict
    traces: dict
    mu: MuCurve
    saturation: SaturationCurve
    excluded: list
    diagnostics: list


def _theory(device, settings):
    try:
        closed = mu_closed_form(device, settings.pole_guard)
    except NumericalError:
        closed = math.nan
    try:
        numeric = cr_coefficients(device, "numeric", settings.control_mode, settings.pole_guard, 5).mu
    except NumericalError:
        numeric = math.nan
    return closed, numeric


def _run_delta(args):
    device, delta, settings = args
    try:
        res = amplitude_sweep(device, delta, settings=settings)
        return delta, res, None
    except CrosskitError as exc:
        return delta, None, f"delta={delta:g}: {type(exc).__name__}: {exc}"


def _pole_excluded(device, settings):
    return [d for d in validity_check(device, settings.pole_guard) if d.kind == "pole" and d.flagged]


def detuning_sweep(
    device_base: DeviceParams,
    delta_grid,
    settings: SweepSettings | None = None,
    checkpoint_dir: str | os.PathLike | None = None,
) -> SweepResult:
    """One amplitude sweep per detuning, assembled into mu and saturation curves.

    Detunings inside a pole guard window are skipped with a diagnostic;
    failing points are recorded and the sweep continues. With
    ``checkpoint_dir`` each finished detuning is stored there and reused on
    the next call. Results are ordered by detuning regardless of ``workers``.
    """
    settings = settings or SweepSettings()
    grid = sorted({float(d) for d in delta_grid})
    diagnostics, excluded, todo = [], [], []
    for delta in grid:
        dev = device_base.with_detuning(delta)
        bad = _pole_excluded(dev, settings)
        if bad:
            excluded.append(delta)
            diagnostics.extend(f"excluded: {d.message}" for d in bad)
        else:
            todo.append(delta)

    ckpt = Path(checkpoint_dir) if checkpoint_dir is not None else None
    done: dict[float, CurveResult | None] = {}
    if ckpt is not None:
        ckpt.mkdir(parents=True, exist_ok=True)
        for delta in todo:
            f = ckpt / _ckpt_name(delta)
            if f.exists():
                done[delta] = _load_curve(f)
    pending = [d for d in todo if d not in done]
    jobs = [(device_base, d, settings) for d in pending]
    if settings.workers > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=settings.workers) as pool:
            outcomes = list(pool.map(_run_delta, jobs))
    else:
        outcomes = [_run_delta(j) for j in jobs]
    errors = {}
    for delta, res, err in outcomes:
        if err:
            errors[delta] = err
            continue
        done[delta] = res
        if ckpt is not None:
            _save_curve(ckpt / _ckpt_name(delta), res)

    curves, traces, mu_pts, sat_pts = {}, {}, [], []
    for delta in todo:
        if delta in errors:
            diagnostics.append(errors[delta])
            continue
        res = done[delta]
        curve = res.curve
        curves[delta] = curve
        traces[delta] = res.traces
        diagnostics.extend(curve.diagnostics)
        closed, numeric = _theory(device_base.with_detuning(delta), settings)
        if curve.linear is not None:
            mu_pts.append(MuPoint(delta, curve.slope, curve.slope_ci95, closed, numeric))
        if curve.saturation is not None:
            s = curve.saturation
            sat_pts.append(SaturationPoint(delta, s.level, s.ci95, s.sign))

    mu_curve = MuCurve(points=mu_pts, scale_reference=settings.scale_reference)
    if len(mu_pts) >= 2:
        ref = np.array([p.numeric if settings.scale_reference == "numeric" else p.theory for p in mu_pts])
        meas = np.array([p.measured for p in mu_pts])
        ci = np.array([p.ci95 for p in mu_pts])
        ok = np.isfinite(ref) & np.isfinite(meas)
        if ok.sum() >= 2:
            try:
                mu_curve.scale_factor = calibrate_scale_factor(meas[ok], ref[ok], ci[ok])
            except DegenerateTheory as exc:
                diagnostics.append(f"scale factor: {exc}")
    sat = SaturationCurve(points=sat_pts, coupling_j=device_base.coupling_j, anh_control=_anh_control(device_base, settings))
    for p in sat_pts:
        if p.level > sat.coupling_j + p.ci95:
            msg = f"delta={p.delta:g}: saturation {p.level:.4g} MHz exceeds J={sat.coupling_j:g} MHz beyond its CI"
            sat.violations.append(msg)
            diagnostics.append(msg)
    return SweepResult(curves=curves, traces=traces, mu=mu_curve, saturation=sat, excluded=excluded, diagnostics=diagnostics)


def _anh_control(device, settings):
    return device.anh2 if settings.control_mode == 2 else device.anh1


def _ckpt_name(delta: float) -> str:
    return f"delta_{delta!r}.json"


def _save_curve(path: Path, res: CurveResult):
    c = res.curve
    payload = {
        "delta": c.delta,
        "points": [asdict(p) for p in c.points],
        "diagnostics": c.diagnostics,
        "traces": [
            {
                "amplitude": t.amplitude,
                "control_state": t.control_state,
                "durations": t.durations.tolist(),
                "p_excited": t.p_excited.tolist(),
                "p_leakage": t.p_leakage.tolist(),
            }
            for t in res.traces
        ],
    }
    tmp = path.with_suffix(".tmp")
    tmp.write_text(json.dumps(payload))
    tmp.replace(path)


def _load_curve(path: Path) -> CurveResult:
    raw = json.loads(path.read_text())
    points = [JeffPoint(**p) for p in raw["points"]]
    curve = JeffCurve(delta=raw["delta"], points=points, diagnostics=[]).analyze()
    curve.diagnostics = list(raw["diagnostics"]) + [
        d for d in curve.diagnostics if d not in raw["diagnostics"]
    ]
    traces = [RabiTrace(delta=raw["delta"], **t) for t in raw["traces"]]
    return CurveResult(curve=curve, traces=traces)
