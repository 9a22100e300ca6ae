"""Rabi-trace analysis: damped-sinusoid fits, J_eff, linear slope and saturation.

Durations enter in ns and are fitted in us, so fitted frequencies come out
in MHz and decay times in us.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy import optimize, signal, stats

from .errors import NonConvergence, NoOscillation, NoPlateau, RegimeNotFound

__all__ = [
    "Z95",
    "SinusoidFit",
    "JeffPoint",
    "LinearRegime",
    "SaturationFit",
    "JeffCurve",
    "damped_sinusoid",
    "fit_damped_sinusoid",
    "compute_jeff",
    "fit_linear_regime",
    "fit_saturation",
]

Z95 = 1.96
SNR_MIN = 3.0
REL_FLOOR = 0.01
PARAMS = ("amplitude", "decay_rate", "frequency", "phase", "offset")


def damped_sinusoid(t_us, amplitude, decay_rate, frequency, phase, offset):
    """``A exp(-g t) cos(2 pi f t + phi) + C`` with ``t`` in us."""
    return amplitude * np.exp(-decay_rate * t_us) * np.cos(2 * np.pi * frequency * t_us + phase) + offset


@dataclass
class SinusoidFit:
    frequency: float
    decay_time: float
    amplitude: float
    phase: float
    offset: float
    covariance: np.ndarray
    ci95: dict
    residual_rms: float
    decay_rate: float = 0.0
    snr: float = math.inf

    @property
    def frequency_ci95(self) -> float:
        return self.ci95["frequency"]

    def model(self, durations_ns) -> np.ndarray:
        t = np.asarray(durations_ns, dtype=float) * 1e-3
        return damped_sinusoid(t, self.amplitude, self.decay_rate, self.frequency, self.phase, self.offset)


def _no_oscillation(values, snr):
    cov = np.full((5, 5), np.inf)
    ci = {k: math.inf for k in PARAMS}
    ci["decay_time"] = math.inf
    mean = float(np.mean(values))
    return SinusoidFit(
        frequency=0.0,
        decay_time=math.inf,
        amplitude=0.0,
        phase=0.0,
        offset=mean,
        covariance=cov,
        ci95=ci,
        residual_rms=float(np.sqrt(np.mean((values - mean) ** 2))),
        snr=snr,
    )


def _linear_sinusoid(t, y, f):
    """Least-squares ``a cos + b sin + c`` at fixed frequency ``f``."""
    w = 2 * np.pi * f * t
    design = np.column_stack([np.cos(w), np.sin(w), np.ones_like(t)])
    coef, *_ = np.linalg.lstsq(design, y, rcond=None)
    resid = y - design @ coef
    return coef, resid


def fit_damped_sinusoid(durations, values, max_iter: int = 2000, snr_min: float = SNR_MIN) -> SinusoidFit:
    """Least-squares fit of a damped sinusoid to a Rabi trace.

    The starting frequency is the periodogram peak (FFT for uniform
    sampling, Lomb-Scargle otherwise), refined by a bounded 1-D search. The trace counts as oscillating when
    the fitted oscillation (RMS times sqrt 2, i.e. its equivalent
    amplitude) exceeds ``snr_min`` times the RMS residual; otherwise
    :class:`NoOscillation` is raised, carrying a zero-frequency result with infinite confidence intervals.
    Confidence intervals are ``1.96 * sqrt(diag(cov))`` from the
    Gauss-Newton covariance.
    """
    t_ns = np.asarray(durations, dtype=float)
    y = np.asarray(values, dtype=float)
    if t_ns.shape != y.shape or t_ns.ndim != 1:
        raise ValueError("durations and values must be 1-D arrays of equal length")
    if len(y) < 8:
        raise ValueError("need at least 8 samples")
    if not (np.all(np.isfinite(y)) and np.all(np.isfinite(t_ns))):
        raise ValueError("non-finite samples")
    t = t_ns * 1e-3
    span = t.max() - t.min()
    if np.ptp(y) < 1e-12 or span <= 0:
        raise NoOscillation("signal is constant", _no_oscillation(y, 0.0))

    dts = np.diff(np.sort(t))
    dts = dts[dts > 0]
    if np.ptp(dts) <= 1e-9 * dts.mean():
        # uniform grid: zero-padded FFT periodogram
        n_fft = 1 << int(math.ceil(math.log2(8 * len(y))))
        spec = np.abs(np.fft.rfft(y - y.mean(), n_fft)) ** 2
        freqs = np.fft.rfftfreq(n_fft, dts.mean())
        k = int(np.argmax(spec[1:])) + 1
    else:
        f_nyq = 0.5 / np.median(dts)
        n_grid = int(min(max(20 * span * f_nyq, 200), 200_000))
        freqs = np.linspace(0.25 / span, f_nyq, n_grid)
        power = signal.lombscargle(t, y - y.mean(), 2 * np.pi * freqs)
        k = int(np.argmax(power))
    df = freqs[1] - freqs[0]
    lo, hi = max(freqs[k] - df, 1e-9), freqs[k] + df
    res = optimize.minimize_scalar(
        lambda f: np.sum(_linear_sinusoid(t, y, f)[1] ** 2), bounds=(lo, hi), method="bounded",
        options={"xatol": 1e-10 * max(hi, 1.0)},
    )
    f0 = float(res.x)
    (a, b, c), resid = _linear_sinusoid(t, y, f0)
    amp0 = math.hypot(a, b)
    p0 = [amp0, 0.0, f0, math.atan2(-b, a), c]
    try:
        popt, pcov = optimize.curve_fit(damped_sinusoid, t, y, p0=p0, maxfev=max_iter)
    except RuntimeError as exc:
        noise = float(np.sqrt(np.mean(resid**2)))
        snr = amp0 / noise if noise > 0 else math.inf
        if snr < snr_min:
            raise NoOscillation(f"spectral peak SNR {snr:.2f} < {snr_min}", _no_oscillation(y, snr)) from exc
        raise NonConvergence(str(exc)) from exc
    osc = damped_sinusoid(t, *popt) - popt[4]
    resid = y - osc - popt[4]
    noise = float(np.sqrt(np.mean(resid**2)))
    signal_amp = math.sqrt(2.0 * np.mean(osc**2))
    snr = signal_amp / noise if noise > 0 else math.inf
    if snr < snr_min:
        raise NoOscillation(f"spectral peak SNR {snr:.2f} < {snr_min}", _no_oscillation(y, snr))
    amp, rate, freq, phase, offset = popt
    if amp < 0:
        amp, phase = -amp, phase + np.pi
    if freq < 0:
        freq, phase = -freq, -phase
    phase = float((phase + np.pi) % (2 * np.pi) - np.pi)
    pcov = np.asarray(pcov, dtype=float)
    if not np.all(np.isfinite(pcov)):
        pcov = np.full((5, 5), np.inf)
    sd = np.sqrt(np.abs(np.diag(pcov)))
    ci = {name: float(Z95 * s) for name, s in zip(PARAMS, sd)}
    tau = 1.0 / rate if rate > 0 else math.inf
    ci["decay_time"] = float(Z95 * sd[1] / rate**2) if rate > 0 else math.inf
    return SinusoidFit(
        frequency=float(freq),
        decay_time=float(tau),
        amplitude=float(amp),
        phase=phase,
        offset=float(offset),
        covariance=pcov,
        ci95=ci,
        residual_rms=float(np.sqrt(np.mean(resid**2))),
        decay_rate=float(rate),
        snr=float(snr),
    )


@dataclass(frozen=True)
class JeffPoint:
    amplitude: float
    jeff: float
    ci95: float
    f_pi: float = math.nan
    f_0: float = math.nan
    f_pi_ci95: float = math.nan
    f_0_ci95: float = math.nan


def compute_jeff(fit_pi: SinusoidFit, fit_0: SinusoidFit, amplitude: float = math.nan) -> JeffPoint:
    """Half the Rabi-frequency difference between control excited and ground."""
    u_pi, u_0 = fit_pi.frequency_ci95, fit_0.frequency_ci95
    return JeffPoint(
        amplitude=float(amplitude),
        jeff=0.5 * (fit_pi.frequency - fit_0.frequency),
        ci95=0.5 * math.hypot(u_pi, u_0),
        f_pi=fit_pi.frequency,
        f_0=fit_0.frequency,
        f_pi_ci95=u_pi,
        f_0_ci95=u_0,
    )


def _unpack(points, jeff=None, sigma=None):
    if jeff is None:
        pts = list(points)
        x = np.array([p.amplitude for p in pts], dtype=float)
        y = np.array([p.jeff for p in pts], dtype=float)
        s = np.array([p.ci95 for p in pts], dtype=float)
    else:
        x = np.asarray(points, dtype=float)
        y = np.asarray(jeff, dtype=float)
        s = np.full_like(x, np.nan) if sigma is None else np.asarray(sigma, dtype=float)
    if np.any(np.diff(x) < 0):
        raise ValueError("points must be sorted by amplitude")
    return x, y, s


def _weights(sigma: np.ndarray, y: np.ndarray | None = None, rel_floor: float = 0.0) -> np.ndarray:
    """Inverse-variance weights; exact points get the largest finite weight, infinite ones zero.

    ``rel_floor`` adds ``rel_floor * |y|`` in quadrature to each sigma, a
    model-error allowance that keeps noiseless fits from trusting a single
    point.
    """
    sigma = np.asarray(sigma, dtype=float)
    if y is not None and rel_floor > 0:
        floor = rel_floor * np.abs(np.asarray(y, dtype=float))
        fin = np.isfinite(sigma)
        sigma = sigma.copy()
        sigma[fin] = np.hypot(sigma[fin], floor[fin])
    good = np.isfinite(sigma) & (sigma > 0)
    if not np.any(good):
        w = np.ones_like(sigma)
        w[np.isinf(sigma)] = 0.0
        return w
    w = np.zeros_like(sigma)
    w[good] = 1.0 / sigma[good] ** 2
    w[sigma == 0] = w[good].max()
    w[np.isnan(sigma)] = w[good].max()
    return w / w[good].max()


@dataclass(frozen=True)
class LinearRegime:
    slope: float
    ci95: float
    prefix_len: int
    r2: float


def _origin_fit(x, y, w):
    sxx = np.sum(w * x * x)
    if sxx <= 0:
        return math.nan, math.inf, -math.inf
    slope = np.sum(w * x * y) / sxx
    ss_res = np.sum(w * (y - slope * x) ** 2)
    # uncentered R^2, the usual measure for a line forced through the origin
    ss_tot = np.sum(w * y * y)
    if ss_tot > 0:
        r2 = 1.0 - ss_res / ss_tot
    else:
        r2 = 1.0 if ss_res <= 1e-30 else -math.inf
    n = int(np.count_nonzero(w))
    dof = max(n - 1, 1)
    se = math.sqrt(ss_res / dof / sxx)
    return float(slope), float(stats.t.ppf(0.975, dof) * se), float(r2)


def fit_linear_regime(
    points, jeff=None, sigma=None, *, r2_min: float = 0.995, min_points: int = 4, rel_floor: float = REL_FLOOR
) -> LinearRegime:
    """Through-origin weighted line over the longest linear amplitude prefix.

    Prefixes grow from ``min_points`` and stop at the first one whose
    weighted (uncentered) coefficient of determination falls below
    ``r2_min``; the last passing prefix is used. Weights are ``1/sigma^2``
    with ``sigma`` floored by ``rel_floor * |J_eff|``. Accepts a list of :class:`JeffPoint` or
    ``(amplitudes, jeff, sigma)`` arrays.
    """
    x, y, s = _unpack(points, jeff, sigma)
    if len(x) < min_points:
        raise RegimeNotFound(f"need at least {min_points} points, got {len(x)}")
    w = _weights(s, y, rel_floor)
    best = None
    for n in range(min_points, len(x) + 1):
        slope, ci, r2 = _origin_fit(x[:n], y[:n], w[:n])
        if not (np.isfinite(slope) and r2 >= r2_min):
            break
        best = LinearRegime(slope=slope, ci95=ci, prefix_len=n, r2=r2)
    if best is None:
        raise RegimeNotFound(f"no {min_points}-point prefix reaches R^2 >= {r2_min}")
    return best


@dataclass(frozen=True)
class SaturationFit:
    level: float
    ci95: float
    sign: int
    indices: tuple[int, ...]


def fit_saturation(
    points, jeff=None, sigma=None, *, start: int | None = None, tolerance: float = 0.1, min_points: int = 3
) -> SaturationFit:
    """Zero-slope fit to the high-amplitude plateau of ``|J_eff|``.

    Only points past the linear regime (``start``; found with
    :func:`fit_linear_regime` when omitted) are candidates. The plateau is
    the contiguous run of points around the largest ``|J_eff|`` that stay
    within ``tolerance`` of it; points past a roll-over are left out. The
    level is the weighted mean of ``|J_eff|`` over those points with a
    Student-t 95% interval.
    """
    x, y, s = _unpack(points, jeff, sigma)
    if start is None:
        try:
            start = fit_linear_regime(x, y, s).prefix_len
        except RegimeNotFound:
            start = 0
    a = np.abs(y)
    cand = np.arange(start, len(x))
    cand = cand[np.isfinite(a[cand])]
    if len(cand) == 0:
        raise NoPlateau("no points beyond the linear regime")
    top = cand[np.argmax(a[cand])]
    cut = (1.0 - tolerance) * a[top]
    lo = hi = int(top)
    while lo - 1 >= start and np.isfinite(a[lo - 1]) and a[lo - 1] >= cut:
        lo -= 1
    while hi + 1 < len(x) and np.isfinite(a[hi + 1]) and a[hi + 1] >= cut:
        hi += 1
    keep = list(range(lo, hi + 1))
    if len(keep) < min_points:
        raise NoPlateau(f"plateau has {len(keep)} points (< {min_points})")
    idx = np.array(sorted(keep))
    w = _weights(s[idx], a[idx], REL_FLOOR)
    if not np.any(w > 0):
        w = np.ones(len(idx))
    wsum = w.sum()
    level = float(np.sum(w * a[idx]) / wsum)
    n = len(idx)
    var = np.sum(w * (a[idx] - level) ** 2) / ((n - 1) * wsum)
    ci = float(stats.t.ppf(0.975, n - 1) * math.sqrt(var))
    sign = int(np.sign(np.sum(w * y[idx]))) or 1
    return SaturationFit(level=level, ci95=ci, sign=sign, indices=tuple(int(i) for i in idx))


@dataclass
class JeffCurve:
    """J_eff versus amplitude at one detuning, with its linear and plateau fits."""

    delta: float
    points: list
    linear: LinearRegime | None = None
    saturation: SaturationFit | None = None
    diagnostics: list = field(default_factory=list)

    @property
    def amplitudes(self) -> np.ndarray:
        return np.array([p.amplitude for p in self.points])

    @property
    def jeff(self) -> np.ndarray:
        return np.array([p.jeff for p in self.points])

    @property
    def slope(self) -> float:
        return self.linear.slope if self.linear else math.nan

    @property
    def slope_ci95(self) -> float:
        return self.linear.ci95 if self.linear else math.nan

    @property
    def prefix_len(self) -> int:
        return self.linear.prefix_len if self.linear else 0

    def analyze(self):
        """Fill ``linear`` and ``saturation`` from ``points``; failures go to diagnostics."""
        valid = [p for p in self.points if np.isfinite(p.jeff) and not math.isinf(p.ci95)]
        try:
            self.linear = fit_linear_regime(valid)
        except RegimeNotFound as exc:
            self.linear = None
            self.diagnostics.append(f"delta={self.delta:g}: linear regime: {exc}")
        try:
            self.saturation = fit_saturation(valid, start=self.prefix_len)
        except NoPlateau as exc:
            self.saturation = None
            self.diagnostics.append(f"delta={self.delta:g}: saturation: {exc}")
        return self
