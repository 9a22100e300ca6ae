"""Numbered acceptance checks, one marker per criterion.

A PASS/FAIL line per criterion is printed at the end of the pytest run
(see ``conftest.py``).
"""

import filecmp
import math
import time

import numpy as np
import pytest

from crosskit.cli import main
from crosskit.errors import ResonancePole
from crosskit.fitting import compute_jeff, damped_sinusoid, fit_damped_sinusoid, fit_linear_regime, fit_saturation
from crosskit.model import DeviceParams
from crosskit.perturbation import (
    PT_LABELS,
    anticrossing_spectrum,
    cr_coefficients,
    dressed_drive_matrix_pt,
    dressed_energies_pt2,
    exact_dressed,
    mu_closed_form,
)
from crosskit.pipeline import DEFAULT_AMPLITUDES, SweepSettings, amplitude_sweep, calibrate_scale_factor, detuning_sweep

OMEGA2, DELTA, ANH1, ANH2, J = 4349.0, -78.0, -347.0, -360.0, 1.08


def device(delta=DELTA, j=J, levels=5):
    return DeviceParams(OMEGA2 + delta, OMEGA2, ANH1, ANH2, j, levels=(levels, levels))


class Timer:
    def __init__(self, limit_s):
        self.limit = limit_s

    def __enter__(self):
        self.t0 = time.perf_counter()
        return self

    def __exit__(self, *exc):
        self.elapsed = time.perf_counter() - self.t0
        if exc[0] is None:
            assert self.elapsed < self.limit, f"took {self.elapsed:.1f} s (limit {self.limit} s)"


@pytest.mark.criterion(1, "second-order energies match exact diagonalization; E(11) error falls >= 8x at J/2")
def test_c1_spectrum():
    with Timer(1.0):
        pt = dressed_energies_pt2(device())
        ex = exact_dressed(device()).spectrum
        worst = max(abs(pt.energy(lab) - ex.energy(lab)) for lab in PT_LABELS)
        assert worst < 1e-4
        err = {}
        for j in (J, J / 2):
            d = device(j=j)
            err[j] = abs(dressed_energies_pt2(d).energy((1, 1)) - exact_dressed(d).spectrum.energy((1, 1)))
        print(f"max |E_pt - E_exact| = {worst:.3g} MHz; E(11) error ratio = {err[J] / err[J / 2]:.3f}")
        assert err[J] / err[J / 2] >= 8.0


@pytest.mark.criterion(2, "perturbative drive matrices match dressed operators; residual falls >= 4x at J/2")
@pytest.mark.parametrize("delta", [-200.0, -78.0, 150.0])
@pytest.mark.parametrize("line", [1, 2])
def test_c2_drive_matrices(delta, line):
    with Timer(1.0):
        resid = {}
        for j in (J, J / 2):
            d = device(delta, j)
            pt = dressed_drive_matrix_pt(d, line).matrix
            ex = exact_dressed(d).drive_matrix(line).matrix
            resid[j] = float(np.max(np.abs(pt - ex)))
        ratio = resid[J] / resid[J / 2]
        print(f"delta={delta:g} line={line}: residual {resid[J]:.3g} -> {resid[J / 2]:.3g}, ratio {ratio:.4f}")
        assert resid[J] < 1e-3
        assert ratio >= 4.0


@pytest.mark.criterion(3, "closed-form mu = -0.011380 at -78 MHz, poles only at 0 and +360 with sign changes")
def test_c3_closed_form():
    with Timer(1.0):
        base = device(levels=4)
        assert mu_closed_form(base) == pytest.approx(-0.011380, abs=1e-6)
        for pole in (0.0, 360.0):
            with pytest.raises(ResonancePole):
                mu_closed_form(base.with_detuning(pole))
            lo = mu_closed_form(base.with_detuning(pole - 2.0))
            hi = mu_closed_form(base.with_detuning(pole + 2.0))
            assert np.sign(lo) != np.sign(hi)
        grid = np.arange(-1000.0, 1000.0 + 1e-9, 0.5)
        away = grid[(np.abs(grid) > 5) & (np.abs(grid - 360) > 5)]
        mus = np.array([mu_closed_form(base.with_detuning(d)) for d in away])
        assert np.all(np.isfinite(mus)) and np.max(np.abs(mus)) < 0.25
        # sign changes happen only at the two poles
        flips = away[1:][np.sign(mus[1:]) != np.sign(mus[:-1])]
        assert all(min(abs(f), abs(f - 360)) <= 6 for f in flips) and len(flips) == 2


@pytest.mark.criterion(4, "simulated J_eff linear for eps <= 5 MHz at -78 MHz, slope within 10% of numeric mu")
def test_c4_dynamics_vs_pt():
    with Timer(120.0):
        amps = tuple(a for a in DEFAULT_AMPLITUDES if a <= 5.0)
        res = amplitude_sweep(device(levels=4), settings=SweepSettings(amplitudes=amps))
        pts = res.curve.points
        assert len(pts) == len(amps) and all(np.isfinite(p.jeff) for p in pts)
        lin = fit_linear_regime(pts)
        mu = cr_coefficients(device(), "numeric", drive=2).mu
        print(f"{len(pts)} points, R^2 = {lin.r2:.6f}, slope = {lin.slope:.6g}, numeric mu = {mu:.6g}")
        assert lin.prefix_len == len(pts)
        assert lin.r2 >= 0.995
        assert abs(lin.slope - mu) <= 0.1 * abs(mu)


@pytest.mark.criterion(4, "simulated J_eff linear for eps <= 5 MHz at -78 MHz, slope within 10% of numeric mu")
def test_c4_antisymmetry():
    t = np.linspace(0, 4000, 401)
    rng = np.random.default_rng(4)
    for _ in range(20):
        f = rng.uniform(0.5, 20, 2)
        a = fit_damped_sinusoid(t, damped_sinusoid(t * 1e-3, 0.5, 0.1, f[0], 0.0, 0.5))
        b = fit_damped_sinusoid(t, damped_sinusoid(t * 1e-3, 0.5, 0.1, f[1], 0.0, 0.5))
        p, q = compute_jeff(a, b), compute_jeff(b, a)
        assert p.jeff == -q.jeff
        assert 2 * p.jeff == a.frequency - b.frequency


@pytest.mark.criterion(5, "three detunings give fast, slow and opposite-sign CR")
def test_c5_fast_slow_negative():
    with Timer(300.0):
        res = detuning_sweep(device(levels=4), [-78.0, 100.0, 282.0], SweepSettings())
        m = {p.delta: p.measured for p in res.mu.points}
        print("slopes: " + ", ".join(f"{d:g} MHz -> {v:.5g}" for d, v in m.items()))
        fast, slow = max(m.values(), key=abs), min(m.values(), key=abs)
        assert abs(fast) / abs(slow) > 3
        assert len({np.sign(v) for v in m.values()}) == 2


@pytest.mark.criterion(6, "saturation plateau found at three detunings, level <= J + CI")
def test_c6_saturation():
    with Timer(600.0):
        res = detuning_sweep(device(levels=4), [-78.0, 20.0, 150.0], SweepSettings())
        for delta, curve in res.curves.items():
            sat = fit_saturation(curve.points, start=curve.prefix_len)
            print(f"delta={delta:g}: plateau {sat.level:.4f} +/- {sat.ci95:.4f} MHz over {len(sat.indices)} points")
            assert sat.level <= J + sat.ci95
        assert sorted(res.curves) == [-78.0, 20.0, 150.0]


@pytest.mark.criterion(7, "fitter CI covers the true frequency in >= 90 of 100 noisy traces; noiseless error < 1e-6 MHz")
def test_c7_fitter_calibration():
    with Timer(30.0):
        rng = np.random.default_rng(7)
        t = np.linspace(0, 4000, 401)
        hits = 0
        for _ in range(100):
            f = rng.uniform(0.5, 20.0)
            tau = rng.uniform(2.0, 10.0)
            phase = rng.uniform(-np.pi, np.pi)
            amp = 0.5
            clean = damped_sinusoid(t * 1e-3, amp, 1 / tau, f, phase, 0.5)
            # SNR 10: oscillation amplitude over noise standard deviation
            noisy = clean + (amp / 10) * rng.standard_normal(len(t))
            fit = fit_damped_sinusoid(t, noisy)
            hits += abs(fit.frequency - f) <= fit.frequency_ci95
            assert abs(fit_damped_sinusoid(t, clean).frequency - f) < 1e-6
        print(f"coverage {hits}/100")
        assert hits >= 90


@pytest.mark.criterion(8, "scale factor 75.5 recovered within 0.5% from 1% noise, exactly from clean data")
def test_c8_scale_factor():
    with Timer(1.0):
        rng = np.random.default_rng(8)
        theory = np.array([mu_closed_form(device(d, levels=4)) for d in np.arange(-300, 500, 20) if d not in (0, 360)])
        clean = calibrate_scale_factor(75.5 * theory, theory)
        assert clean.scale == pytest.approx(75.5, rel=1e-14)
        measured = 75.5 * theory * (1 + 0.01 * rng.standard_normal(len(theory)))
        noisy = calibrate_scale_factor(measured, theory, 0.01 * np.abs(measured))
        print(f"noisy scale {noisy.scale:.4f} +/- {noisy.ci95:.4f}")
        assert abs(noisy.scale - 75.5) <= 0.005 * 75.5


@pytest.mark.criterion(9, "minimum single-excitation splitting is 2J = 2.16 MHz at zero detuning")
def test_c9_anticrossing():
    with Timer(1.0):
        rows = anticrossing_spectrum(device(levels=4), np.arange(-50.0, 50.0 + 1e-9, 0.5))
        gaps = np.array([ev[1] - ev[0] for _, ev in rows])
        k = int(np.argmin(gaps))
        assert rows[k][0] == 0.0
        assert abs(gaps[k] - 2.16) < 1e-9


@pytest.mark.criterion(10, "two full default sweeps with the same seed write identical CSVs")
def test_c10_determinism(tmp_path):
    cfg = tmp_path / "device.cfg"
    cfg.write_text(f"omega2_mhz = {OMEGA2}\nanh1_mhz = {ANH1}\nanh2_mhz = {ANH2}\nj_mhz = {J}\nseed = 11\n")
    for name in ("a", "b"):
        assert main(["sweep", "--config", str(cfg), "--out", str(tmp_path / name)]) == 0
    names = ["traces.csv", "jeff.csv", "mu.csv", "saturation.csv"]
    match, mismatch, errors = filecmp.cmpfiles(tmp_path / "a", tmp_path / "b", names, shallow=False)
    assert match == names, (mismatch, errors)
    rows = (tmp_path / "a" / "mu.csv").read_text().splitlines()
    assert len(rows) > 30 and not math.isnan(float(rows[2].split(",")[1]))
