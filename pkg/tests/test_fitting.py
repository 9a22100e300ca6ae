import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from crosskit.errors import NoOscillation, NoPlateau, RegimeNotFound
from crosskit.fitting import (
    JeffCurve,
    JeffPoint,
    compute_jeff,
    damped_sinusoid,
    fit_damped_sinusoid,
    fit_linear_regime,
    fit_saturation,
)

T_NS = np.linspace(0, 4000, 401)


def trace(freq, tau=math.inf, amp=0.5, phase=0.0, offset=0.5, t=T_NS):
    rate = 0.0 if math.isinf(tau) else 1.0 / tau
    return damped_sinusoid(t * 1e-3, amp, rate, freq, phase, offset)


def tanh_curve(mu=0.0113, j=1.08, amps=None):
    amps = np.geomspace(0.5, 500, 40) if amps is None else amps
    return amps, j * np.tanh(mu * amps / j)


class TestSinusoid:
    @pytest.mark.parametrize("freq", [0.3, 1.7, 12.5, 40.0])
    def test_recovers_frequency(self, freq):
        fit = fit_damped_sinusoid(T_NS, trace(freq))
        assert fit.frequency == pytest.approx(freq, rel=1e-6)
        assert fit.amplitude == pytest.approx(0.5, rel=1e-6)

    def test_recovers_decay(self):
        fit = fit_damped_sinusoid(T_NS, trace(5.0, tau=1.5))
        assert fit.decay_time == pytest.approx(1.5, rel=1e-4)

    def test_nonuniform_sampling(self, rng):
        t = np.sort(rng.uniform(0, 4000, 300))
        fit = fit_damped_sinusoid(t, trace(3.3, t=t))
        assert fit.frequency == pytest.approx(3.3, rel=1e-6)

    def test_constant_signal(self):
        with pytest.raises(NoOscillation) as info:
            fit_damped_sinusoid(T_NS, np.full_like(T_NS, 0.2))
        assert info.value.result.frequency == 0.0
        assert math.isinf(info.value.result.frequency_ci95)

    def test_pure_noise(self, rng):
        with pytest.raises(NoOscillation):
            fit_damped_sinusoid(T_NS, 0.5 + 0.05 * rng.standard_normal(len(T_NS)))

    def test_input_checks(self):
        with pytest.raises(ValueError):
            fit_damped_sinusoid(T_NS[:5], trace(1.0)[:5])
        with pytest.raises(ValueError):
            fit_damped_sinusoid(T_NS, trace(1.0)[:-1])

    def test_interval_coverage(self, rng):
        """About 95% of noisy-trace intervals contain the true frequency."""
        hits, n = 0, 200
        for _ in range(n):
            y = trace(2.0) + 0.03 * rng.standard_normal(len(T_NS))
            fit = fit_damped_sinusoid(T_NS, y)
            hits += abs(fit.frequency - 2.0) <= fit.frequency_ci95
        assert 0.89 <= hits / n <= 0.99

    @given(st.floats(0.5, 30.0), st.floats(-math.pi, math.pi))
    @settings(max_examples=25, deadline=None)
    def test_any_phase(self, freq, phase):
        fit = fit_damped_sinusoid(T_NS, trace(freq, phase=phase))
        assert fit.frequency == pytest.approx(freq, rel=1e-5)


class TestJeff:
    def test_half_difference(self):
        a = fit_damped_sinusoid(T_NS, trace(3.0))
        b = fit_damped_sinusoid(T_NS, trace(2.0))
        p = compute_jeff(a, b, amplitude=10.0)
        assert p.jeff == pytest.approx(0.5, rel=1e-6)
        assert p.amplitude == 10.0

    def test_antisymmetric(self, rng):
        a = fit_damped_sinusoid(T_NS, trace(3.0) + 0.01 * rng.standard_normal(len(T_NS)))
        b = fit_damped_sinusoid(T_NS, trace(2.2) + 0.01 * rng.standard_normal(len(T_NS)))
        assert compute_jeff(a, b).jeff == -compute_jeff(b, a).jeff
        assert compute_jeff(a, b).ci95 == compute_jeff(b, a).ci95


class TestLinearRegime:
    def test_exact_line(self):
        x = np.arange(1.0, 11.0)
        r = fit_linear_regime(x, 0.02 * x, np.zeros_like(x))
        assert r.slope == pytest.approx(0.02, rel=1e-12)
        assert r.prefix_len == 10

    def test_tanh_oracle(self):
        amps, j = tanh_curve()
        r = fit_linear_regime(amps, j, np.full_like(amps, 1e-4))
        # an R^2 >= 0.995 prefix admits some bending, which biases the slope low
        assert r.slope == pytest.approx(0.0113, rel=0.1)
        assert r.slope < 0.0113
        assert 4 <= r.prefix_len < len(amps)
        u = 0.0113 * amps[r.prefix_len - 1] / 1.08
        assert np.tanh(u) / u > 0.75

    def test_negative_slope(self):
        amps, j = tanh_curve(mu=-0.02)
        assert fit_linear_regime(amps, j, None).slope == pytest.approx(-0.02, rel=0.1)

    def test_from_points(self):
        pts = [JeffPoint(a, 0.01 * a, 1e-4) for a in np.arange(1.0, 8.0)]
        assert fit_linear_regime(pts).slope == pytest.approx(0.01)

    def test_invariant_under_plateau_points(self):
        amps, j = tanh_curve()
        base = fit_linear_regime(amps, j, None)
        more_a = np.concatenate([amps, [600.0, 800.0, 1000.0]])
        more_j = np.concatenate([j, [1.08, 1.08, 1.08]])
        assert fit_linear_regime(more_a, more_j, None).slope == base.slope

    def test_too_few(self):
        with pytest.raises(RegimeNotFound):
            fit_linear_regime([1.0, 2.0, 3.0], [1.0, 2.0, 3.0])

    def test_not_linear(self):
        x = np.arange(1.0, 9.0)
        with pytest.raises(RegimeNotFound):
            fit_linear_regime(x, (-1.0) ** np.arange(8), np.full(8, 1e-3))

    def test_unsorted(self):
        with pytest.raises(ValueError):
            fit_linear_regime([2.0, 1.0, 3.0, 4.0], [1, 1, 1, 1])

    @given(st.floats(-0.1, 0.1).filter(lambda m: abs(m) > 1e-4), st.floats(0.1, 10))
    @settings(max_examples=30, deadline=None)
    def test_scale_covariance(self, mu, scale):
        x = np.linspace(1, 10, 10)
        a = fit_linear_regime(x, mu * x, None).slope
        b = fit_linear_regime(x, scale * mu * x, None).slope
        assert b == pytest.approx(scale * a, rel=1e-9)


class TestSaturation:
    def test_tanh_plateau(self):
        amps, j = tanh_curve()
        s = fit_saturation(amps, j, np.full_like(amps, 1e-3))
        assert s.level == pytest.approx(1.08, rel=0.05)
        assert s.level - s.ci95 <= 1.08 + 1e-9
        assert s.sign == 1

    def test_negative_plateau_sign(self):
        amps, j = tanh_curve(mu=-0.0113)
        s = fit_saturation(amps, j, None)
        assert s.sign == -1
        assert s.level > 0

    def test_excludes_rollover(self):
        amps = np.geomspace(0.5, 500, 30)
        j = 1.0 * np.tanh(0.02 * amps) * np.where(amps > 200, 0.5, 1.0)
        s = fit_saturation(amps, j, None)
        assert all(amps[i] <= 200 for i in s.indices)
        assert s.level == pytest.approx(1.0, rel=0.05)

    def test_no_plateau(self):
        x = np.arange(1.0, 11.0)
        with pytest.raises(NoPlateau):
            fit_saturation(x, 0.01 * x, None)

    def test_nothing_past_linear(self):
        x = np.arange(1.0, 6.0)
        with pytest.raises(NoPlateau):
            fit_saturation(x, 0.01 * x, None, start=5)


class TestCurve:
    def test_analyze_records_failures(self):
        pts = [JeffPoint(a, 0.01 * a, 1e-4) for a in np.arange(1.0, 6.0)]
        curve = JeffCurve(delta=-78.0, points=pts).analyze()
        assert curve.slope == pytest.approx(0.01)
        assert curve.saturation is None
        assert any("saturation" in d for d in curve.diagnostics)

    def test_skips_failed_points(self):
        amps, j = tanh_curve()
        pts = [JeffPoint(a, v, 1e-4) for a, v in zip(amps, j)]
        pts[3] = JeffPoint(amps[3], math.nan, math.inf)
        curve = JeffCurve(delta=-78.0, points=pts).analyze()
        assert curve.slope == pytest.approx(0.0113, rel=0.1)
        assert curve.saturation.level == pytest.approx(1.08, rel=0.05)
