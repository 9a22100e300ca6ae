import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from crosskit.hilbert import make_space
from crosskit.model import (
    RAD_PER_MHZ_NS,
    DeviceParams,
    DrivePulse,
    build_drive_operator,
    build_system_hamiltonian,
    lab_frame_hamiltonian,
    rotating_frame_hamiltonian,
    total_excitation,
    two_level_lab_hamiltonian,
)
from crosskit.dynamics import rk4_propagate

from oracles import E01_EXACT, duffing_matrix

devices = st.builds(
    DeviceParams,
    omega1=st.floats(3000, 6000),
    omega2=st.floats(3000, 6000),
    anh1=st.floats(-400, -100),
    anh2=st.floats(-400, -100),
    coupling_j=st.floats(0, 20),
)


class TestDeviceParams:
    def test_detuning(self, ref_device):
        assert ref_device.detuning() == -78.0
        assert ref_device.with_detuning(150.0).omega1 == 4499.0

    @pytest.mark.parametrize("kw", [{"anh1": 0.0}, {"anh2": 0.0}, {"coupling_j": -1.0}])
    def test_invariants(self, kw):
        base = dict(omega1=4271.0, omega2=4349.0, anh1=-347.0, anh2=-360.0, coupling_j=1.08)
        with pytest.raises(ValueError):
            DeviceParams(**{**base, **kw})


class TestDrivePulse:
    def test_negative_amplitude(self):
        with pytest.raises(ValueError):
            DrivePulse(2, -1.0, 4271.0)

    def test_ramp_longer_than_half(self):
        p = DrivePulse(2, 1.0, 4271.0, envelope="ramped", rise_time=60.0)
        with pytest.raises(ValueError):
            p.validate_duration(100.0)

    def test_ramped_envelope(self):
        p = DrivePulse(2, 4.0, 4271.0, envelope="ramped", rise_time=10.0)
        assert p.envelope_value(5.0, 100.0) == 2.0
        assert p.envelope_value(50.0, 100.0) == 4.0
        assert p.envelope_value(97.5, 100.0) == 1.0


class TestSystemHamiltonian:
    def test_duffing_ladder(self):
        dev = DeviceParams(4271.0, 4349.0, -347.0, -360.0, 0.0, levels=(3, 3))
        h = build_system_hamiltonian(dev)
        assert h.element((2, 0), (2, 0)).real == pytest.approx(2 * 4271.0 - 347.0)
        assert np.allclose(h.matrix, np.diag(np.diag(h.matrix)))

    def test_matches_kronecker_oracle(self, ref_device):
        dev = ref_device.with_levels((5, 5))
        h = build_system_hamiltonian(dev).matrix
        ref = duffing_matrix(dev.omega1, dev.omega2, dev.anh1, dev.anh2, dev.coupling_j)
        assert np.allclose(h, ref, atol=1e-12)

    def test_dressed_01_eigenvalue(self, ref_device):
        dev = ref_device.with_levels((5, 5))
        ev = build_system_hamiltonian(dev).eigenvalues()
        assert np.min(np.abs(ev - E01_EXACT)) < 1e-6
        assert np.min(np.abs(ev - 4349.01495)) < 1e-5

    def test_space_mismatch(self, ref_device):
        with pytest.raises(ValueError):
            build_system_hamiltonian(ref_device, make_space([3, 3]))

    @given(devices)
    @settings(max_examples=30, deadline=None)
    def test_hermitian_and_conserves_excitations(self, dev):
        h = build_system_hamiltonian(dev)
        assert h.is_hermitian()
        n = total_excitation(dev.space())
        assert np.max(np.abs(h.commutator(n).matrix)) < 1e-8

    @given(devices)
    @settings(max_examples=30, deadline=None)
    def test_spectrum_invariant_under_mode_swap(self, dev):
        a = np.sort(build_system_hamiltonian(dev).eigenvalues())
        b = np.sort(build_system_hamiltonian(dev.swapped()).eigenvalues())
        assert np.allclose(a, b, atol=1e-8)


class TestDriveOperator:
    def test_mode_two_qubits(self):
        s = make_space([2, 2])
        x = build_drive_operator(s, 2)
        upper = {(s.basis_labels[i], s.basis_labels[j]) for i, j in zip(*np.nonzero(np.triu(x.matrix)))}
        assert upper == {((0, 0), (0, 1)), ((1, 0), (1, 1))}
        assert x.element((0, 0), (0, 1)) == 1

    def test_mode_one_sqrt2(self):
        x = build_drive_operator(make_space([3, 2]), 1)
        assert x.element((1, 0), (2, 0)) == pytest.approx(math.sqrt(2))

    @pytest.mark.parametrize("mode", [1, 2])
    def test_hermitian_traceless(self, mode):
        x = build_drive_operator(make_space([4, 4]), mode)
        assert x.is_hermitian()
        assert abs(np.trace(x.matrix)) == 0


class TestFrames:
    def test_undriven_rotating_frame_is_shifted_spectrum(self, ref_device):
        wd = 4271.0
        pulse = DrivePulse(2, 0.0, wd)
        h = rotating_frame_hamiltonian(ref_device, pulse)
        h0 = build_system_hamiltonian(ref_device)
        n = total_excitation(ref_device.space())
        assert np.allclose(h.matrix, (h0 - wd * n).matrix)
        # block diagonal in excitation number, so the spectra shift block by block
        assert np.allclose(np.sort(h.eigenvalues()), np.sort((h0 - wd * n).eigenvalues()))

    @given(st.floats(0, 1e4), st.floats(0, 40), st.floats(-math.pi, math.pi))
    @settings(max_examples=25, deadline=None)
    def test_hermitian_at_any_time(self, t, eps, phi):
        dev = DeviceParams(4271.0, 4349.0, -347.0, -360.0, 1.08)
        pulse = DrivePulse(2, eps, 4271.0, phase=phi, crosstalk=0.1j)
        assert rotating_frame_hamiltonian(dev, pulse, t=t).is_hermitian()
        assert lab_frame_hamiltonian(dev, pulse, t=t).is_hermitian()

    def test_carrier_must_be_positive(self, ref_device):
        with pytest.raises(ValueError):
            rotating_frame_hamiltonian(ref_device, DrivePulse(2, 1.0, 0.0))


class TestTwoLevel:
    def test_uncoupled_eigenvalues(self):
        h = two_level_lab_hamiltonian(5000.0, 4800.0, 0.0)
        assert np.allclose(np.sort(h.eigenvalues()), np.sort([-4900.0, -100.0, 100.0, 4900.0]))

    @pytest.mark.parametrize("w1,w2,j", [(5000.0, 4800.0, 3.0), (4271.0, 4349.0, 1.08), (4349.0, 4349.0, 2.0)])
    def test_single_excitation_splitting(self, w1, w2, j):
        ev = np.sort(two_level_lab_hamiltonian(w1, w2, j).eigenvalues())
        # the XX term couples |01>,|10> with strength J/2 and |00>,|11> likewise
        inner = ev[1:3]
        assert inner[1] - inner[0] == pytest.approx(math.hypot(w1 - w2, j), rel=1e-9)

    @given(st.floats(0, 1e3), st.floats(0, 10), st.floats(0, 10))
    @settings(max_examples=20, deadline=None)
    def test_hermitian(self, t, r1, r2):
        assert two_level_lab_hamiltonian(5000.0, 4800.0, 2.0, t, r1, r2, 4990.0, 4790.0, 0.3, -0.2).is_hermitian()


@pytest.mark.slow
def test_two_level_rwa_matches_lab_frame():
    """Resonant drive on one qubit, eps/omega = 1e-3: lab frame vs rotating-wave Rabi formula."""
    w, rabi = 1000.0, 1.0  # MHz; Rabi drive amplitude R so that the flop rate is R
    times = np.linspace(0.0, 1000.0, 41)
    psi0 = np.zeros(4, dtype=complex)
    psi0[3] = 1.0  # both qubits in the Z = -1 eigenstate
    h = lambda t: two_level_lab_hamiltonian(w, 3000.0, 0.0, t, rabi, 0.0, w, 0.0).matrix
    states = rk4_propagate(h, psi0, times, dt=1.0 / (20 * 4000.0) * 1e3)
    p_flip = np.abs(states[:, 1]) ** 2
    rwa = np.sin(0.5 * RAD_PER_MHZ_NS * rabi * times) ** 2
    assert np.sqrt(np.mean((p_flip - rwa) ** 2)) < 0.01
