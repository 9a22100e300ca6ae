"""Coupled-transmon Hamiltonians in the lab and drive-rotating frames.

All frequencies are ordinary frequencies in MHz (``H / h``) and all times are
in ns. The only place a factor of 2*pi enters is the propagator, through
:data:`RAD_PER_MHZ_NS`.

Drive convention: a line carrying ``E(t) = eps(t) * cos(2 pi f t + phi)``
couples through ``E(t) (a + a^dag)``. Dropping counter-rotating terms in the
frame rotating at ``f`` leaves ``eps/2 (e^{-i phi} a + e^{i phi} a^dag)``, so a
resonant transition with dressed matrix element ``M`` Rabi-oscillates at
``eps * |M|`` MHz.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np

from .hilbert import (
    Operator,
    SpaceDescriptor,
    annihilation,
    identity,
    make_space,
    number,
)

__all__ = [
    "RAD_PER_MHZ_NS",
    "DeviceParams",
    "DrivePulse",
    "REFERENCE_DEVICE",
    "build_system_hamiltonian",
    "build_drive_operator",
    "total_excitation",
    "rotating_frame_hamiltonian",
    "lab_frame_hamiltonian",
    "two_level_lab_hamiltonian",
]

# phase accumulated by 1 MHz over 1 ns
RAD_PER_MHZ_NS = 2.0 * math.pi * 1e-3


@dataclass(frozen=True)
class DeviceParams:
    """Physical constants of the two-transmon device.

    Mode 1 is the tunable transmon (the CR target in the experiment), mode 2
    the fixed-frequency one (the CR control). Anharmonicities are signed and
    negative for transmons.
    """

    omega1: float
    omega2: float
    anh1: float
    anh2: float
    coupling_j: float
    levels: tuple[int, int] = (4, 4)

    def __post_init__(self):
        if self.anh1 == 0 or self.anh2 == 0:
            raise ValueError("anharmonicities must be nonzero")
        if self.coupling_j < 0:
            raise ValueError("coupling_j must be >= 0")
        object.__setattr__(self, "levels", tuple(int(n) for n in self.levels))

    def detuning(self) -> float:
        return self.omega1 - self.omega2

    def with_detuning(self, delta: float) -> "DeviceParams":
        """Copy with mode 1 moved so that ``omega1 - omega2 == delta``."""
        return replace(self, omega1=self.omega2 + delta)

    def with_coupling(self, coupling_j: float) -> "DeviceParams":
        return replace(self, coupling_j=coupling_j)

    def with_levels(self, levels) -> "DeviceParams":
        return replace(self, levels=tuple(levels))

    def swapped(self) -> "DeviceParams":
        """Exchange the roles of the two modes."""
        return replace(
            self,
            omega1=self.omega2,
            omega2=self.omega1,
            anh1=self.anh2,
            anh2=self.anh1,
            levels=(self.levels[1], self.levels[0]),
        )

    def space(self) -> SpaceDescriptor:
        return make_space(self.levels)


# measured constants of the experimental chip; omega1 sits at -78 MHz detuning
REFERENCE_DEVICE = DeviceParams(
    omega1=4349.0 - 78.0,
    omega2=4349.0,
    anh1=-347.0,
    anh2=-360.0,
    coupling_j=1.08,
)


@dataclass(frozen=True)
class DrivePulse:
    """A drive tone on one line.

    ``crosstalk`` is the complex amplitude ratio with which the same tone
    also reaches the other mode (classical line crosstalk). ``envelope`` is
    ``"square"`` or ``"ramped"`` (linear rise and fall of ``rise_time`` ns).
    """

    target_mode: int
    amplitude: float
    carrier: float
    phase: float = 0.0
    envelope: str = "square"
    rise_time: float = 0.0
    crosstalk: complex = 0.0

    def __post_init__(self):
        if self.target_mode not in (1, 2):
            raise ValueError("target_mode must be 1 or 2")
        if self.amplitude < 0:
            raise ValueError("amplitude must be >= 0")
        if self.rise_time < 0:
            raise ValueError("rise_time must be >= 0")
        if self.envelope not in ("square", "ramped"):
            raise ValueError(f"unknown envelope {self.envelope!r}")

    def validate_duration(self, duration: float):
        if self.envelope == "ramped" and self.rise_time > duration / 2:
            raise ValueError("rise_time exceeds half the pulse duration")

    def envelope_value(self, t: float, duration: float | None = None) -> float:
        """Instantaneous amplitude ``eps(t)`` for a pulse starting at 0."""
        if self.envelope == "square" or self.rise_time == 0:
            if duration is not None and not (0 <= t <= duration):
                return 0.0
            return self.amplitude
        if t < 0 or (duration is not None and t > duration):
            return 0.0
        r = self.rise_time
        if t < r:
            return self.amplitude * t / r
        if duration is not None and t > duration - r:
            return self.amplitude * (duration - t) / r
        return self.amplitude

    @property
    def other_mode(self) -> int:
        return 2 if self.target_mode == 1 else 1


def _space_for(device: DeviceParams, space: SpaceDescriptor | None) -> SpaceDescriptor:
    if space is None:
        return device.space()
    if tuple(space.levels_per_mode) != tuple(device.levels):
        raise ValueError(
            f"space levels {space.levels_per_mode} do not match device levels {device.levels}"
        )
    return space


def build_system_hamiltonian(device: DeviceParams, space: SpaceDescriptor | None = None) -> Operator:
    """Duffing Hamiltonian of two exchange-coupled transmons (MHz)."""
    space = _space_for(device, space)
    b = annihilation(space, 1)
    c = annihilation(space, 2)
    nb = number(space, 1)
    nc = number(space, 2)
    eye = identity(space)
    h = (
        device.omega1 * nb
        + 0.5 * device.anh1 * (nb @ (nb - eye))
        + device.omega2 * nc
        + 0.5 * device.anh2 * (nc @ (nc - eye))
        + device.coupling_j * (b @ c.dag() + b.dag() @ c)
    )
    return h


def build_drive_operator(space: SpaceDescriptor, mode: int) -> Operator:
    a = annihilation(space, mode)
    return a + a.dag()


def total_excitation(space: SpaceDescriptor) -> Operator:
    return number(space, 1) + number(space, 2)


def _rwa_drive(space, mode, eps, phase) -> Operator:
    a = annihilation(space, mode)
    return (0.5 * eps) * (np.exp(-1j * phase) * a + np.exp(1j * phase) * a.dag())


def rotating_frame_hamiltonian(
    device: DeviceParams,
    pulse: DrivePulse,
    space: SpaceDescriptor | None = None,
    t: float = 0.0,
    duration: float | None = None,
) -> Operator:
    """RWA Hamiltonian in the frame rotating at ``pulse.carrier`` on both modes."""
    if pulse.carrier <= 0:
        raise ValueError("carrier must be positive")
    space = _space_for(device, space)
    h = build_system_hamiltonian(device, space) - pulse.carrier * total_excitation(space)
    eps = pulse.envelope_value(t, duration)
    if eps:
        h = h + _rwa_drive(space, pulse.target_mode, eps, pulse.phase)
        if pulse.crosstalk:
            k = complex(pulse.crosstalk)
            h = h + _rwa_drive(space, pulse.other_mode, eps * abs(k), pulse.phase + np.angle(k))
    return h


def lab_frame_hamiltonian(
    device: DeviceParams,
    pulse: DrivePulse,
    space: SpaceDescriptor | None = None,
    t: float = 0.0,
    duration: float | None = None,
) -> Operator:
    """Full lab-frame Hamiltonian at time ``t`` (ns), counter-rotating terms kept."""
    space = _space_for(device, space)
    h = build_system_hamiltonian(device, space)
    eps = pulse.envelope_value(t, duration)
    if eps:
        arg = RAD_PER_MHZ_NS * pulse.carrier * t
        h = h + (eps * math.cos(arg + pulse.phase)) * build_drive_operator(space, pulse.target_mode)
        if pulse.crosstalk:
            k = complex(pulse.crosstalk)
            h = h + (eps * abs(k) * math.cos(arg + pulse.phase + np.angle(k))) * build_drive_operator(
                space, pulse.other_mode
            )
    return h


_PAULI = {
    "I": np.eye(2, dtype=complex),
    "X": np.array([[0, 1], [1, 0]], dtype=complex),
    "Z": np.array([[1, 0], [0, -1]], dtype=complex),
}


def two_level_lab_hamiltonian(
    omega1: float,
    omega2: float,
    coupling: float,
    t: float = 0.0,
    rabi1: float = 0.0,
    rabi2: float = 0.0,
    rf1: float = 0.0,
    rf2: float = 0.0,
    phi1: float = 0.0,
    phi2: float = 0.0,
) -> Operator:
    """Two-qubit Pauli-form lab Hamiltonian (MHz, ``t`` in ns).

    ``1/2 w1 ZI + R1 cos(rf1 t + phi1) XI + 1/2 w2 IZ + R2 cos(rf2 t + phi2) IX + 1/2 J XX``
    """
    P = _PAULI
    h = (
        0.5 * omega1 * np.kron(P["Z"], P["I"])
        + rabi1 * math.cos(RAD_PER_MHZ_NS * rf1 * t + phi1) * np.kron(P["X"], P["I"])
        + 0.5 * omega2 * np.kron(P["I"], P["Z"])
        + rabi2 * math.cos(RAD_PER_MHZ_NS * rf2 * t + phi2) * np.kron(P["I"], P["X"])
        + 0.5 * coupling * np.kron(P["X"], P["X"])
    )
    return Operator(make_space([2, 2]), h)
