"""Time-domain simulation of the cross-resonance Rabi protocol.

The control transmon is driven at the dressed 0-1 frequency of the target
while the target's excited-state population is read out as a function of
pulse length. For the control-excited trace the control is flipped by an
ideal (instantaneous) pi pulse before the CR pulse and flipped back after.

Propagation is in the frame rotating at the carrier with counter-rotating
terms dropped; square pulses are then time independent, so every sample
is an exact matrix exponential. A lab-frame RK4 integrator is kept for
validation.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np

from .errors import StepTooLarge
from .hilbert import SpaceDescriptor
from .model import (
    RAD_PER_MHZ_NS,
    DeviceParams,
    DrivePulse,
    build_drive_operator,
    build_system_hamiltonian,
    lab_frame_hamiltonian,
    rotating_frame_hamiltonian,
    total_excitation,
)
from .perturbation import ExactDressing, exact_dressed

__all__ = [
    "PulseSchedule",
    "RabiTrace",
    "Trajectory",
    "dressed_basis",
    "build_cr_schedule",
    "propagate",
    "rk4_propagate",
    "simulate_cr_rabi",
    "target_phase_velocity",
    "decoherence_envelope",
    "max_step",
]


def _target_mode(control_mode: int) -> int:
    return 1 if control_mode == 2 else 2


def _label(control: int, target: int, control_mode: int) -> tuple[int, int]:
    return (target, control) if control_mode == 2 else (control, target)


def dressed_basis(device: DeviceParams) -> ExactDressing:
    """Exact dressing of ``device`` at its own truncation, labels checked up to 3 excitations."""
    return exact_dressed(device, device.space())


@dataclass(frozen=True)
class PulseSchedule:
    """Ordered drive segments ``(pulse, duration_ns)`` applied back to back."""

    segments: tuple[tuple[DrivePulse, float], ...]
    control_prepared_excited: bool = False
    control_mode: int = 2

    def __post_init__(self):
        for pulse, duration in self.segments:
            if duration <= 0:
                raise ValueError("segment durations must be positive")
            pulse.validate_duration(duration)

    @property
    def total_duration(self) -> float:
        return float(sum(d for _, d in self.segments))

    @property
    def initial_label(self) -> tuple[int, int]:
        return _label(int(self.control_prepared_excited), 0, self.control_mode)


def build_cr_schedule(
    device: DeviceParams,
    amplitude: float,
    duration: float,
    control_excited: bool,
    *,
    control_mode: int = 2,
    carrier: float | None = None,
    crosstalk: complex = 0.0,
    phase: float = 0.0,
    envelope: str = "square",
    rise_time: float = 0.0,
    dressing: ExactDressing | None = None,
) -> PulseSchedule:
    """One CR pulse on the control line at the dressed target frequency.

    ``carrier`` overrides the drive frequency (MHz) for detuned-drive studies.
    """
    if duration <= 0:
        raise ValueError("duration must be positive")
    if carrier is None:
        carrier = cr_carrier(device, control_mode, dressing)
    pulse = DrivePulse(
        target_mode=control_mode,
        amplitude=amplitude,
        carrier=carrier,
        phase=phase,
        envelope=envelope,
        rise_time=rise_time,
        crosstalk=crosstalk,
    )
    return PulseSchedule(((pulse, float(duration)),), bool(control_excited), control_mode)


def cr_carrier(
    device: DeviceParams,
    control_mode: int = 2,
    dressing: ExactDressing | None = None,
    reference: str = "ground",
) -> float:
    """Dressed 0-1 frequency of the target (MHz).

    ``reference="ground"`` takes the line with the control in 0;
    ``"mean"`` the midpoint of the two control-conditional lines, which
    detunes both Rabi traces by half the ZZ shift.
    """
    dressing = dressing or dressed_basis(device)
    f0 = dressing.energy(_label(0, 1, control_mode)) - dressing.energy((0, 0))
    if reference == "ground":
        return f0
    if reference != "mean":
        raise ValueError(f"unknown carrier reference {reference!r}")
    f1 = dressing.energy((1, 1)) - dressing.energy(_label(1, 0, control_mode))
    return 0.5 * (f0 + f1)


@dataclass
class Trajectory:
    """States sampled at ``times`` (ns); ``states[k]`` is the state at ``times[k]``."""

    times: np.ndarray
    states: np.ndarray
    frame: str
    carrier: float | None = None

    def norms(self) -> np.ndarray:
        return np.linalg.norm(self.states, axis=1)

    def populations(self, dressing: ExactDressing) -> np.ndarray:
        """Dressed-state populations, shape ``(len(times), dim)``.

        Dressed states of the undriven Hamiltonian are invariant under the
        frame rotation, so this is frame independent.
        """
        amps = self.states @ dressing.vectors.conj()
        return np.abs(amps) ** 2


def _spread(device: DeviceParams, space: SpaceDescriptor, carrier: float | None = None) -> float:
    h = build_system_hamiltonian(device, space)
    if carrier is not None:
        h = h - carrier * total_excitation(space)
    ev = np.linalg.eigvalsh(h.matrix)
    return float(ev[-1] - ev[0])


def max_step(device: DeviceParams, frame: str = "lab", carrier: float | None = None) -> float:
    """Largest allowed integrator step (ns): 1 / (20 * widest transition frequency)."""
    f = _spread(device, device.space(), carrier if frame == "rotating" else None)
    return 1e3 / (20.0 * f)


def rk4_propagate(hamiltonian, psi0: np.ndarray, times, dt: float) -> np.ndarray:
    """Classic RK4 for ``d psi/dt = -i 2 pi H(t) psi`` sampled at ``times`` (ns).

    ``hamiltonian(t)`` returns a matrix in MHz. Between samples the step is
    shrunk so that it divides the gap and never exceeds ``dt``. ``psi0`` may
    be a vector or a matrix of column states.
    """
    times = np.asarray(times, dtype=float)
    psi = np.array(psi0, dtype=complex)
    out = np.empty((len(times),) + psi.shape, dtype=complex)
    t = 0.0
    k = -1j * RAD_PER_MHZ_NS

    def f(tt, y):
        return k * (hamiltonian(tt) @ y)

    for i, target in enumerate(times):
        gap = target - t
        if gap < -1e-12:
            raise ValueError("times must be ascending and non-negative")
        n = max(int(math.ceil(gap / dt - 1e-9)), 0)
        if n:
            h = gap / n
            for _ in range(n):
                k1 = f(t, psi)
                k2 = f(t + 0.5 * h, psi + 0.5 * h * k1)
                k3 = f(t + 0.5 * h, psi + 0.5 * h * k2)
                k4 = f(t + h, psi + h * k3)
                psi = psi + (h / 6.0) * (k1 + 2 * k2 + 2 * k3 + k4)
                t += h
        t = float(target)
        out[i] = psi
    return out


def _evolve_constant(h: np.ndarray, psi0: np.ndarray, times) -> np.ndarray:
    """``exp(-i 2 pi h t) psi0`` for every ``t`` in ``times``, rows are states."""
    evals, evecs = np.linalg.eigh(h)
    c = evecs.conj().T @ psi0
    phases = np.exp(-1j * RAD_PER_MHZ_NS * np.outer(np.asarray(times, dtype=float), evals))
    return (phases * c) @ evecs.T


def _unitary(h: np.ndarray, t: float) -> np.ndarray:
    evals, evecs = np.linalg.eigh(h)
    return (evecs * np.exp(-1j * RAD_PER_MHZ_NS * evals * t)) @ evecs.conj().T


def _ramp_unitary(device, pulse, space, t0, t1, duration, n_sub=40) -> np.ndarray:
    """Piecewise-constant (midpoint) product for a ramped stretch [t0, t1]."""
    u = np.eye(space.dimension, dtype=complex)
    if t1 <= t0:
        return u
    edges = np.linspace(t0, t1, n_sub + 1)
    for a, b in zip(edges[:-1], edges[1:]):
        h = rotating_frame_hamiltonian(device, pulse, space, 0.5 * (a + b), duration).matrix
        u = _unitary(h, b - a) @ u
    return u


def _control_flip(dressing: ExactDressing, control_mode: int) -> np.ndarray:
    """Ideal pi pulse on the control: swaps dressed control levels 0 and 1."""
    space = dressing.space
    perm = np.arange(space.dimension)
    for k, (n1, n2) in enumerate(space.basis_labels):
        c, t = (n2, n1) if control_mode == 2 else (n1, n2)
        if c in (0, 1):
            perm[k] = space.index(_label(1 - c, t, control_mode))
    v = dressing.vectors
    return v[:, perm] @ v.conj().T + (np.eye(space.dimension) - v @ v.conj().T)


def propagate(
    device: DeviceParams,
    schedule: PulseSchedule,
    dt: float,
    frame: str = "rotating",
    dressing: ExactDressing | None = None,
) -> Trajectory:
    """State trajectory sampled every ``dt`` ns over the whole schedule.

    In the rotating frame each square segment is propagated exactly, so
    ``dt`` only sets the sampling; ramps are split into 40 midpoint
    sub-steps. In the lab frame ``dt`` is the RK4 step and must not exceed
    :func:`max_step` (:class:`StepTooLarge` otherwise). Pi-pulse preparation
    and unpreparation are applied instantaneously at the ends.
    """
    if dt <= 0:
        raise ValueError("dt must be positive")
    if not schedule.segments:
        raise ValueError("empty schedule")
    space = device.space()
    dressing = dressing or dressed_basis(device)
    psi = dressing.state((0, 0)).astype(complex)
    flip = _control_flip(dressing, schedule.control_mode)
    if schedule.control_prepared_excited:
        psi = flip @ psi
    total = schedule.total_duration
    n = int(math.floor(total / dt + 1e-9))
    times = np.arange(n + 1) * dt
    if times[-1] < total - 1e-9:
        times = np.append(times, total)

    carrier = schedule.segments[0][0].carrier
    states = np.empty((len(times), space.dimension), dtype=complex)
    if frame == "rotating":
        if any(p.carrier != carrier for p, _ in schedule.segments):
            raise ValueError("rotating-frame propagation needs a common carrier")
        start = 0.0
        for pulse, duration in schedule.segments:
            stop = start + duration
            sel = (times >= start - 1e-9) & (times <= stop + 1e-9)
            local = times[sel] - start
            if pulse.envelope == "square" or pulse.rise_time == 0:
                h = rotating_frame_hamiltonian(device, pulse, space, 0.0, duration).matrix
                states[sel] = _evolve_constant(h, psi, local)
                psi = _evolve_constant(h, psi, [duration])[0]
            else:
                for j, tl in zip(np.flatnonzero(sel), local):
                    states[j] = _ramped_state(device, pulse, space, psi, tl, duration)
                psi = _ramped_state(device, pulse, space, psi, duration, duration)
            start = stop
    elif frame == "lab":
        limit = max_step(device, "lab")
        if dt > limit:
            raise StepTooLarge(f"dt={dt:g} ns exceeds lab-frame limit {limit:.3g} ns")
        bounds = np.cumsum([0.0] + [d for _, d in schedule.segments])

        def ham(t):
            seg = min(np.searchsorted(bounds, t, side="right") - 1, len(schedule.segments) - 1)
            pulse, duration = schedule.segments[seg]
            return lab_frame_hamiltonian(device, pulse, space, t - bounds[seg], duration).matrix

        states[:] = rk4_propagate(ham, psi, times, dt)
    else:
        raise ValueError(f"unknown frame {frame!r}")
    if schedule.control_prepared_excited:
        states[-1] = flip @ states[-1]
    return Trajectory(times=times, states=states, frame=frame, carrier=carrier)


def _ramped_state(device, pulse, space, psi, t, duration):
    """State at time ``t`` inside a ramped pulse of total length ``duration``."""
    r = pulse.rise_time
    if t <= r:
        return _ramp_unitary(device, pulse, space, 0.0, t, duration) @ psi
    psi = _ramp_unitary(device, pulse, space, 0.0, r, duration) @ psi
    flat_end = duration - r
    h = rotating_frame_hamiltonian(device, pulse, space, r, duration).matrix
    psi = _unitary(h, min(t, flat_end) - r) @ psi
    if t > flat_end:
        psi = _ramp_unitary(device, pulse, space, flat_end, t, duration) @ psi
    return psi


@dataclass
class RabiTrace:
    """Target excited-state and leakage populations versus CR pulse length."""

    amplitude: float
    control_state: int
    durations: np.ndarray
    p_excited: np.ndarray
    p_leakage: np.ndarray
    delta: float | None = None
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        self.durations = np.asarray(self.durations, dtype=float)
        self.p_excited = np.asarray(self.p_excited, dtype=float)
        self.p_leakage = np.asarray(self.p_leakage, dtype=float)
        if not (len(self.durations) == len(self.p_excited) == len(self.p_leakage)):
            raise ValueError("trace arrays must have equal length")


def _readout_masks(space: SpaceDescriptor, control_mode: int):
    tm = _target_mode(control_mode)
    excited = np.array([lab[tm - 1] == 1 for lab in space.basis_labels])
    leak = np.array([max(lab) >= 2 for lab in space.basis_labels])
    return excited, leak


def _final_states(device, amplitude, durations, control_excited, control_mode, carrier, crosstalk,
                  phase, envelope, rise_time, dressing):
    """Rotating-frame states after each CR pulse length, pi pulses applied."""
    space = device.space()
    durations = np.asarray(durations, dtype=float)
    pulse = DrivePulse(control_mode, amplitude, carrier, phase, envelope, rise_time, crosstalk)
    flip = _control_flip(dressing, control_mode)
    psi0 = dressing.state((0, 0)).astype(complex)
    if control_excited:
        psi0 = flip @ psi0
    if envelope == "square" or rise_time == 0:
        h = rotating_frame_hamiltonian(device, pulse, space, 0.0).matrix
        states = _evolve_constant(h, psi0, durations)
    else:
        states = np.empty((len(durations), space.dimension), dtype=complex)
        for k, T in enumerate(durations):
            if T < 2 * rise_time:
                raise ValueError(f"duration {T} ns shorter than both ramps")
            states[k] = _ramped_state(device, pulse, space, psi0, T, T)
    return states, flip


def _lab_matrix_fn(device, pulse, space):
    """Fast ``t -> H_lab(t)`` for a square pulse (same terms as :func:`lab_frame_hamiltonian`)."""
    h0 = build_system_hamiltonian(device, space).matrix
    drive = build_drive_operator(space, pulse.target_mode).matrix
    other = build_drive_operator(space, pulse.other_mode).matrix
    k = complex(pulse.crosstalk)
    w = RAD_PER_MHZ_NS * pulse.carrier

    def h(t):
        arg = w * t + pulse.phase
        out = h0 + (pulse.amplitude * math.cos(arg)) * drive
        if k:
            out = out + (pulse.amplitude * abs(k) * math.cos(arg + np.angle(k))) * other
        return out

    return h


def simulate_cr_rabi(
    device: DeviceParams,
    amplitude: float,
    durations,
    control_excited: bool,
    *,
    control_mode: int = 2,
    carrier: float | None = None,
    crosstalk: complex = 0.0,
    phase: float = 0.0,
    envelope: str = "square",
    rise_time: float = 0.0,
    frame: str = "rotating",
    dt: float | None = None,
    dressing: ExactDressing | None = None,
) -> RabiTrace:
    """Target excited-state probability after CR pulses of each length in ``durations`` (ns).

    ``p_excited`` sums dressed populations with the target in 1 (any
    control level); ``p_leakage`` sums states with either transmon at level 2
    or above. ``frame="lab"`` integrates the full Hamiltonian with RK4 at
    step ``dt`` (default :func:`max_step`).
    """
    durations = np.asarray(durations, dtype=float)
    if np.any(np.diff(durations) < 0):
        raise ValueError("durations must be ascending")
    if np.any(durations < 0):
        raise ValueError("durations must be non-negative")
    dressing = dressing or dressed_basis(device)
    if carrier is None:
        carrier = cr_carrier(device, control_mode, dressing)
    space = device.space()
    if frame == "rotating":
        states, flip = _final_states(device, amplitude, durations, control_excited, control_mode,
                                     carrier, crosstalk, phase, envelope, rise_time, dressing)
    elif frame == "lab":
        if envelope != "square" and rise_time:
            raise ValueError("lab-frame validation supports square pulses only")
        pulse = DrivePulse(control_mode, amplitude, carrier, phase, envelope, rise_time, crosstalk)
        flip = _control_flip(dressing, control_mode)
        psi0 = dressing.state((0, 0)).astype(complex)
        if control_excited:
            psi0 = flip @ psi0
        limit = max_step(device, "lab")
        step = limit if dt is None else dt
        if step > limit:
            raise StepTooLarge(f"dt={step:g} ns exceeds lab-frame limit {limit:.3g} ns")
        states = rk4_propagate(_lab_matrix_fn(device, pulse, space), psi0, durations, step)
    else:
        raise ValueError(f"unknown frame {frame!r}")
    if control_excited:
        states = states @ flip.T
    pops = np.abs(states @ dressing.vectors.conj()) ** 2
    excited, leak = _readout_masks(space, control_mode)
    return RabiTrace(
        amplitude=float(amplitude),
        control_state=int(bool(control_excited)),
        durations=durations,
        p_excited=np.clip(pops[:, excited].sum(axis=1), 0.0, 1.0),
        p_leakage=np.clip(pops[:, leak].sum(axis=1), 0.0, 1.0),
        delta=device.detuning(),
        meta={"carrier": carrier, "crosstalk": crosstalk, "frame": frame},
    )


def target_phase_velocity(
    device: DeviceParams,
    amplitude: float,
    durations,
    control_excited: bool,
    *,
    control_mode: int = 2,
    crosstalk: complex = 0.0,
    dressing: ExactDressing | None = None,
) -> float:
    """Signed rotation rate (MHz) of the target Bloch vector during a CR pulse.

    The target state is read in the dressed two-level subspace selected by
    the control state (before the unpreparing pi pulse). Rotation about +X
    from |0> gives ``<Z> = cos(theta)``, ``<Y> = -sin(theta)``; the slope of
    the unwrapped ``theta`` over ``2 pi t`` is returned.
    """
    dressing = dressing or dressed_basis(device)
    carrier = cr_carrier(device, control_mode, dressing)
    durations = np.asarray(durations, dtype=float)
    states, _ = _final_states(device, amplitude, durations, control_excited, control_mode,
                              carrier, crosstalk, 0.0, "square", 0.0, dressing)
    c = int(bool(control_excited))
    a0 = states @ dressing.state(_label(c, 0, control_mode)).conj()
    a1 = states @ dressing.state(_label(c, 1, control_mode)).conj()
    z = np.abs(a0) ** 2 - np.abs(a1) ** 2
    y = 2 * np.imag(np.conj(a0) * a1)
    theta = np.unwrap(np.arctan2(-y, z))
    t_us = durations * 1e-3
    slope = np.polyfit(t_us, theta, 1)[0]
    return float(slope / (2 * np.pi))


def decoherence_envelope(trace: RabiTrace, t1: float, t2: float) -> RabiTrace:
    """Phenomenological damping of a noiseless trace (``t1``, ``t2`` in us).

    The oscillating part around the trace mean decays as ``exp(-t/t2)`` and
    everything relaxes toward the ground state as ``exp(-t/t1)``.
    """
    if t1 <= 0 or t2 <= 0:
        raise ValueError("t1 and t2 must be positive")
    t = trace.durations * 1e-3
    p = trace.p_excited
    mean = float(np.mean(p)) if len(p) else 0.0
    relax = np.exp(-t / t1)
    dephase = np.exp(-t / t2)
    damped = relax * (mean + (p - mean) * dephase)
    return replace(
        trace,
        p_excited=np.clip(damped, 0.0, 1.0),
        p_leakage=trace.p_leakage * relax,
        meta={**trace.meta, "t1_us": t1, "t2_us": t2},
    )
