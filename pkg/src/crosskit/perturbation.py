"""Second-order dressing of the coupled Duffing system.

Closed-form dressed energies and dressed drive matrices to leading order in
``J``, the cross-resonance coefficients derived from them, and the exact
diagonalization used to check all of it.

State labels are ``(n1, n2)`` tuples; the ten states up to three excitations
are kept in the fixed order :data:`PT_LABELS`.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import linear_sum_assignment

from .errors import LabelAmbiguity, MethodMismatchWarning, ResonancePole
from .hilbert import SpaceDescriptor, make_space
from .model import DeviceParams, build_drive_operator, build_system_hamiltonian

__all__ = [
    "PT_LABELS",
    "DEFAULT_POLE_GUARD",
    "DressedSpectrum",
    "DressedDriveMatrix",
    "ExactDressing",
    "EffectiveCRTerms",
    "Diagnostic",
    "dressed_energies_pt2",
    "dressed_drive_matrix_pt",
    "exact_dressed",
    "cr_coefficients",
    "mu_closed_form",
    "validity_check",
    "anticrossing_spectrum",
    "conditional_labels",
]

PT_LABELS: tuple[tuple[int, int], ...] = (
    (0, 0), (0, 1), (1, 0), (1, 1), (0, 2), (2, 0), (0, 3), (1, 2), (2, 1), (3, 0),
)
_PT_INDEX = {lab: i for i, lab in enumerate(PT_LABELS)}

DEFAULT_POLE_GUARD = 1.0
LABEL_THRESHOLD = 0.7


def _guard(pole_guard: float, **denominators):
    for name, value in denominators.items():
        if abs(value) < pole_guard:
            raise ResonancePole(
                f"denominator {name} = {value:.6g} MHz is within the {pole_guard} MHz pole guard"
            )


def _label_str(label) -> str:
    return f"{label[0]}{label[1]}"


@dataclass(frozen=True)
class DressedSpectrum:
    energies: dict
    zeta: float
    source: str

    def energy(self, label) -> float:
        if isinstance(label, str):
            label = (int(label[0]), int(label[1]))
        return self.energies[tuple(label)]

    def transition(self, upper, lower=(0, 0)) -> float:
        return self.energy(upper) - self.energy(lower)


def dressed_energies_pt2(device: DeviceParams, pole_guard: float = DEFAULT_POLE_GUARD) -> DressedSpectrum:
    """Dressed energies of the ten lowest manifolds to second order in ``J``."""
    w1, w2 = device.omega1, device.omega2
    d1, d2 = device.anh1, device.anh2
    J = device.coupling_j
    D = w1 - w2
    _guard(
        pole_guard,
        delta=D,
        anh2_minus_delta=d2 - D,
        anh1_plus_delta=d1 + D,
        two_anh2_minus_delta=2 * d2 - D,
        two_anh1_plus_delta=2 * d1 + D,
        delta_plus_anh1_minus_anh2=D + d1 - d2,
    )
    J2 = J * J
    zeta = 2 * J2 * (d1 + d2) / ((D + d1) * (D - d2))
    e = {
        (0, 0): 0.0,
        (0, 1): w2 - J2 / D,
        (1, 0): w1 + J2 / D,
        (1, 1): w1 + w2 + zeta,
        (0, 2): 2 * w2 + d2 + 2 * J2 / (d2 - D),
        (2, 0): 2 * w1 + d1 + 2 * J2 / (d1 + D),
        (0, 3): 3 * w2 + 3 * d2 + 3 * J2 / (2 * d2 - D),
        (1, 2): 2 * w2 + d2 + w1 + J2 * (D - 3 * d1 - 5 * d2) / ((2 * d2 - D) * (D + d1 - d2)),
        (2, 1): 2 * w1 + d1 + w2 + J2 * (D + 5 * d1 + 3 * d2) / ((2 * d1 + D) * (D + d1 - d2)),
        (3, 0): 3 * w1 + 3 * d1 + 3 * J2 / (2 * d1 + D),
    }
    return DressedSpectrum(energies=e, zeta=zeta, source="pt2")


@dataclass(frozen=True)
class DressedDriveMatrix:
    """Drive operator ``a + a^dag`` of one mode in the dressed basis :data:`PT_LABELS`."""

    which_drive: int
    matrix: np.ndarray
    source: str = "pt"

    def element(self, bra, ket) -> float:
        return float(self.matrix[_PT_INDEX[tuple(bra)], _PT_INDEX[tuple(ket)]])


def dressed_drive_matrix_pt(
    device: DeviceParams, which: int, pole_guard: float = DEFAULT_POLE_GUARD
) -> DressedDriveMatrix:
    """First-order dressed drive matrix for drive line ``which`` (1 or 2)."""
    if which not in (1, 2):
        raise ValueError("which must be 1 or 2")
    d1, d2 = device.anh1, device.anh2
    J = device.coupling_j
    D = device.detuning()
    _guard(
        pole_guard,
        delta=D,
        anh2_minus_delta=d2 - D,
        anh1_plus_delta=d1 + D,
        two_anh2_minus_delta=2 * d2 - D,
        two_anh1_plus_delta=2 * d1 + D,
        delta_plus_anh1_minus_anh2=D + d1 - d2,
    )
    s2, s3, s6 = math.sqrt(2), math.sqrt(3), math.sqrt(6)
    m = np.zeros((10, 10))
    # upper triangle, indices follow PT_LABELS: 00 01 10 11 02 20 03 12 21 30
    if which == 1:
        m[0, 1] = -J / D
        m[0, 2] = 1.0
        m[1, 3] = 1.0
        m[1, 4] = s2 * J / (d2 - D)
        m[1, 5] = -s2 * J * d1 / (D * (d1 + D))
        m[2, 3] = J * (1 / D - 2 / (d1 + D))
        m[2, 5] = s2
        m[3, 7] = -s2 * J * (d2 + d1 - D) / ((d2 - D) * (-d2 + d1 + D))
        m[3, 8] = s2
        m[3, 9] = -s6 * J * d1 / ((d1 + D) * (2 * d1 + D))
        m[4, 6] = s3 * J / (2 * d2 - D)
        m[4, 7] = 1.0
        m[4, 8] = 2 * J * d1 / ((d2 - D) * (-d2 + d1 + D))
        m[5, 8] = J * (d1 - D) / ((d1 + D) * (2 * d1 + D))
        m[5, 9] = s3
    else:
        q = 2 * d2**2 - 3 * D * d2 + D**2
        m[0, 1] = 1.0
        m[0, 2] = J / D
        m[1, 3] = J * (d2 + D) / (D * (D - d2))
        m[1, 4] = s2
        m[2, 3] = 1.0
        m[2, 4] = s2 * J * d2 / ((d2 - D) * D)
        m[2, 5] = s2 * J / (d1 + D)
        m[3, 6] = -s6 * J * d2 / q
        m[3, 7] = s2
        m[3, 8] = s2 * J * (d2 + d1 + D) / ((d1 + D) * (-d2 + d1 + D))
        m[4, 6] = s3
        m[4, 7] = J * (d2 + D) / q
        m[5, 7] = -2 * J * d2 / ((d1 + D) * (-d2 + d1 + D))
        m[5, 8] = 1.0
        m[5, 9] = s3 * J / (2 * d1 + D)
    m = m + m.T
    m.setflags(write=False)
    return DressedDriveMatrix(which_drive=which, matrix=m, source="pt")


@dataclass(frozen=True)
class ExactDressing:
    """Exact eigen-decomposition of the Duffing Hamiltonian with bare-state labels.

    ``vectors[:, k]`` is the dressed state labelled ``space.basis_labels[k]``;
    each column is real with a positive component on its own bare state.
    """

    space: SpaceDescriptor
    energies: np.ndarray
    vectors: np.ndarray
    overlaps: np.ndarray
    spectrum: DressedSpectrum

    def state(self, label) -> np.ndarray:
        return self.vectors[:, self.space.index(label)]

    def energy(self, label) -> float:
        return float(self.energies[self.space.index(label)])

    def drive_matrix(self, which: int, labels=PT_LABELS) -> DressedDriveMatrix:
        """Numerically dressed ``a + a^dag`` restricted to ``labels``."""
        x = build_drive_operator(self.space, which).matrix.real
        idx = [self.space.index(lab) for lab in labels]
        v = self.vectors[:, idx]
        m = v.T @ x @ v
        m.setflags(write=False)
        return DressedDriveMatrix(which_drive=which, matrix=m, source="exact")


def exact_dressed(
    device: DeviceParams,
    space: SpaceDescriptor | None = None,
    check_labels=PT_LABELS,
    threshold: float = LABEL_THRESHOLD,
) -> ExactDressing:
    """Diagonalize the Duffing Hamiltonian and label eigenvectors by bare state.

    Labels form a one-to-one assignment maximizing total bare-state weight,
    which coincides with per-vector maximal overlap whenever states are
    distinguishable. :class:`LabelAmbiguity` is raised when any state in
    ``check_labels`` has squared overlap below ``threshold``.
    """
    if space is None:
        space = device.space()
    if min(space.levels_per_mode) < 4:
        raise ValueError("exact dressing needs at least 4 levels per mode")
    if tuple(device.levels) != tuple(space.levels_per_mode):
        device = device.with_levels(space.levels_per_mode)
    h = build_system_hamiltonian(device, space).matrix.real
    evals, evecs = np.linalg.eigh(h)
    weight = evecs**2  # weight[bare, eig]
    rows, cols = linear_sum_assignment(-weight)
    order = np.empty(space.dimension, dtype=int)
    order[rows] = cols
    vectors = evecs[:, order].copy()
    energies = evals[order].copy()
    overlaps = weight[np.arange(space.dimension), order]
    signs = np.sign(vectors[np.arange(space.dimension), np.arange(space.dimension)])
    signs[signs == 0] = 1.0
    vectors *= signs
    for lab in check_labels:
        k = space.index(lab)
        if overlaps[k] < threshold:
            raise LabelAmbiguity(
                f"dressed state |{_label_str(lab)}> has bare weight {overlaps[k]:.3f} < {threshold}"
            )
    e0 = energies[space.index((0, 0))]
    en = {lab: float(energies[space.index(lab)] - e0) for lab in PT_LABELS if lab in space.basis_labels}
    zeta = en[(1, 1)] - en[(1, 0)] - en[(0, 1)] + en[(0, 0)]
    spec = DressedSpectrum(energies=en, zeta=zeta, source="exact")
    vectors.setflags(write=False)
    energies.setflags(write=False)
    return ExactDressing(space=space, energies=energies, vectors=vectors, overlaps=overlaps, spectrum=spec)


def conditional_labels(drive: int):
    """Dressed-basis transitions of the target when ``drive`` is the control line.

    Returns ``((control 0: lower, upper), (control 1: lower, upper))``.
    The control is the driven mode, the target the other one.
    """
    if drive == 2:
        return ((0, 0), (1, 0)), ((0, 1), (1, 1))
    if drive == 1:
        return ((0, 0), (0, 1)), ((1, 0), (1, 1))
    raise ValueError("drive must be 1 or 2")


@dataclass(frozen=True)
class EffectiveCRTerms:
    """Per-unit-amplitude coefficients of the effective CR drive Hamiltonian.

    ``mu`` multiplies ZX, ``nu`` the unconditional IX term; both are
    dimensionless. ``stark`` is the detuning (MHz) of the control's dressed
    0-1 transition from the CR carrier, i.e. the ZI term of the rotating frame.
    """

    mu: float
    nu: float
    stark: float
    method: str
    drive: int
    conditional: tuple[float, float] = field(default=(math.nan, math.nan))


def mu_closed_form(device: DeviceParams, pole_guard: float = DEFAULT_POLE_GUARD) -> float:
    """CR participation ratio ``(J/D) * d2 / (d2 + D)``."""
    D = device.detuning()
    d2 = device.anh2
    _guard(pole_guard, delta=D, anh2_plus_delta=d2 + D)
    return (device.coupling_j / D) * (d2 / (d2 + D))


def _nu_closed_form(device: DeviceParams, drive: int) -> float:
    D = device.detuning()
    if drive == 2:
        return device.coupling_j / (D - device.anh2)
    return -device.coupling_j / (device.anh1 + D)


def _stark(spectrum: DressedSpectrum, drive: int) -> float:
    (lo0, hi0), _ = conditional_labels(drive)
    control_excited = (0, 1) if drive == 2 else (1, 0)
    return spectrum.transition(control_excited) - spectrum.transition(hi0, lo0)


def _from_matrix(dm: DressedDriveMatrix, drive: int):
    (a0, b0), (a1, b1) = conditional_labels(drive)
    m0 = dm.element(a0, b0)
    m1 = dm.element(a1, b1)
    return 0.5 * (m1 - m0), 0.5 * (m1 + m0), (m0, m1)


def cr_coefficients(
    device: DeviceParams,
    method: str = "numeric",
    drive: int = 2,
    pole_guard: float = DEFAULT_POLE_GUARD,
    levels: int = 5,
) -> EffectiveCRTerms:
    """ZX (``mu``) and IX (``nu``) coefficients for a CR drive on line ``drive``.

    ``method`` selects the route:

    * ``"closed-form"``: the textbook participation ratio (see
      :func:`mu_closed_form`); ``nu`` from the closed-form conditional entries.
    * ``"matrix-element"``: half the difference (``mu``) and half the sum
      (``nu``) of the two conditional target entries of the perturbative
      dressed drive matrix.
    * ``"numeric"``: the same on exactly dressed states, with ``levels`` per mode.

    Conditional entries are taken with the control in 1 minus control in 0.
    """
    if drive not in (1, 2):
        raise ValueError("drive must be 1 or 2")
    if method == "closed-form":
        mu = mu_closed_form(device, pole_guard)
        nu = _nu_closed_form(device, drive)
        spec = dressed_energies_pt2(device, pole_guard)
        return EffectiveCRTerms(mu=mu, nu=nu, stark=_stark(spec, drive), method=method, drive=drive)
    if method == "matrix-element":
        dm = dressed_drive_matrix_pt(device, drive, pole_guard)
        mu, nu, cond = _from_matrix(dm, drive)
        spec = dressed_energies_pt2(device, pole_guard)
        try:
            ref = mu_closed_form(device, pole_guard)
        except ResonancePole:
            ref = None
        if ref is not None and _mismatch(mu, ref):
            warnings.warn(
                f"matrix-element mu={mu:.6g} (drive {drive}) vs closed-form mu={ref:.6g}",
                MethodMismatchWarning,
                stacklevel=2,
            )
        return EffectiveCRTerms(mu=mu, nu=nu, stark=_stark(spec, drive), method=method, drive=drive, conditional=cond)
    if method == "numeric":
        dev = device.with_levels((levels, levels))
        ex = exact_dressed(dev)
        mu, nu, cond = _from_matrix(ex.drive_matrix(drive), drive)
        return EffectiveCRTerms(mu=mu, nu=nu, stark=_stark(ex.spectrum, drive), method=method, drive=drive, conditional=cond)
    raise ValueError(f"unknown method {method!r}")


def _mismatch(a: float, b: float) -> bool:
    if a == 0 and b == 0:
        return False
    if a == 0 or b == 0 or np.sign(a) != np.sign(b):
        return True
    r = abs(a / b)
    return r > 2 or r < 0.5


@dataclass(frozen=True)
class Diagnostic:
    kind: str
    name: str
    value: float
    flagged: bool
    message: str


def validity_check(
    device: DeviceParams,
    pole_guard: float = DEFAULT_POLE_GUARD,
    ratio_limit: float = 0.1,
) -> list[Diagnostic]:
    """Distance of the detuning from every perturbative pole, plus ``|J/D|``."""
    D = device.detuning()
    d1, d2 = device.anh1, device.anh2
    poles = {
        "0": 0.0,
        "-anh2": -d2,
        "anh2": d2,
        "-anh1": -d1,
        "-2*anh1": -2 * d1,
        "2*anh2": 2 * d2,
        "anh2-anh1": d2 - d1,
    }
    out = []
    for name, pole in poles.items():
        dist = abs(D - pole)
        flagged = dist < pole_guard
        msg = f"delta={D:g} MHz is {dist:g} MHz from pole delta={name}={pole:g}"
        out.append(Diagnostic("pole", name, dist, flagged, msg))
    ratio = abs(device.coupling_j / D) if D != 0 else math.inf
    out.append(
        Diagnostic(
            "ratio",
            "|J/delta|",
            ratio,
            ratio > ratio_limit,
            f"|J/delta| = {ratio:.4g} (limit {ratio_limit})",
        )
    )
    return out


def anticrossing_spectrum(device: DeviceParams, delta_grid) -> list[tuple[float, np.ndarray]]:
    """Eigenvalues of the single-excitation block ``{|01>, |10>}`` versus detuning."""
    grid = list(delta_grid)
    if not grid:
        raise ValueError("delta_grid is empty")
    space = make_space([2, 2])
    idx = [space.index((0, 1)), space.index((1, 0))]
    out = []
    for D in grid:
        dev = device.with_detuning(float(D)).with_levels((2, 2))
        h = build_system_hamiltonian(dev, space).matrix.real
        block = h[np.ix_(idx, idx)]
        out.append((float(D), np.linalg.eigvalsh(block)))
    return out
