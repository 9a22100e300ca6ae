"""Truncated two-mode Fock space and dense operators on it.

Basis states are ordered row-major with mode 1 as the slow index, so the
label ``(n1, n2)`` sits at index ``n1 * levels[1] + n2``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from itertools import product
from numbers import Number

import numpy as np

__all__ = [
    "SpaceDescriptor",
    "Operator",
    "make_space",
    "annihilation",
    "number",
    "identity",
]


@dataclass(frozen=True)
class SpaceDescriptor:
    levels_per_mode: tuple[int, int]
    dimension: int = field(init=False)
    basis_labels: tuple[tuple[int, int], ...] = field(init=False)

    def __post_init__(self):
        levels = tuple(int(n) for n in self.levels_per_mode)
        if len(levels) != 2:
            raise ValueError("exactly two modes are supported")
        for n in levels:
            if n < 2:
                raise ValueError("qubit needs at least two levels")
        object.__setattr__(self, "levels_per_mode", levels)
        object.__setattr__(self, "dimension", levels[0] * levels[1])
        labels = tuple(product(range(levels[0]), range(levels[1])))
        object.__setattr__(self, "basis_labels", labels)

    def index(self, label) -> int:
        n1, n2 = label
        l1, l2 = self.levels_per_mode
        if not (0 <= n1 < l1 and 0 <= n2 < l2):
            raise IndexError(f"label {label} outside truncated space {self.levels_per_mode}")
        return n1 * l2 + n2

    def basis_state(self, label) -> np.ndarray:
        psi = np.zeros(self.dimension, dtype=complex)
        psi[self.index(label)] = 1.0
        return psi


def make_space(levels_per_mode) -> SpaceDescriptor:
    """Build the two-mode space with the given number of levels per mode."""
    return SpaceDescriptor(tuple(levels_per_mode))


class Operator:
    """Dense complex matrix tied to a :class:`SpaceDescriptor`.

    Supports ``+``, ``-``, scalar ``*``, operator products via ``*`` or ``@``,
    and :meth:`dag` for the conjugate transpose. Instances are immutable.
    """

    __slots__ = ("space", "matrix")

    def __init__(self, space: SpaceDescriptor, matrix):
        m = np.array(matrix, dtype=complex)
        d = space.dimension
        if m.shape != (d, d):
            raise ValueError(f"matrix shape {m.shape} does not match space dimension {d}")
        m.setflags(write=False)
        object.__setattr__(self, "space", space)
        object.__setattr__(self, "matrix", m)

    def __setattr__(self, name, value):
        raise AttributeError("Operator is immutable")

    def _check(self, other: "Operator"):
        if other.space != self.space:
            raise ValueError(
                f"space mismatch: {self.space.levels_per_mode} vs {other.space.levels_per_mode}"
            )

    def __add__(self, other):
        if isinstance(other, Operator):
            self._check(other)
            return Operator(self.space, self.matrix + other.matrix)
        return NotImplemented

    def __sub__(self, other):
        if isinstance(other, Operator):
            self._check(other)
            return Operator(self.space, self.matrix - other.matrix)
        return NotImplemented

    def __neg__(self):
        return Operator(self.space, -self.matrix)

    def __mul__(self, other):
        if isinstance(other, Operator):
            return self @ other
        if isinstance(other, Number):
            return Operator(self.space, self.matrix * other)
        return NotImplemented

    def __rmul__(self, other):
        if isinstance(other, Number):
            return Operator(self.space, other * self.matrix)
        return NotImplemented

    def __truediv__(self, other):
        if isinstance(other, Number):
            return Operator(self.space, self.matrix / other)
        return NotImplemented

    def __matmul__(self, other):
        if isinstance(other, Operator):
            self._check(other)
            return Operator(self.space, self.matrix @ other.matrix)
        return NotImplemented

    def dag(self) -> "Operator":
        return Operator(self.space, self.matrix.conj().T)

    def commutator(self, other: "Operator") -> "Operator":
        return self @ other - other @ self

    def is_hermitian(self, tol: float = 1e-10) -> bool:
        return bool(np.max(np.abs(self.matrix - self.matrix.conj().T)) <= tol)

    def element(self, bra, ket) -> complex:
        """Matrix element between two basis labels."""
        return complex(self.matrix[self.space.index(bra), self.space.index(ket)])

    def eigenvalues(self) -> np.ndarray:
        if self.is_hermitian():
            return np.linalg.eigvalsh(self.matrix)
        return np.linalg.eigvals(self.matrix)

    def __eq__(self, other):
        if not isinstance(other, Operator):
            return NotImplemented
        return self.space == other.space and np.array_equal(self.matrix, other.matrix)

    __hash__ = None

    def __repr__(self):
        return f"Operator(levels={self.space.levels_per_mode})"


def _check_mode(mode):
    if mode not in (1, 2):
        raise ValueError(f"mode must be 1 or 2, got {mode!r}")


def _ladder(n: int) -> np.ndarray:
    return np.diag(np.sqrt(np.arange(1, n, dtype=float)), 1)


def annihilation(space: SpaceDescriptor, mode: int) -> Operator:
    """Lowering operator on ``mode`` (1 or 2), identity on the other mode."""
    _check_mode(mode)
    l1, l2 = space.levels_per_mode
    if mode == 1:
        m = np.kron(_ladder(l1), np.eye(l2))
    else:
        m = np.kron(np.eye(l1), _ladder(l2))
    return Operator(space, m)


def number(space: SpaceDescriptor, mode: int) -> Operator:
    a = annihilation(space, mode)
    return a.dag() @ a


def identity(space: SpaceDescriptor) -> Operator:
    return Operator(space, np.eye(space.dimension))
