import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from crosskit.hilbert import Operator, annihilation, identity, make_space, number


class TestSpace:
    def test_two_by_two(self):
        s = make_space([2, 2])
        assert s.dimension == 4
        assert list(s.basis_labels) == [(0, 0), (0, 1), (1, 0), (1, 1)]

    def test_four_by_four(self):
        assert make_space([4, 4]).dimension == 16

    def test_row_major_mode_one_slow(self):
        assert list(make_space([3, 2]).basis_labels) == [(0, 0), (0, 1), (1, 0), (1, 1), (2, 0), (2, 1)]

    def test_rejects_single_level(self):
        with pytest.raises(ValueError, match="at least two levels"):
            make_space([1, 3])

    def test_labels_stable(self):
        assert make_space([4, 5]).basis_labels == make_space([4, 5]).basis_labels

    @given(st.integers(2, 6), st.integers(2, 6))
    def test_labels_distinct_and_in_range(self, l1, l2):
        s = make_space([l1, l2])
        labels = list(s.basis_labels)
        assert len(labels) == s.dimension == l1 * l2
        assert len(set(labels)) == len(labels)
        assert all(n1 < l1 and n2 < l2 for n1, n2 in labels)
        assert all(s.index(lab) == k for k, lab in enumerate(labels))


class TestLadder:
    def test_mode_one_on_qubits(self):
        s = make_space([2, 2])
        b = annihilation(s, 1)
        nz = {(s.basis_labels[i], s.basis_labels[j]) for i, j in zip(*np.nonzero(b.matrix))}
        assert nz == {((0, 0), (1, 0)), ((0, 1), (1, 1))}
        assert b.element((0, 0), (1, 0)) == 1

    def test_mode_two_sqrt2(self):
        c = annihilation(make_space([3, 3]), 2)
        assert c.element((0, 1), (0, 2)) == pytest.approx(np.sqrt(2))

    @pytest.mark.parametrize("levels", [[2, 3], [4, 4], [5, 3]])
    def test_number_spectrum(self, levels):
        s = make_space(levels)
        for mode in (1, 2):
            a = annihilation(s, mode)
            ev = np.unique(np.round((a.dag() @ a).eigenvalues(), 12))
            assert np.allclose(ev, np.arange(levels[mode - 1]))

    def test_invalid_mode(self):
        with pytest.raises(ValueError):
            annihilation(make_space([2, 2]), 3)

    @pytest.mark.parametrize("mode", [1, 2])
    def test_commutator_is_identity_below_top_level(self, mode):
        s = make_space([4, 5])
        a = annihilation(s, mode)
        comm = a.commutator(a.dag()).matrix
        keep = [k for k, lab in enumerate(s.basis_labels) if lab[mode - 1] < s.levels_per_mode[mode - 1] - 1]
        assert np.allclose(comm[np.ix_(keep, keep)], np.eye(len(keep)))

    def test_modes_commute(self):
        s = make_space([4, 4])
        b, c = annihilation(s, 1), annihilation(s, 2)
        assert np.max(np.abs(b.commutator(c).matrix)) < 1e-12
        assert np.max(np.abs(b.commutator(c.dag()).matrix)) < 1e-12


class TestAlgebra:
    def test_quadrature_hermitian(self):
        b = annihilation(make_space([4, 4]), 1)
        assert (b + b.dag()).is_hermitian()
        assert not b.is_hermitian()

    def test_excitation_number_conserved_by_exchange(self):
        s = make_space([4, 4])
        b, c = annihilation(s, 1), annihilation(s, 2)
        n_tot = number(s, 1) + number(s, 2)
        exchange = b @ c.dag() + b.dag() @ c
        assert np.max(np.abs(n_tot.commutator(exchange).matrix)) < 1e-12

    @given(st.complex_numbers(max_magnitude=10, allow_nan=False, allow_infinity=False))
    @settings(max_examples=25)
    def test_scalar_dagger(self, alpha):
        b = annihilation(make_space([3, 3]), 2)
        assert np.allclose((alpha * b).dag().matrix, (np.conj(alpha) * b.dag()).matrix)

    def test_space_mismatch(self):
        with pytest.raises(ValueError, match="space mismatch"):
            identity(make_space([2, 2])) + identity(make_space([3, 2]))

    def test_shape_checked(self):
        with pytest.raises(ValueError):
            Operator(make_space([2, 2]), np.eye(3))

    def test_immutable(self):
        op = identity(make_space([2, 2]))
        with pytest.raises(AttributeError):
            op.matrix = np.zeros((4, 4))

    def test_scalar_ops(self):
        s = make_space([2, 3])
        one = identity(s)
        assert np.allclose(((2 * one - one) / 2).matrix, 0.5 * np.eye(6))
        assert (one * one) == one
        assert np.allclose((-one).matrix, -np.eye(6))
