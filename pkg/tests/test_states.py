import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from uncert import qmath
from uncert.errors import BadDim, DimMismatch, NotDivisor, NotState, UncertError
from uncert.states import (BasisSet, Povm, QState, factors, fourier_pair, measure_stats,
                           pairwise_coprime, qubit_mub_triple, random_povm,
                           random_rank_one_povm, random_state, tensor_basis, w_basis,
                           w_basis_x_form, w_tensor_permutation)


def test_qstate_rejects_bad_trace():
    with pytest.raises(NotState):
        QState(np.eye(2), (2,))


def test_qstate_rejects_negative_eigenvalue():
    with pytest.raises(NotState):
        QState(np.diag([1.5, -0.5]), (2,))


def test_qstate_dims_must_match():
    with pytest.raises(DimMismatch):
        QState(np.eye(4) / 4, (2, 3))


def test_qstate_default_labels_and_marginal_order():
    st_ = random_state((2, 3), seed=0)
    assert st_.labels == ("a", "b")
    assert st_.marginal("b", "a").dims == (3, 2)
    assert st_.index("b") == 1


def test_matrix_is_read_only():
    st_ = random_state((2,), seed=0)
    with pytest.raises(ValueError):
        st_.matrix[0, 0] = 1


@pytest.mark.parametrize("d, expected", [(1, (1,)), (4, (1, 2, 4)), (6, (1, 2, 3, 6)),
                                         (7, (1, 7))])
def test_factors(d, expected):
    assert factors(d).factors == expected


def test_factors_rejects_zero():
    with pytest.raises(BadDim):
        factors(0)


def test_pairwise_coprime():
    assert pairwise_coprime((2, 3, 5))
    assert not pairwise_coprime((2, 4))


@pytest.mark.parametrize("d", range(2, 9))
def test_fourier_pair_unbiased(d):
    z, x = fourier_pair(d)
    over = np.abs(z.kets.conj().T @ x.kets) ** 2
    assert np.max(np.abs(over - 1 / d)) < 1e-12


@pytest.mark.parametrize("d", [2, 3, 4, 6, 8, 9, 12])
def test_w_basis_endpoints_and_x_form(d):
    z, x = fourier_pair(d)
    assert np.allclose(w_basis(d, 1).kets, z.kets)
    assert np.allclose(w_basis(d, d).kets, x.kets)
    for s in factors(d).factors:
        assert np.allclose(w_basis(d, s).kets, w_basis_x_form(d, s).kets, atol=1e-12)


@pytest.mark.parametrize("d, s", [(4, 2), (6, 2), (6, 3), (8, 4)])
def test_w_basis_is_tensor_of_z_and_x(d, s):
    # |w_{beta s + gamma}> = Perm |z_beta> (x) |x_gamma> up to a global phase
    t = d // s
    _, xs = fourier_pair(s)
    perm = w_tensor_permutation(d, s)
    w = w_basis(d, s)
    for beta in range(t):
        for gamma in range(s):
            target = perm @ np.kron(np.eye(t)[beta], xs.ket(gamma))
            assert abs(abs(np.vdot(target, w.ket(beta * s + gamma))) - 1) < 1e-12


def test_w_basis_rejects_non_divisor():
    with pytest.raises(NotDivisor):
        w_basis(6, 4)


def test_basis_rejects_non_orthonormal():
    with pytest.raises(UncertError):
        BasisSet(np.array([[1, 1], [0, 1]], dtype=complex))


def test_qubit_triple_mutually_unbiased():
    x, y, z = qubit_mub_triple()
    for a, b in ((x, y), (y, z), (x, z)):
        assert np.allclose(np.abs(a.kets.conj().T @ b.kets) ** 2, 0.5)


def test_tensor_basis_dimension():
    z2, x2 = fourier_pair(2)
    _, x3 = fourier_pair(3)
    assert tensor_basis([x2, x3]).d == 6


def test_povm_rejects_incomplete():
    with pytest.raises(UncertError):
        Povm((np.diag([1.0, 0.0]),))


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 2**32 - 1), st.integers(2, 4), st.integers(1, 6))
def test_random_povm_complete(seed, d, n):
    p = random_povm(d, n, seed)
    assert np.allclose(sum(p.elements), np.eye(d), atol=1e-12)
    assert all(np.linalg.eigvalsh(e).min() > -1e-12 for e in p.elements)


def test_random_rank_one_povm():
    p = random_rank_one_povm(3, 5, seed=2)
    assert p.is_rank_one()
    assert len(p) == 5


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_random_state_rank(seed):
    st_ = random_state((2, 3), rank=2, seed=seed)
    assert np.linalg.matrix_rank(st_.matrix, tol=1e-10) == 2


def test_random_state_is_seeded():
    assert np.array_equal(random_state((3,), seed=9).matrix, random_state((3,), seed=9).matrix)


def test_measure_stats_blocks_sum_to_marginal():
    st_ = random_state((2, 3), seed=4)
    z, _ = fourier_pair(2)
    stats = measure_stats(st_, z.as_povm(), 0, 1)
    assert np.allclose(sum(stats.blocks), st_.marginal(1).matrix)
    assert np.allclose([np.trace(b).real for b in stats.blocks], stats.probs)


def test_from_ket_normalizes():
    st_ = QState.from_ket([1, 1], (2,))
    assert st_.is_pure()
    assert np.isclose(qmath.max_abs(st_.matrix - 0.5), 0)
