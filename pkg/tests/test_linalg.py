import numpy as np
import pytest
import scipy.linalg
from hypothesis import given, strategies as st

from ncball import linalg as la
from ncball.errors import IllConditioned, NegativeSpectrum, NotHermitian
from ncball.fock import TruncatedFock
from ncball.poisson import poisson_kernel


def test_psd_sqrt_examples():
    assert np.allclose(la.psd_sqrt(np.eye(2)), np.eye(2), atol=1e-15)
    assert np.allclose(la.psd_sqrt(np.diag([4.0, 0.0])), np.diag([2.0, 0.0]), atol=1e-15)
    lam = np.array([0.6, 0.0])
    assert abs(la.psd_sqrt(np.array([[1 - lam @ lam]]))[0, 0] - 0.8) < 1e-15


def test_psd_sqrt_errors():
    with pytest.raises(NotHermitian):
        la.psd_sqrt(np.array([[1.0, 1.0], [0.0, 1.0]]))
    with pytest.raises(NegativeSpectrum):
        la.psd_sqrt(np.diag([1.0, -1e-3]))
    # eigenvalues within the clamp are treated as zero
    assert np.allclose(la.psd_sqrt(np.diag([1.0, -1e-14])), np.diag([1.0, 0.0]), atol=1e-15)


@given(st.integers(1, 16), st.integers(0, 2 ** 31 - 1))
def test_psd_sqrt_matches_scipy(d, seed):
    M = la.random_psd(d, seed)
    R = la.psd_sqrt(M)
    assert la.operator_norm(R @ R - M) <= 10 * la.CLAMP_TOL * max(1.0, la.operator_norm(M))
    assert la.operator_norm(R - la.dagger(R)) < 1e-13
    assert np.linalg.eigvalsh(R).min() > -1e-12
    assert la.operator_norm(R - scipy.linalg.sqrtm(M)) < 1e-6 * max(1.0, la.operator_norm(M))


def test_operator_norm_examples():
    assert la.operator_norm(np.zeros((3, 3))) == 0
    assert abs(la.operator_norm(la.random_unitary(4, 1)) - 1) < 1e-12
    assert abs(la.operator_norm(np.array([[0, 2], [0, 0]])) - 2) < 1e-15


@given(st.integers(1, 8), st.integers(0, 2 ** 31 - 1))
def test_operator_norm_invariance(d, seed):
    rng = np.random.default_rng(seed)
    M = la.complex_gaussian((d, d), rng)
    N = la.complex_gaussian((d, d), rng)
    U, V = la.random_unitary(d, rng), la.random_unitary(d, rng)
    nm = la.operator_norm(M)
    assert abs(la.operator_norm(U @ M @ V) - nm) <= 1e-12 * nm
    assert la.operator_norm(M @ N) <= nm * la.operator_norm(N) * (1 + 1e-12)
    assert abs(nm - np.linalg.svd(M, compute_uv=False)[0]) <= 1e-12 * nm


def test_rank_examples():
    assert la.rank_tol(np.eye(3), 1e-8) == 3
    assert la.rank_tol(np.zeros((3, 3))) == 0
    lam = (np.array([[0.3]]), np.array([[0.4]]))
    S = TruncatedFock(2, 6).creation_operators()
    # K_lambda K_lambda^* at the scalar point is the rank-one projection onto the eigenvector
    K = poisson_kernel(lam, 1.0, 6).matrix
    assert la.rank_tol(K @ la.dagger(K)) == 1
    assert S[0].shape == (127, 127)


@given(st.integers(1, 8), st.integers(1, 8), st.integers(0, 2 ** 31 - 1))
def test_rank_of_gram(d, k, seed):
    rng = np.random.default_rng(seed)
    A = la.complex_gaussian((d, k), rng) @ la.complex_gaussian((k, d), rng)
    assert la.rank_tol(A @ la.dagger(A)) == la.rank_tol(A) == np.linalg.matrix_rank(A)


def test_random_row_contraction():
    T = la.random_row_contraction(1, 1, 0, 3)
    assert np.all(T[0] == 0)
    A, B = la.random_row_contraction(2, 4, 0.9, 7), la.random_row_contraction(2, 4, 0.9, 7)
    assert all(np.array_equal(a, b) for a, b in zip(A, B))
    assert abs(la.row_norm(A) - 0.9) < 1e-12


@given(st.integers(1, 3), st.integers(1, 6), st.floats(0.05, 1.0), st.integers(0, 2 ** 31 - 1))
def test_random_row_contraction_norm(n, d, t, seed):
    assert abs(la.row_norm(la.random_row_contraction(n, d, t, seed)) - t) < 1e-12


def test_random_unitary_and_sphere():
    U = la.random_unitary(5, 0)
    assert la.operator_norm(la.dagger(U) @ U - np.eye(5)) < 1e-13
    Z = la.random_sphere_points(3, 100, 0)
    assert np.allclose(np.linalg.norm(Z, axis=1), 1, atol=1e-14)


def test_solve_conditioning():
    A = np.array([[1.0, 0.0], [0.0, 1e-14]])
    with pytest.raises(IllConditioned):
        la.solve(A, np.eye(2))
    B = np.array([[2.0, 1.0], [1.0, 3.0]])
    assert np.allclose(la.solve(B, np.eye(2)), np.linalg.inv(B))


def test_block_lift_is_slot_major():
    M = np.arange(4.0).reshape(2, 2)
    L = la.block_lift(M, 2, 3)  # slots of size 1, g = 3
    ref = np.zeros((6, 6))
    for i in range(2):
        for j in range(2):
            ref[i * 3:(i + 1) * 3, j * 3:(j + 1) * 3] = M[i, j] * np.eye(3)
    assert np.array_equal(L, ref)
