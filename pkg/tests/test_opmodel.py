import numpy as np
import pytest
from hypothesis import given, strategies as st

from ncball import linalg as la
from ncball.errors import NegativeSpectrum, NotRowIsometry, ShapeMismatch
from ncball.fock import TruncatedFock, enumerate_words
from ncball.mobius import BallAutomorphism
from ncball.opmodel import (RowContraction, cnc_subspace, cp_map, defects, dilation_compression_defect,
                            minimal_isometric_dilation, minimality_rank, purity_profile, row_isometry_defect,
                            wold_decomposition)
from ncball.suites import shift_plus_unitary

seeds = st.integers(0, 2 ** 31 - 1)


def test_row_contraction_rejects_large_norm():
    with pytest.raises(ShapeMismatch):
        RowContraction(la.random_row_contraction(2, 3, 1.2, 0))


def test_defects_scalar_example():
    D = defects([np.array([[0.6]]), np.array([[0.0]])])
    assert abs(D.delta[0, 0] - 0.8) < 1e-14
    assert D.rank == 1 and D.rank_star == 2


def test_defects_negative_spectrum_propagates():
    T = RowContraction(la.random_row_contraction(2, 3, 1.5, 0), check=False)
    with pytest.raises(NegativeSpectrum):
        defects(T)


def test_defects_isometry_n1():
    U = la.random_unitary(4, 1)
    D = defects([U[:, :4]])
    assert la.operator_norm(D.delta_star) < 1e-7
    assert D.rank_star == 0


def test_defects_truncated_shift_is_vacuum_on_safe_part():
    fock = TruncatedFock(2, 4)
    S = fock.creation_operators("left")
    D = defects(S)
    # I - sum S_i S_i^* is the vacuum projection plus nothing else below the top degree
    safe = fock.safe_mask(3)
    P = np.zeros(fock.dim)
    P[0] = 1
    assert np.allclose(np.diag(D.delta)[safe], P[safe], atol=1e-12)


@given(seeds, st.integers(1, 3), st.integers(1, 4))
def test_defect_squares(seed, n, d):
    T = la.random_row_contraction(n, d, 0.9, seed)
    D = defects(T)
    R = la.row(T)
    assert la.operator_norm(D.delta @ D.delta - (la.eye(d) - R @ la.dagger(R))) <= 1e-10
    assert la.operator_norm(D.delta_star @ D.delta_star - (la.eye(n * d) - la.dagger(R) @ R)) <= 1e-10


@given(seeds, st.integers(1, 4))
def test_defect_intertwining_for_points(seed, n):
    lam = la.random_ball_point(n, seed)
    L = lam.reshape(1, n).astype(np.complex128)
    D = defects([np.array([[z]]) for z in lam])
    assert la.operator_norm(D.delta @ L - L @ D.delta_star) <= 1e-12
    assert la.operator_norm(la.dagger(L) @ D.delta - D.delta_star @ la.dagger(L)) <= 1e-12


@given(seeds, st.floats(0.1, 0.95))
def test_purity_strict_bound(seed, s):
    T = la.random_row_contraction(2, 3, s, seed)
    prof = purity_profile(T, 10)
    k = np.arange(1, 11)
    assert np.all(prof <= s ** (2 * k) * (1 + 1e-10))
    assert np.all(np.diff(prof) <= 1e-14)


def test_purity_unitary_and_errors():
    prof = purity_profile([la.random_unitary(3, 2)], 5)
    assert np.allclose(prof, 1.0, atol=1e-12)
    with pytest.raises(ShapeMismatch):
        purity_profile([np.eye(2)], 0)


def test_purity_theta_boundary_tuple():
    from ncball.charfun import CharFunction
    lam = np.array([0.5, 0.3j])
    C = CharFunction([np.array([[z]]) for z in lam])
    # the 1 x 2 boundary row split into its two Fock-space entries (Fock-major columns)
    B = C.boundary(7)
    prof = purity_profile([B[:, 0::2], B[:, 1::2]], 50)
    assert prof[-1] < 1e-3


def test_cnc_examples():
    assert cnc_subspace(la.random_row_contraction(2, 3, 0.9, 3)).shape[1] == 0
    assert cnc_subspace([np.array([[1.0]])]).shape[1] == 1
    B = cnc_subspace([np.diag([1.0, 0.5])])
    assert B.shape[1] == 1 and abs(abs(B[0, 0]) - 1) < 1e-8


def test_cnc_invariant_under_automorphism():
    T = [np.diag([1.0, 0.5, 0.2]).astype(np.complex128)]
    psi = BallAutomorphism(np.array([0.4 + 0.2j]), np.array([[np.exp(0.3j)]]))
    assert cnc_subspace(T).shape[1] == cnc_subspace(psi.apply(T)).shape[1] == 1


def test_cp_map_identity():
    T = la.random_row_contraction(2, 3, 0.8, 0)
    R = la.row(T)
    assert la.operator_norm(cp_map(T, la.eye(3)) - R @ la.dagger(R)) < 1e-14


def test_dilation_of_zero_is_shift():
    dil = minimal_isometric_dilation([np.zeros((1, 1))], 4)
    V = dil.V[0]
    # K = C, Fock part C^5: V e_0 = e_1 and then S shifts
    expect = np.zeros((6, 6))
    for j in range(5):
        expect[j + 1, j] = 1
    assert np.allclose(V, expect, atol=1e-12)


def test_dilation_of_isometry_has_zero_defect():
    U = la.random_unitary(3, 4)
    dil = minimal_isometric_dilation([U], 3)
    assert dil.defect_rank == 0
    assert np.allclose(dil.V[0], U)


@given(seeds)
def test_dilation_compression_and_isometry(seed):
    rng = np.random.default_rng(seed)
    T = la.random_row_contraction(2, 3, rng.uniform(0.1, 1.0), rng)
    dil = minimal_isometric_dilation(T, 4)
    assert dilation_compression_defect(dil, T, 3) <= 1e-10
    assert row_isometry_defect(dil.V, dil.safe_mask) <= 1e-10
    assert minimality_rank(dil, 5) == dil.dim


def test_dilation_contract_adjoint():
    T = la.random_row_contraction(2, 3, 0.8, 5)
    dil = minimal_isometric_dilation(T, 3)
    E = dil.embed
    for i in range(2):
        assert la.operator_norm(la.dagger(dil.V[i]) @ E - E @ la.dagger(T[i])) < 1e-12


def test_dilation_commutes_with_automorphisms():
    T = la.random_row_contraction(2, 2, 0.7, 6)
    psi = BallAutomorphism.random(2, 7)
    dil = minimal_isometric_dilation(T, 2)
    PV, PT, E = psi.apply(dil.V.entries), psi.apply(T), dil.embed
    for a in enumerate_words(2, 2):
        Va, Ta = E, la.eye(2)
        for i in reversed(a):
            Va, Ta = PV[i - 1] @ Va, PT[i - 1] @ Ta
        assert la.operator_norm(la.dagger(E) @ Va - Ta) <= 1e-8


def test_dilation_rejects_bad_N():
    with pytest.raises(ShapeMismatch):
        minimal_isometric_dilation([np.zeros((1, 1))], 0)


def test_wold_shift_plus_unitary():
    rng = np.random.default_rng(0)
    V, W, safe = shift_plus_unitary(5, 3, rng)
    parts = wold_decomposition([V], safe_mask=safe)
    assert parts.multiplicity == 1
    assert parts.residual.shape[1] == 3
    R = parts.residual
    # residual part is unitarily equivalent to W: same eigenvalues
    ev = np.sort_complex(np.linalg.eigvals(la.dagger(R) @ V @ R))
    assert np.allclose(ev, np.sort_complex(np.linalg.eigvals(W)), atol=1e-10)
    assert la.operator_norm(la.dagger(parts.pure) @ R) < 1e-10


def test_wold_unitary_has_no_wandering_space():
    parts = wold_decomposition([la.random_unitary(4, 9)])
    assert parts.multiplicity == 0 and parts.residual.shape[1] == 4


def test_wold_truncated_shift_tuple():
    fock = TruncatedFock(2, 6)
    S = fock.creation_operators("left")
    parts = wold_decomposition(S, safe_mask=fock.safe_mask(5))
    assert parts.multiplicity == 1
    assert abs(abs(parts.wandering[0, 0]) - 1) < 1e-12


def test_wold_rejects_non_isometry():
    with pytest.raises(NotRowIsometry):
        wold_decomposition(la.random_row_contraction(2, 3, 0.5, 0))


@given(seeds)
def test_automorphism_preserves_strict_contractions(seed):
    rng = np.random.default_rng(seed)
    X = la.random_row_contraction(2, 3, rng.uniform(0, 0.99), rng)
    psi = BallAutomorphism.random(2, rng)
    assert la.row_norm(psi.apply(X)) < 1


@pytest.mark.parametrize("n, N, lam", [(1, 40, [0.3 + 0.2j]), (2, 8, [0.04, 0.03j])])
def test_automorphism_preserves_row_isometry_on_safe_subspace(n, N, lam):
    fock = TruncatedFock(n, N)
    S = fock.creation_operators("left")
    psi = BallAutomorphism(np.array(lam), la.random_unitary(n, 3))
    # truncation leaks into low degrees only through |lambda|^(N - 1)
    assert row_isometry_defect(psi.apply(S), fock.safe_mask(1)) <= 1e-8
