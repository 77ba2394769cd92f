"""
Dense complex linear algebra used by every other module.

All matrices are plain ``numpy.ndarray`` objects of dtype ``complex128``.
Operator tuples (row contractions, points of the ball) are tuples of
square arrays of equal size.
"""

import numpy as np
import scipy.linalg as sla
from scipy.linalg import lapack

from .errors import IllConditioned, NegativeSpectrum, NotHermitian, ShapeMismatch

CLAMP_TOL = 1e-12
RANK_TOL = 1e-8
COND_LIMIT = 1e12


def as_matrix(M):
    A = np.asarray(M, dtype=np.complex128)
    if A.ndim == 0:
        A = A.reshape(1, 1)
    if A.ndim != 2:
        raise ShapeMismatch(f"expected a 2-d matrix, got shape {A.shape}")
    return np.ascontiguousarray(A)


def dagger(M):
    return np.conj(np.swapaxes(M, -1, -2))


def eye(d):
    return np.eye(d, dtype=np.complex128)


def psd_sqrt(M, clamp_tol=CLAMP_TOL):
    """
    Square root of a Hermitian positive semidefinite matrix.

    Eigenvalues in ``[-clamp_tol, clamp_tol]`` are treated as zero.

    Raises
    ------
    NotHermitian
        if ``||M - M*|| > clamp_tol`` (relative to ``||M||`` when it exceeds 1)
    NegativeSpectrum
        if some eigenvalue is below ``-clamp_tol``
    """
    M = as_matrix(M)
    scale = max(1.0, float(np.max(np.abs(M))) if M.size else 1.0)
    if np.max(np.abs(M - dagger(M))) > clamp_tol * scale:
        raise NotHermitian("matrix is not Hermitian within tolerance")
    H = (M + dagger(M)) / 2
    w, V = np.linalg.eigh(H)
    if w.size and w[0] < -clamp_tol * scale:
        raise NegativeSpectrum(f"eigenvalue {w[0]:.3e} below -{clamp_tol:g}")
    w = np.where(w > clamp_tol * scale, w, 0.0)
    return (V * np.sqrt(w)) @ dagger(V)


def operator_norm(M):
    """Largest singular value; 0 for an empty or zero matrix."""
    M = as_matrix(M)
    if not M.size or not np.any(M):
        return 0.0
    return float(np.linalg.norm(M, 2))


def rank_tol(M, tau=RANK_TOL):
    """Number of singular values exceeding ``tau * sigma_max``."""
    M = as_matrix(M)
    if not M.size:
        return 0
    s = np.linalg.svd(M, compute_uv=False)
    if s[0] == 0.0:
        return 0
    return int(np.count_nonzero(s > tau * s[0]))


def range_basis(M, tau=RANK_TOL):
    """Orthonormal columns spanning the numerical range of ``M``."""
    M = as_matrix(M)
    U, s, _ = np.linalg.svd(M, full_matrices=False)
    if not s.size or s[0] == 0.0:
        return np.zeros((M.shape[0], 0), dtype=np.complex128)
    return U[:, s > tau * s[0]]


def solve(A, B, cond_limit=COND_LIMIT):
    """
    Solve ``A X = B`` by LU with partial pivoting.

    Raises ``IllConditioned`` when the estimated 1-norm condition number
    exceeds ``cond_limit``.
    """
    A = as_matrix(A)
    lu, piv, info = lapack.zgetrf(A)
    if info > 0:
        raise IllConditioned("singular matrix")
    anorm = np.linalg.norm(A, 1)
    rcond, _ = lapack.zgecon(lu, anorm, norm="1")
    if rcond * cond_limit < 1.0:
        raise IllConditioned(f"condition number {1 / max(rcond, 1e-300):.3e} exceeds {cond_limit:g}")
    return sla.lu_solve((lu, piv), B)


def inv(A, cond_limit=COND_LIMIT):
    A = as_matrix(A)
    return solve(A, eye(A.shape[0]), cond_limit)


# -- operator tuples -----------------------------------------------------------


def as_tuple(X):
    """Normalize a sequence of square matrices (or scalars) into a tuple of arrays."""
    Xs = tuple(as_matrix(x) for x in X)
    if not Xs:
        raise ShapeMismatch("empty operator tuple")
    d = Xs[0].shape[0]
    for x in Xs:
        if x.shape != (d, d):
            raise ShapeMismatch("all tuple entries must be square of the same size")
    return Xs


def row(X):
    """The 1 x n block row ``[X_1 ... X_n]``."""
    return np.hstack(as_tuple(X))


def unrow(M, n):
    """Split a ``d x n*d`` block row back into its entries."""
    M = as_matrix(M)
    d = M.shape[0]
    if M.shape[1] != n * d:
        raise ShapeMismatch(f"block row of shape {M.shape} is not 1 x {n} blocks")
    return tuple(M[:, i * d:(i + 1) * d] for i in range(n))


def row_norm(X):
    """``||X_1 X_1^* + ... + X_n X_n^*||^{1/2}``."""
    return operator_norm(row(X))


def row_gram(X):
    """``sum_i X_i X_i^*``."""
    X = as_tuple(X)
    return sum(x @ dagger(x) for x in X)


def block_lift(M, n, g):
    """
    ``I_G (x) M`` for an operator ``M`` on ``K^(n)``, in the slot-major
    ordering of ``(G (x) K)^(n)`` used for block rows.
    """
    M = as_matrix(M)
    d = M.shape[0] // n
    out = np.zeros((n * g * d, n * g * d), dtype=np.complex128)
    Ig = eye(g)
    for s in range(n):
        for t in range(n):
            blk = M[s * d:(s + 1) * d, t * d:(t + 1) * d]
            if np.any(blk):
                out[s * g * d:(s + 1) * g * d, t * g * d:(t + 1) * g * d] = np.kron(Ig, blk)
    return out


def scalar_kron(L, d):
    """``[l_ij I_d]`` for an ``n x m`` scalar matrix ``L``."""
    return np.kron(as_matrix(L), eye(d))


# -- random instances ------------------------------------------------------------


def _rng(seed):
    return seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)


def complex_gaussian(shape, rng):
    rng = _rng(rng)
    return (rng.standard_normal(shape) + 1j * rng.standard_normal(shape)) / np.sqrt(2)


def random_row_contraction(n, d, target_norm, seed):
    """
    ``n`` complex Gaussian ``d x d`` matrices rescaled so the row norm equals
    ``target_norm``. Deterministic for a fixed seed.
    """
    rng = _rng(seed)
    G = complex_gaussian((n, d, d), rng)
    if target_norm == 0:
        return tuple(np.zeros((d, d), dtype=np.complex128) for _ in range(n))
    scale = target_norm / operator_norm(np.hstack(list(G)))
    return tuple(g * scale for g in G)


def random_unitary(d, seed):
    """Haar unitary: QR of a complex Gaussian matrix with phase-fixed diagonal of R."""
    rng = _rng(seed)
    Q, R = np.linalg.qr(complex_gaussian((d, d), rng))
    ph = np.diag(R) / np.abs(np.diag(R))
    return Q * ph


def random_ball_point(n, seed, radius=None):
    """A point of the open unit ball B_n; uniform direction, norm ``radius`` or U(0, 0.9)."""
    rng = _rng(seed)
    v = complex_gaussian(n, rng)
    v /= np.linalg.norm(v)
    r = rng.uniform(0.0, 0.9) if radius is None else radius
    return v * r


def random_sphere_points(n, count, seed):
    """``count`` points distributed by the rotation-invariant measure on the unit sphere of C^n."""
    rng = _rng(seed)
    v = complex_gaussian((count, n), rng)
    return v / np.linalg.norm(v, axis=1, keepdims=True)


def random_psd(d, seed, rank=None):
    rng = _rng(seed)
    A = complex_gaussian((d, rank or d), rng)
    return A @ dagger(A)


def random_commuting_contraction(n, d, target_norm, seed):
    """Commuting tuple: polynomials in one random matrix, rescaled to the given row norm."""
    rng = _rng(seed)
    A = complex_gaussian((d, d), rng)
    A /= operator_norm(A)
    coeffs = complex_gaussian((n, 3), rng)
    Ts = []
    for c in coeffs:
        Ts.append(c[0] * eye(d) + c[1] * A + c[2] * (A @ A))
    scale = target_norm / row_norm(Ts)
    return tuple(t * scale for t in Ts)
