"""
Row contractions: defect operators, purity, the c.n.c. part, minimal
isometric dilation and the Wold decomposition of truncated row isometries.
"""

from dataclasses import dataclass
from functools import cached_property, reduce

import numpy as np

from . import linalg as la
from .errors import NoConvergence, NotRowIsometry, ShapeMismatch
from .fock import TruncatedFock

ROW_TOL = 1e-10


class RowContraction:
    """An ``n``-tuple of ``d x d`` matrices with ``||[T_1 ... T_n]|| <= 1``."""

    def __init__(self, entries, check=True):
        self.entries = la.as_tuple(entries)
        self.n = len(self.entries)
        self.d = self.entries[0].shape[0]
        if check and self.row_norm() > 1 + ROW_TOL:
            raise ShapeMismatch(f"row norm {self.row_norm():.12g} exceeds 1")

    def __len__(self):
        return self.n

    def __getitem__(self, i):
        return self.entries[i]

    def __iter__(self):
        return iter(self.entries)

    def row(self):
        return la.row(self.entries)

    def row_norm(self):
        return la.row_norm(self.entries)

    def word(self, alpha):
        """``T_alpha = T_{a_1} ... T_{a_k}`` for 1-based letters."""
        return reduce(np.matmul, (self.entries[a - 1] for a in alpha), la.eye(self.d))

    def adjoint_word(self, alpha):
        return la.dagger(self.word(alpha))

    @cached_property
    def defects(self):
        return defects(self)

    def __repr__(self):
        return f"RowContraction(n={self.n}, d={self.d}, norm={self.row_norm():.6g})"


def as_row_contraction(T, check=True):
    return T if isinstance(T, RowContraction) else RowContraction(T, check=check)


@dataclass(frozen=True)
class DefectPair:
    delta: np.ndarray  # Delta_T, d x d
    delta_star: np.ndarray  # Delta_{T*}, nd x nd
    rank: int
    rank_star: int

    @cached_property
    def range_basis(self):
        return la.range_basis(self.delta)

    @cached_property
    def range_basis_star(self):
        return la.range_basis(self.delta_star)


def defects(T, tau=la.RANK_TOL):
    """``Delta_T = (I - sum T_i T_i^*)^{1/2}`` and ``Delta_{T*} = (I - T^* T)^{1/2}`` for the row ``T``."""
    T = as_row_contraction(T)
    R = T.row()
    D = la.psd_sqrt(la.eye(T.d) - R @ la.dagger(R))
    Ds = la.psd_sqrt(la.eye(T.n * T.d) - la.dagger(R) @ R)
    return DefectPair(D, Ds, la.rank_tol(D, tau), la.rank_tol(Ds, tau))


def cp_map(T, Y):
    """``Phi_T(Y) = sum_i T_i Y T_i^*``."""
    return sum(t @ Y @ la.dagger(t) for t in T)


def purity_profile(T, K):
    """``||Phi_T^k(I)||`` for ``k = 1..K``; tends to 0 exactly when ``T`` is pure."""
    T = as_row_contraction(T)
    if K < 1:
        raise ShapeMismatch("K must be at least 1")
    Q = la.eye(T.d)
    out = []
    for _ in range(K):
        Q = cp_map(T, Q)
        out.append(la.operator_norm(Q))
    return np.array(out)


def cnc_subspace(T, tol=1e-10, max_iter=10000, eig_tol=1e-6):
    """
    Orthonormal basis of ``N_T``, the vectors with ``sum_{|a|=k} ||T_a^* h||^2 = ||h||^2``
    for all ``k``. Empty (``d x 0``) exactly when ``T`` is c.n.c.

    ``Q_k = Phi_T^k(I)`` is decreasing, so its limit exists; ``N_T`` is the
    eigenvalue-1 eigenspace of the limit.
    """
    T = as_row_contraction(T)
    Q = la.eye(T.d)
    for _ in range(max_iter):
        Qn = cp_map(T, Q)
        step = la.operator_norm(Qn - Q)
        Q = Qn
        if step < tol:
            break
    else:
        raise NoConvergence(f"Phi^k(I) still moving by {step:.3e} after {max_iter} steps")
    w, V = np.linalg.eigh((Q + la.dagger(Q)) / 2)
    return V[:, w > 1 - eig_tol]


# -- dilation ----------------------------------------------------------------------


@dataclass
class Dilation:
    """
    ``V`` acting on ``K (+) Fock_N (x) D_{T*}`` (Fock-major ordering on the
    second summand). ``safe_mask`` marks ``K`` plus Fock degrees ``<= N - 1``,
    where the ``V_i`` are isometries with orthogonal ranges.
    """
    V: RowContraction
    embed: np.ndarray
    N: int
    defect_rank: int
    safe_mask: np.ndarray

    @property
    def dim(self):
        return self.embed.shape[0]


def minimal_isometric_dilation(T, N):
    """
    ``V_i(h, xi) = (T_i h, 1 (x) Delta_{T*} iota_i h + (S_i (x) I) xi)`` with
    ``D_{T*}`` compressed to an orthonormal basis of its range.
    """
    T = as_row_contraction(T)
    if N < 1:
        raise ShapeMismatch("dilation needs N >= 1")
    n, d = T.n, T.d
    Q = T.defects.range_basis_star
    r = Q.shape[1]
    C = la.dagger(Q) @ T.defects.delta_star  # r x nd
    fock = TruncatedFock(n, N)
    S = fock.creation_operators("left")
    dim = d + fock.dim * r
    Vs = []
    for i in range(n):
        V = np.zeros((dim, dim), dtype=np.complex128)
        V[:d, :d] = T[i]
        V[d:d + r, :d] = C[:, i * d:(i + 1) * d]  # vacuum (x) D_{T*}
        V[d:, d:] = np.kron(S[i], la.eye(r))
        Vs.append(V)
    embed = np.zeros((dim, d), dtype=np.complex128)
    embed[:d] = la.eye(d)
    safe = np.concatenate([np.ones(d, bool), np.repeat(fock.safe_mask(N - 1), r)])
    return Dilation(RowContraction(Vs, check=False), embed, N, r, safe)


def dilation_compression_defect(dil, T, max_len):
    """``max_{|a| <= max_len} ||P_K V_a|_K - T_a||``."""
    T = as_row_contraction(T)
    E = dil.embed
    worst = 0.0
    stack = [((), E)]
    while stack:
        alpha, VE = stack.pop()
        worst = max(worst, la.operator_norm(la.dagger(E) @ VE - T.word(alpha)))
        if len(alpha) < max_len:
            for i in range(T.n):
                stack.append(((i + 1,) + alpha, dil.V[i] @ VE))
    return worst


def minimality_rank(dil, max_len):
    """Dimension of ``span{V_a K : |a| <= max_len}``."""
    blocks = [dil.embed]
    frontier = [dil.embed]
    for _ in range(max_len):
        frontier = [v @ F for F in frontier for v in dil.V]
        blocks.extend(frontier)
    return la.rank_tol(np.hstack(blocks))


def row_isometry_defect(V, mask):
    """``max_{i,j} ||(V_i^* V_j - delta_ij I) P||`` with ``P`` the coordinate projection onto ``mask``."""
    V = as_row_contraction(V, check=False)
    cols = np.nonzero(mask)[0]
    worst = 0.0
    for i in range(V.n):
        for j in range(V.n):
            G = la.dagger(V[i]) @ V[j][:, cols]
            if i == j:
                G[cols, np.arange(cols.size)] -= 1.0
            worst = max(worst, la.operator_norm(G))
    return worst


@dataclass
class WoldParts:
    wandering: np.ndarray
    pure: np.ndarray
    residual: np.ndarray
    multiplicity: int
    isometry_defect: float


def wold_decomposition(V, tol=1e-9, safe_mask=None, span_tol=1e-6):
    """
    Wold decomposition of a row isometry given on a declared safe subspace.

    The wandering subspace is the range of ``I - sum V_i V_i^*``, the pure part
    is the span of ``V_a W`` and the residual part is its orthocomplement.
    """
    V = as_row_contraction(V, check=False)
    dim = V.d
    mask = np.ones(dim, bool) if safe_mask is None else np.asarray(safe_mask, bool)
    iso = row_isometry_defect(V, mask)
    if iso > tol:
        raise NotRowIsometry(f"isometry defect {iso:.3e} on the safe subspace exceeds {tol:g}")
    P = la.eye(dim) - la.row_gram(V.entries)
    w, E = np.linalg.eigh((P + la.dagger(P)) / 2)
    W = E[:, w > la.RANK_TOL]
    B = W
    frontier = W
    for _ in range(dim):
        if not frontier.shape[1]:
            break
        cand = np.hstack([v @ frontier for v in V])
        cand = cand - B @ (la.dagger(B) @ cand)
        Uc, sc, _ = np.linalg.svd(cand, full_matrices=False)
        new = Uc[:, sc > span_tol]
        if not new.shape[1]:
            break
        B = np.hstack([B, new])
        frontier = new
    # re-orthonormalize and form the complement
    Uq, s, _ = np.linalg.svd(B, full_matrices=True)
    k = int(np.count_nonzero(s > 0.5))
    return WoldParts(W, Uq[:, :k], Uq[:, k:], W.shape[1], iso)
