"""
Noncommutative Poisson kernels and transforms.

``K_{T,r} h = sum_a r^|a| e_a (x) Delta_{T,r} T_a^* h`` with
``Delta_{T,r} = (I - r^2 sum T_i T_i^*)^{1/2}``. Vectors of ``F^2 (x) C^d`` use
Fock-major ordering (index ``word * d + s``).
"""

from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp

from . import linalg as la
from .errors import NoConvergence
from .fock import (RationalVector, TruncatedFock, enumerate_words, fock_dim, level_offset, rational_gram,
                   word_index)
from .opmodel import as_row_contraction, cp_map
from .series import FreeSeries


@dataclass
class PoissonKernel:
    T: object
    r: float
    N: int
    delta: np.ndarray
    matrix: np.ndarray  # (dim Fock_N * d) x d

    def gram(self):
        return la.dagger(self.matrix) @ self.matrix


def defect_r(T, r):
    R = T.row()
    return la.psd_sqrt(la.eye(T.d) - r * r * R @ la.dagger(R))


def adjoint_word_levels(T, N):
    """``levels[k][j] = T_a^*`` for the ``j``-th word of length ``k``; ``T_{a g_i}^* = T_i^* T_a^*``."""
    T = as_row_contraction(T, check=False)
    Ts = np.array([la.dagger(t) for t in T])
    lv = [la.eye(T.d)[None]]
    for _ in range(N):
        prev = lv[-1]
        lv.append(np.einsum("iab,wbc->wiac", Ts, prev).reshape(-1, T.d, T.d))
    return lv


def poisson_kernel(T, r, N):
    """The kernel ``K_{T,r}`` truncated at words of length ``N``, built level by level."""
    T = as_row_contraction(T)
    if not 0 < r <= 1:
        raise ValueError("r must lie in (0, 1]")
    D = defect_r(T, r)
    blocks = [(r ** k) * np.einsum("ab,wbc->wac", D, a) for k, a in enumerate(adjoint_word_levels(T, N))]
    M = np.concatenate(blocks, axis=0).reshape(-1, T.d)
    return PoissonKernel(T, r, N, D, M)


def kernel_gram(T, r, N):
    """``K_{T,r}^* K_{T,r} = sum_{k <= N} r^{2k} Phi_T^k(Delta_{T,r}^2)`` without forming the kernel."""
    T = as_row_contraction(T, check=False)
    D2 = la.eye(T.d) - r * r * la.row_gram(T.entries)
    acc = D2.copy()
    term = D2
    for _ in range(N):
        term = r * r * cp_map(T, term)
        acc = acc + term
    return acc


def kernel_length(T, tol, max_len=5000):
    """Smallest word length after which ``||Phi_T^k(Delta_T^2)||`` drops below ``tol``."""
    T = as_row_contraction(T, check=False)
    term = la.eye(T.d) - la.row_gram(T.entries)
    for k in range(max_len):
        if la.operator_norm(term) < tol:
            return k
        term = cp_map(T, term)
    raise NoConvergence(f"kernel terms still above {tol:g} after {max_len} steps")


def eigen_vector_z(lam, N):
    """``z_lambda = sum_a conj(lambda_a) e_a`` on the truncated Fock space (``= Delta^{-1} K_lambda 1``)."""
    lam = np.asarray(lam, dtype=np.complex128).ravel()
    lb = np.conj(lam)
    parts = [np.ones(1, dtype=np.complex128)]
    for _ in range(N):
        parts.append(np.kron(parts[-1], lb))
    return np.concatenate(parts)


# -- transforms ------------------------------------------------------------------------


def transform_monomial(T, alpha, beta):
    """``P_T[S_a S_b^*] = T_a T_b^*``."""
    T = as_row_contraction(T, check=False)
    return T.word(alpha) @ T.adjoint_word(beta)


def poisson_transform_series(T, f, r=1.0):
    """``sum_{|a| <= maxDeg} r^|a| T_a (x) A_a`` for an analytic series ``f``."""
    T = as_row_contraction(T, check=False)
    return f.eval(tuple(r * t for t in T))


def poisson_transform_words(T, terms):
    """Linear extension of the monomial rule to ``g = sum c S_a S_b^*`` given as ``{(a, b): c}``."""
    T = as_row_contraction(T, check=False)
    return sum(c * transform_monomial(T, a, b) for (a, b), c in terms.items())


def kernel_route_degree(T, r, deg, tol=1e-10, max_rows=4_000_000):
    """
    Smallest ``L`` with ``(r||T||)^{2(L - deg + 1)} / (1 - (r||T||)^2) <= tol``, capped
    so the padded kernel has at most ``max_rows`` rows.
    """
    T = as_row_contraction(T, check=False)
    q = (r * T.row_norm()) ** 2
    L = deg
    if q > 0:
        L = deg - 1 + int(np.ceil(np.log(tol * (1 - q)) / np.log(q))) if q < 1 else deg + 64
    while L > deg and fock_dim(T.n, L) * T.d > max_rows:
        L -= 1
    return max(L, deg)


def kernel_route_transform(T, f, r, L=None, tol=1e-10):
    """
    ``K_{T,r}^* (f(S) (x) I) K_{T,r}`` for a scalar analytic series ``f`` on a padded
    Fock truncation of degree ``L``; agrees with the direct sum up to
    ``(r||T||)^{2(L - deg f + 1)}``.
    """
    T = as_row_contraction(T)
    if L is None:
        L = kernel_route_degree(T, r, max(f.degree(), 0), tol)
    K = poisson_kernel(T, r, L).matrix
    F = f.fock_matrix(L, 1.0, sparse=True)
    FK = sp.kron(F, sp.identity(T.d, format="csr")) @ K
    return la.dagger(K) @ FK


def kernel_monomial_transform(T, alpha, beta, L=None, tol=1e-15, max_rows=2_000_000):
    """
    ``K_T^* (S_a S_b^* (x) I) K_T = sum_g K_{ag}^* K_{bg}`` with the kernel truncated at
    length ``L`` (default: where ``Phi_T^k(Delta^2)`` falls below ``tol``). Kernel blocks
    for ``a g`` at fixed ``|g|`` are contiguous, so the sum is a product of slices.
    Past ``max_rows`` the equal sum ``T_a (sum_g T_g Delta^2 T_g^*) T_b^*`` is used.
    """
    T = as_row_contraction(T)
    alpha, beta = tuple(alpha), tuple(beta)
    n, d = T.n, T.d
    m = max(len(alpha), len(beta))
    if L is None:
        L = kernel_length(T, tol) + m
    if fock_dim(n, L) * d > max_rows:
        return T.word(alpha) @ kernel_gram(T, 1.0, L - m) @ T.adjoint_word(beta)
    K = poisson_kernel(T, 1.0, L).matrix.reshape(-1, d, d)
    ia, ib = word_index(alpha, n) - level_offset(n, len(alpha)), word_index(beta, n) - level_offset(n, len(beta))
    out = np.zeros((d, d), dtype=np.complex128)
    for k in range(L - m + 1):
        sa = level_offset(n, len(alpha) + k) + ia * n ** k
        sb = level_offset(n, len(beta) + k) + ib * n ** k
        out += np.einsum("gba,gbc->ac", K[sa:sa + n ** k].conj(), K[sb:sb + n ** k])
    return out


def kernel_generator_transform(T, i, L):
    """``K^*(S_i (x) I)K = T_i sum_{k <= L-1} Phi^k(Delta^2)`` for the kernel truncated at ``L``."""
    T = as_row_contraction(T, check=False)
    return T[i - 1] @ kernel_gram(T, 1.0, L - 1)


# -- automorphisms -----------------------------------------------------------------------


def boundary_vacuum_columns(psi, words, L):
    """
    ``Psi^_a 1`` on the Fock truncation of degree ``L`` for each word ``a``, computed
    with sparse creation operators. Entries are exact (the compression of an
    analytic operator), so they are the coefficients of the series ``Psi_a``.
    """
    fock = TruncatedFock(psi.n, L)
    S = fock.creation_operators("left", sparse=True)
    vac = np.zeros((fock.dim, 1), dtype=np.complex128)
    vac[0] = 1.0
    cache = {(): vac}
    for w in sorted(set(words), key=len):
        for k in range(len(w) - 1, -1, -1):
            suf = w[k:]
            if suf not in cache:
                cache[suf] = psi.apply_to_vectors(S, cache[w[k + 1:]], L + 1)[w[k] - 1]
    return {w: cache[w][:, 0] for w in words}


def coefficient_series(vec, n, L):
    lv = [vec[level_offset(n, k):level_offset(n, k + 1)].reshape(-1, 1, 1) for k in range(L + 1)]
    return FreeSeries(n, L, lv)


def intertwining_defect(T, psi, alpha, beta, L=14):
    """
    ``||Psi(T)_a Psi(T)_b^* - P_T[Psi^_a Psi^_b^*]||`` where the right side extracts the
    coefficients of ``Psi^_a`` and ``Psi^_b`` from the Fock boundary (degree ``L``) and
    transforms ``S_g S_d^* -> T_g T_d^*``. The truncation error is of order
    ``(||lambda|| ||T||)^L``.
    """
    T = as_row_contraction(T, check=False)
    alpha, beta = tuple(alpha), tuple(beta)
    PT = psi.apply(T.entries)
    left = _word(PT, alpha, T.d) @ la.dagger(_word(PT, beta, T.d))
    cols = boundary_vacuum_columns(psi, [alpha, beta], L)
    A = coefficient_series(cols[alpha], psi.n, L).eval(T.entries)
    B = coefficient_series(cols[beta], psi.n, L).eval(T.entries)
    return la.operator_norm(left - A @ la.dagger(B))


def _word(X, alpha, d):
    out = la.eye(d)
    for a in alpha:
        out = out @ X[a - 1]
    return out


def composition_law_defect(psi1, psi2, alpha, beta, s=3, L=14):
    """
    Compare ``P_{(Psi1 o Psi2)^}[S_a S_b^*]`` with ``P_{Psi2^}[P_{Psi1^}[S_a S_b^*]]`` on the
    Fock space of degree ``s``: the inner transform is ``Psi1^_a Psi1^_b^*``, whose
    coefficients are extracted and transformed at the compressed tuple ``Psi2^``.
    """
    fock = TruncatedFock(psi1.n, s)
    S = fock.creation_operators("left")
    P2 = psi2.apply(S)  # exact compression of the boundary tuple
    comp = psi1.apply(P2)
    left = _word(comp, alpha, fock.dim) @ la.dagger(_word(comp, beta, fock.dim))
    cols = boundary_vacuum_columns(psi1, [tuple(alpha), tuple(beta)], L)
    A = coefficient_series(cols[tuple(alpha)], psi1.n, L).eval(P2)
    B = coefficient_series(cols[tuple(beta)], psi1.n, L).eval(P2)
    return la.operator_norm(left - A @ la.dagger(B))


@dataclass
class VoiculescuReport:
    isometry_defect: float
    rank_one_minus_psipsistar: int
    kernel_unitarity_defect: float
    generator_match_defect: list
    N: int
    safe_degree: int
    kernel_length: int

    def to_dict(self):
        return {
            "isometryDefect": self.isometry_defect,
            "rankDefectOneMinusPsiPsiStar": self.rank_one_minus_psipsistar,
            "kernelUnitarityDefect": self.kernel_unitarity_defect,
            "generatorMatchDefect": list(self.generator_match_defect),
            "N": self.N,
            "safeDegree": self.safe_degree,
            "kernelLength": self.kernel_length,
        }


def boundary_gram_defect(psi, s):
    """
    ``max_{i,j} ||(Psi^_i^* Psi^_j - delta_ij I)|| `` on the span of ``e_b``, ``|b| <= s``,
    computed from rational realizations of the columns ``Psi^_j e_b`` (no truncation).
    """
    words = enumerate_words(psi.n, s)
    cols = [psi.apply_rational(RationalVector.basis(w, psi.n)) for w in words]
    vecs = [cols[k][j] for j in range(psi.n) for k in range(len(words))]
    G = rational_gram(vecs)
    return la.operator_norm(G - la.eye(G.shape[0]))


def defect_vector(psi):
    """Unit vector spanning the range of ``I - Psi^ Psi^*``, from ``(I - Psi^ Psi^*) 1``."""
    n = psi.n
    c = psi.lam @ psi.U
    vac = RationalVector.vacuum(n)
    P = psi.apply_rational(vac)
    v = vac
    for j in range(n):
        v = v + P[j].scale(-np.conj(c[j]))
    nv = np.sqrt(rational_gram([v])[0, 0].real)
    return v.scale(1.0 / nv)


def kernel_coisometry_defect(psi, s):
    """``||K K^* - I||`` on ``F^2_{<= s} (x) D``: Gram defect of ``Psi^_b k`` for ``|b| <= s``."""
    words = enumerate_words(psi.n, s)
    vecs = {(): defect_vector(psi)}
    for w in words:
        if w:
            vecs[w] = psi.apply_rational(vecs[w[1:]])[w[0] - 1]
    G = rational_gram([vecs[w] for w in words])
    return la.operator_norm(G - la.eye(len(words)))


def voiculescu_check(psi, N, safe_degree=None, tol=1e-13, kernel_len=None):
    """
    Defects of the boundary tuple ``Psi^ = Psi(S)`` on the degrees ``<= safe_degree``
    (default ``N - 3``): (a) ``||Psi^* Psi - I||``, (b) rank of ``I - Psi Psi^*``,
    (c) unitarity of the kernel ``K_{Psi^}`` (both ``K^*K`` and ``KK^*``),
    (d) ``||P_{Psi^}(S_i) - Psi^_i||``.

    (b), ``K^*K`` and (d) only involve the co-side, which the compression to the safe
    degrees preserves exactly. (a) and ``KK^*`` involve the isometric side and are
    computed from rational realizations of the vectors involved.
    """
    n = psi.n
    s = N - 3 if safe_degree is None else safe_degree
    s = max(0, min(s, N))
    fock = TruncatedFock(n, N)
    Pn = psi.fock_tuple(N)
    safe = np.nonzero(fock.safe_mask(s))[0]

    G = la.eye(fock.dim) - la.row_gram(Pn)
    rank = la.rank_tol(G[np.ix_(safe, safe)])
    iso = boundary_gram_defect(psi, s)
    kk = kernel_coisometry_defect(psi, s)

    Ts = [p[np.ix_(safe, safe)] for p in Pn]
    if kernel_len is None:
        kernel_len = kernel_length(Ts, tol)
    Gk = kernel_gram(Ts, 1.0, kernel_len)
    kstar_k = la.operator_norm(Gk - la.eye(safe.size))
    gen = [la.operator_norm(kernel_generator_transform(Ts, i + 1, kernel_len) - Ts[i]) for i in range(n)]
    return VoiculescuReport(iso, rank, max(kk, kstar_k), gen, N, s, kernel_len)
