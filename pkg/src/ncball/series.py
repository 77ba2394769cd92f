"""
Truncated free power series with matrix coefficients.

A series ``F = sum_a Z_a (x) A_a`` is stored level by level: ``levels[k]`` is an
array of shape ``(n**k, p, q)`` whose ``j``-th slice is the coefficient of the
``j``-th word of length ``k`` in lexicographic order. Evaluation at a tuple
``X`` of ``d x d`` matrices returns the ``(d p) x (d q)`` matrix
``sum_a kron(X_a, A_a)``.
"""

from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp

from . import linalg as la
from .errors import RangeViolation, ShapeMismatch
from .fock import fock_dim, level_offset, word_index, words_of_length

DEFAULT_R_EVAL = 0.9
DEFAULT_R_GRID = (0.5, 0.9, 0.99, 0.999)


def default_degree(n):
    return {1: 24, 2: 6, 3: 4}.get(n, 3)


class FreeSeries:
    def __init__(self, n, max_deg, levels):
        self.n = int(n)
        self.max_deg = int(max_deg)
        if len(levels) != self.max_deg + 1:
            raise ShapeMismatch("need one coefficient level per degree 0..max_deg")
        lv = [np.asarray(a, dtype=np.complex128) for a in levels]
        p, q = lv[0].shape[1:]
        for k, a in enumerate(lv):
            if a.shape != (self.n ** k, p, q):
                raise ShapeMismatch(f"level {k} has shape {a.shape}, expected {(self.n ** k, p, q)}")
            if not np.all(np.isfinite(a)):
                raise ShapeMismatch(f"level {k} has non-finite coefficients")
        self.levels = lv
        self.block_shape = (p, q)

    # -- construction ------------------------------------------------------------

    @classmethod
    def zeros(cls, n, max_deg, block_shape=(1, 1)):
        p, q = block_shape
        return cls(n, max_deg, [np.zeros((n ** k, p, q), dtype=np.complex128) for k in range(max_deg + 1)])

    @classmethod
    def from_terms(cls, n, max_deg, terms, block_shape=None):
        """``terms`` maps words (tuples of 1-based letters) to scalars or blocks."""
        terms = {tuple(w): la.as_matrix(c) for w, c in dict(terms).items()}
        if block_shape is None:
            block_shape = next(iter(terms.values())).shape if terms else (1, 1)
        F = cls.zeros(n, max_deg, block_shape)
        for w, c in terms.items():
            if len(w) > max_deg:
                raise ShapeMismatch(f"word {w} exceeds max_deg {max_deg}")
            if c.shape != tuple(block_shape):
                raise ShapeMismatch(f"coefficient of {w} has shape {c.shape}")
            F.levels[len(w)][word_index(w, n) - level_offset(n, len(w))] += c
        return F

    @classmethod
    def constant(cls, n, max_deg, c):
        c = la.as_matrix(c)
        return cls.from_terms(n, max_deg, {(): c}, c.shape)

    @classmethod
    def variable(cls, n, max_deg, i):
        return cls.from_terms(n, max_deg, {(i,): 1.0})

    # -- access ------------------------------------------------------------------

    def coeff(self, word):
        word = tuple(word)
        if len(word) > self.max_deg:
            return np.zeros(self.block_shape, dtype=np.complex128)
        return self.levels[len(word)][word_index(word, self.n) - level_offset(self.n, len(word))]

    def terms(self, tol=0.0):
        """Nonzero ``(word, coefficient)`` pairs in graded-lex order."""
        out = []
        for k, a in enumerate(self.levels):
            nz = np.nonzero(np.max(np.abs(a), axis=(1, 2)) > tol)[0]
            if nz.size:
                ws = words_of_length(self.n, k)
                out.extend((ws[j], a[j]) for j in nz)
        return out

    def degree(self):
        """Largest ``k`` with a nonzero level, -1 for the zero series."""
        for k in range(self.max_deg, -1, -1):
            if np.any(self.levels[k]):
                return k
        return -1

    def level_norms(self):
        """``c_k = ||sum_{|a|=k} A_a^* A_a||^{1/2}`` for each degree."""
        return np.array([la.operator_norm(a.reshape(-1, self.block_shape[1])) for a in self.levels])

    def coefficient_mass(self, degrees):
        return float(np.sqrt(sum(np.sum(np.abs(self.levels[k]) ** 2) for k in degrees if k <= self.max_deg)))

    def truncate(self, max_deg):
        if max_deg <= self.max_deg:
            return FreeSeries(self.n, max_deg, self.levels[:max_deg + 1])
        p, q = self.block_shape
        extra = [np.zeros((self.n ** k, p, q), dtype=np.complex128) for k in range(self.max_deg + 1, max_deg + 1)]
        return FreeSeries(self.n, max_deg, self.levels + extra)

    def __repr__(self):
        return f"FreeSeries(n={self.n}, max_deg={self.max_deg}, block_shape={self.block_shape}, degree={self.degree()})"

    # -- arithmetic --------------------------------------------------------------

    def _check_like(self, other):
        if self.n != other.n or self.block_shape != other.block_shape:
            raise ShapeMismatch("series differ in variable count or block shape")

    def __add__(self, other):
        if not isinstance(other, FreeSeries):
            other = FreeSeries.constant(self.n, self.max_deg, la.as_matrix(other) * np.ones(self.block_shape))
        self._check_like(other)
        m = max(self.max_deg, other.max_deg)
        a, b = self.truncate(m), other.truncate(m)
        return FreeSeries(self.n, m, [x + y for x, y in zip(a.levels, b.levels)])

    def __neg__(self):
        return FreeSeries(self.n, self.max_deg, [-a for a in self.levels])

    def __sub__(self, other):
        return self + (-other)

    def scale(self, c):
        return FreeSeries(self.n, self.max_deg, [c * a for a in self.levels])

    def __mul__(self, c):
        if isinstance(c, FreeSeries):
            return self.product(c)
        return self.scale(c)

    __rmul__ = scale

    def product(self, other, max_deg=None):
        """Cauchy product ``(FG)_g = sum_{ab=g} A_a B_b`` truncated at ``max_deg``."""
        if self.n != other.n or self.block_shape[1] != other.block_shape[0]:
            raise ShapeMismatch("incompatible series for product")
        m = min(self.max_deg, other.max_deg) if max_deg is None else max_deg
        p, s = self.block_shape[0], other.block_shape[1]
        out = []
        for k in range(m + 1):
            acc = np.zeros((self.n ** k, p, s), dtype=np.complex128)
            for a in range(k + 1):
                b = k - a
                if a > self.max_deg or b > other.max_deg:
                    continue
                A, B = self.levels[a], other.levels[b]
                if not (np.any(A) and np.any(B)):
                    continue
                acc += np.einsum("ipq,jqs->ijps", A, B).reshape(self.n ** k, p, s)
            out.append(acc)
        return FreeSeries(self.n, m, out)

    # -- evaluation --------------------------------------------------------------

    def eval(self, X):
        """``sum_{|a| <= max_deg} kron(X_a, A_a)`` by Horner's rule on left quotients."""
        X = la.as_tuple(X)
        if len(X) != self.n:
            raise ShapeMismatch(f"series in {self.n} variables evaluated at a {len(X)}-tuple")
        d = X[0].shape[0]
        top = max(self.degree(), 0)  # trailing zero levels contribute nothing
        levels = self.levels[:top + 1]
        if top >= 4 and d * max(self.block_shape) <= 64:
            return _eval_split(levels, X, self.n)
        return _horner(levels, X, self.n)

    def eval_with_tail(self, X):
        """Partial sum plus a geometric estimate of the omitted tail (not added)."""
        M = self.eval(X)
        return M, self.tail_bound(la.row_norm(X))

    def tail_bound(self, x):
        c = self.level_norms()
        top = c[-1]
        if top == 0.0:
            return 0.0
        rho = c[-1] / c[-2] if self.max_deg >= 1 and c[-2] > 0 else 1.0
        q = rho * x
        if q >= 1.0:
            return float("inf")
        return float(top * x ** self.max_deg * q / (1.0 - q))

    def fock_matrix(self, N, r=1.0, sparse=False):
        """
        ``F(rS_1, ..., rS_n)`` on the truncated Fock space of degree ``N``,
        built blockwise from ``e_b (x) x -> sum_a r^|a| e_{ab} (x) A_a x``.
        """
        n, (p, q) = self.n, self.block_shape
        D = fock_dim(n, N)
        rows, cols, vals = [], [], []
        ps, qs = np.arange(p), np.arange(q)
        for k in range(min(self.max_deg, N) + 1):
            A = self.levels[k]
            if not np.any(A):
                continue
            ra = np.arange(n ** k)
            for j in range(N - k + 1):
                rb = np.arange(n ** j)
                rw = level_offset(n, k + j) + ra[:, None] * n ** j + rb[None, :]
                cw = np.broadcast_to(level_offset(n, j) + rb[None, :], rw.shape)
                R = rw[:, :, None, None] * p + ps[None, None, :, None]
                C = cw[:, :, None, None] * q + qs[None, None, None, :]
                V = np.broadcast_to((r ** k) * A[:, None, :, :], R.shape[:2] + (p, q))
                R, C = np.broadcast_arrays(R, C)
                rows.append(R.ravel())
                cols.append(C.ravel())
                vals.append(V.ravel())
        if rows:
            M = sp.csr_matrix((np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))),
                              shape=(D * p, D * q))
        else:
            M = sp.csr_matrix((D * p, D * q), dtype=np.complex128)
        return M if sparse else M.toarray()

    # -- derived series ----------------------------------------------------------

    def left_quotient(self, i):
        """Coefficients ``B_b = A_{g_i b}``."""
        self._check_letter(i)
        n = self.n
        lv = [self.levels[k + 1][(i - 1) * n ** k:i * n ** k] for k in range(self.max_deg)]
        if not lv:
            return FreeSeries.zeros(n, 0, self.block_shape)
        return FreeSeries(n, self.max_deg - 1, lv)

    def partial_derivative(self, i):
        """Free partial derivative: coefficient of ``b`` sums ``A_a`` over insertions of ``g_i`` into ``b``."""
        self._check_letter(i)
        n, (p, q) = self.n, self.block_shape
        lv = []
        for k in range(self.max_deg):
            A = self.levels[k + 1].reshape((n,) * (k + 1) + (p, q))
            acc = sum(np.take(A, i - 1, axis=j) for j in range(k + 1))
            lv.append(np.asarray(acc).reshape(n ** k, p, q))
        if not lv:
            return FreeSeries.zeros(n, 0, self.block_shape)
        return FreeSeries(n, self.max_deg - 1, lv)

    def _check_letter(self, i):
        if not 1 <= i <= self.n:
            raise ShapeMismatch(f"variable index {i} outside 1..{self.n}")

    def hadamard_radius(self):
        return hadamard_radius(self)

    def times_variable(self, i):
        """The series ``Z_i F``."""
        self._check_letter(i)
        return _left_mul_var(self, i)


def _left_mul_var(F, i):
    n, (p, q) = F.n, F.block_shape
    lv = [np.zeros((1, p, q), dtype=np.complex128)]
    for k in range(F.max_deg + 1):
        a = np.zeros((n ** (k + 1), p, q), dtype=np.complex128)
        a[(i - 1) * n ** k:i * n ** k] = F.levels[k]
        lv.append(a)
    return FreeSeries(n, F.max_deg + 1, lv)


def _power_table(X, n, K):
    """``tab[k][j] = X_a`` for the ``j``-th word of length ``k``, ``k <= K``."""
    d = X[0].shape[0]
    Xs = np.array(X)
    tab = [la.eye(d)[None]]
    for _ in range(K):
        tab.append(np.einsum("wab,ibc->wiac", tab[-1], Xs).reshape(-1, d, d))
    return tab


def _eval_split(levels, X, n):
    """
    Level ``k`` as ``sum_{a,b} X_a (x) A_{ab}`` ``X_b`` with ``|a| = k // 2``; the
    cost is about ``n^k d^2`` per level instead of one matrix product per word.
    """
    d = X[0].shape[0]
    p, q = levels[0].shape[1:]
    K = len(levels) - 1
    tab = _power_table(X, n, (K + 1) // 2)
    out = np.zeros((d, p, d, q), dtype=np.complex128)
    for k, A in enumerate(levels):
        if not np.any(A):
            continue
        a = k // 2
        b = k - a
        C = A.reshape(n ** a, n ** b, p, q)
        Z = np.einsum("ijst,jbc->ibcst", C, tab[b])
        out += np.einsum("iab,ibcst->asct", tab[a], Z)
    return out.reshape(d * p, d * q)


def _horner(levels, X, n):
    d = X[0].shape[0]
    p, q = levels[0].shape[1:]
    out = np.kron(la.eye(d), levels[0][0])
    if len(levels) == 1:
        return out
    for i in range(n):
        sub = []
        for k, a in enumerate(levels[1:]):
            m = n ** k
            sub.append(a[i * m:(i + 1) * m])
        if not any(np.any(a) for a in sub):
            continue
        inner = _horner(sub, X, n)
        out += (X[i] @ inner.reshape(d, -1)).reshape(d * p, d * q)
    return out


# -- module-level operations ------------------------------------------------------


def eval_series(F, X, with_tail=False):
    return F.eval_with_tail(X) if with_tail else F.eval(X)


def hadamard_radius(F):
    """``1 / max_{k in [maxDeg/2, maxDeg]} (sum_{|a|=k} ||A_a||_F^2)^{1/2k}``; ``inf`` if those levels vanish."""
    ks = [k for k in range(max(1, (F.max_deg + 1) // 2), F.max_deg + 1)]
    best = 0.0
    for k in ks:
        s = float(np.sum(np.abs(F.levels[k]) ** 2))
        if s > 0:
            best = max(best, s ** (1.0 / (2 * k)))
    return float("inf") if best == 0.0 else 1.0 / best


def partial_derivative(F, i):
    return F.partial_derivative(i)


def left_quotient(F, i):
    return F.left_quotient(i)


def extract_coefficients(M, r, N, n, block_shape=(1, 1)):
    """
    Recover ``B_a = r^{-|a|} <M (1 (x) x), e_a (x) y>`` from a matrix acting on
    ``Fock_N (x) C^q -> Fock_N (x) C^p`` (Fock-major ordering).
    """
    p, q = block_shape
    D = fock_dim(n, N)
    if M.shape != (D * p, D * q):
        raise ShapeMismatch(f"matrix of shape {M.shape} does not act on Fock(n={n}, N={N}) blocks {block_shape}")
    col = M[:, :q]
    col = col.toarray() if sp.issparse(col) else np.asarray(col)
    col = col.reshape(D, p, q)
    lv = []
    for k in range(N + 1):
        lv.append(col[level_offset(n, k):level_offset(n, k + 1)] / r ** k)
    return FreeSeries(n, N, lv)


def identity_tuple(n, max_deg):
    return [FreeSeries.variable(n, max_deg, i) for i in range(1, n + 1)]


def linear_tuple(L, max_deg=1):
    """The tuple ``Phi_L(Z) = [Z_1 ... Z_n] L`` as ``m`` scalar series."""
    L = la.as_matrix(L)
    n, m = L.shape
    return [FreeSeries.from_terms(n, max_deg, {(i + 1,): L[i, j] for i in range(n)}) for j in range(m)]


def tuple_fock(phis, N, r, sparse=False):
    return tuple(f.fock_matrix(N, r, sparse=sparse) for f in phis)


def tuple_eval(phis, X):
    return tuple(f.eval(X) for f in phis)


@dataclass(frozen=True)
class ExactMap:
    """A map evaluated exactly on operator tuples, e.g. an automorphism, usable as an outer function in ``compose``."""
    func: object
    n_in: int
    n_out: int
    domain_radius: float = 1.0

    def __call__(self, X):
        return self.func(X)


def compose(F, phis, r_eval=DEFAULT_R_EVAL, N=None):
    """
    Coefficients of ``F o phi``: evaluate ``F(phi(r S))`` on the truncated Fock
    space and read off the vacuum column, rescaling by ``r^{-|a|}``.

    ``F`` is a ``FreeSeries``, a list of them (a tuple-valued map), or an
    ``ExactMap``. Returns a series or a list of series accordingly.
    """
    phis = list(phis)
    n = phis[0].n
    if any(f.n != n or f.block_shape != (1, 1) for f in phis):
        raise ShapeMismatch("inner tuple must be scalar series in a common number of variables")
    if N is None:
        N = max([f.max_deg for f in phis] + [_outer_deg(F)])
    Y = tuple(f.fock_matrix(N, r_eval) for f in phis)
    ynorm = la.row_norm(Y)
    radius = _outer_radius(F)
    if ynorm >= radius:
        raise RangeViolation(f"inner tuple reaches norm {ynorm:.6g} >= outer domain radius {radius:.6g}")
    if isinstance(F, FreeSeries):
        _check_outer(F.n, len(phis))
        return extract_coefficients(F.eval(Y), r_eval, N, n, F.block_shape)
    if isinstance(F, ExactMap):
        _check_outer(F.n_in, len(phis))
        out = F(Y)
        return [extract_coefficients(o, r_eval, N, n) for o in out]
    outs = []
    for G in F:
        _check_outer(G.n, len(phis))
        outs.append(extract_coefficients(G.eval(Y), r_eval, N, n, G.block_shape))
    return outs


def _outer_deg(F):
    if isinstance(F, FreeSeries):
        return F.max_deg
    if isinstance(F, ExactMap):
        return 0
    return max(G.max_deg for G in F)


def _outer_radius(F):
    if isinstance(F, FreeSeries):
        return hadamard_radius(F)
    if isinstance(F, ExactMap):
        return F.domain_radius
    return min(hadamard_radius(G) for G in F)


def _check_outer(n_in, m):
    if n_in != m:
        raise ShapeMismatch(f"outer map takes {n_in} variables but inner tuple has {m} entries")


def sup_norm_estimate(F, r_grid=DEFAULT_R_GRID, N=None):
    """
    ``max_r ||F(rS)||`` on the truncated Fock space. ``F`` may be one series or a
    tuple (read as the row ``[F_1 ... F_m]``).
    """
    Fs = [F] if isinstance(F, FreeSeries) else list(F)
    grid = list(r_grid)
    if not grid or any(not 0 < r < 1 for r in grid):
        raise ShapeMismatch("rGrid must be a nonempty subset of (0, 1)")
    if N is None:
        N = max(default_degree(Fs[0].n), max(G.max_deg for G in Fs))
    best = 0.0
    for r in grid:
        Ms = [G.fock_matrix(N, r) for G in Fs]
        best = max(best, la.operator_norm(np.hstack(Ms)))
    return best


def jacobian_at_zero(Fs):
    """``F'(0)`` with entry ``(i, j) = dF_i/dZ_j (0)``, the coefficient of ``Z_j`` in ``F_i``."""
    Fs = [Fs] if isinstance(Fs, FreeSeries) else list(Fs)
    n = Fs[0].n
    J = np.zeros((len(Fs), n), dtype=np.complex128)
    for i, G in enumerate(Fs):
        if G.block_shape != (1, 1):
            raise ShapeMismatch("jacobian_at_zero needs scalar blocks")
        if G.max_deg >= 1:
            J[i] = G.levels[1][:, 0, 0]
    return J


def homogeneous_norm_sums(F, r, N):
    """
    Both sides of ``sum_k r^k ||sum_{|a|=k} A_a^* A_a||^{1/2} = sum_k ||sum_{|a|=k} r^k S_a (x) A_a||``
    over degrees ``k <= N``, the right side computed on the Fock space.
    """
    c = F.level_norms()
    left = sum(r ** k * c[k] for k in range(min(N, F.max_deg) + 1))
    right = 0.0
    for k in range(min(N, F.max_deg) + 1):
        lv = [np.zeros_like(a) for a in F.levels]
        lv[k] = F.levels[k]
        right += la.operator_norm(FreeSeries(F.n, F.max_deg, lv).fock_matrix(N, r))
    return left, right
