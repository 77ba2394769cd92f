"""
Words in the free semigroup and the truncated full Fock space.

Words are tuples of 1-based letters; the empty tuple is the vacuum word.
The basis of the truncation of degree ``N`` is ordered graded-lexicographically
(by length, then lexicographically), so the index of a word does not depend
on ``N``. This makes padding a vector from degree ``N`` to degree ``L > N``
a plain zero extension.
"""

from functools import cached_property

import numpy as np
import scipy.sparse as sp

from .errors import ShapeMismatch


def level_offset(n, k):
    """Index of the first word of length ``k``."""
    if n == 1:
        return k
    return (n ** k - 1) // (n - 1)


def fock_dim(n, N):
    return level_offset(n, N + 1)


def word_index(word, n):
    k = len(word)
    rank = 0
    for a in word:
        if not 1 <= a <= n:
            raise ShapeMismatch(f"letter {a} outside 1..{n}")
        rank = rank * n + (a - 1)
    return level_offset(n, k) + rank


def index_word(idx, n):
    k = 0
    while level_offset(n, k + 1) <= idx:
        k += 1
    rank = idx - level_offset(n, k)
    letters = []
    for _ in range(k):
        rank, a = divmod(rank, n)
        letters.append(a + 1)
    return tuple(reversed(letters))


def words_of_length(n, k):
    """All words of length ``k`` in lexicographic order."""
    if k == 0:
        return [()]
    prev = words_of_length(n, k - 1)
    return [(a,) + w for a in range(1, n + 1) for w in prev]


def enumerate_words(n, N):
    """All words of length at most ``N`` in graded-lex order."""
    if n < 1 or N < 0:
        raise ShapeMismatch("need n >= 1 and N >= 0")
    out = []
    for k in range(N + 1):
        out.extend(words_of_length(n, k))
    return out


def reverse_word(word):
    return tuple(reversed(word))


class TruncatedFock:
    """
    Span of ``e_alpha`` for ``|alpha| <= N``.

    Creation operators annihilate the top degree, so they are contractions
    that act isometrically on degrees ``< N``.
    """

    def __init__(self, n, N):
        if n < 1 or N < 0:
            raise ShapeMismatch("need n >= 1 and N >= 0")
        self.n = int(n)
        self.N = int(N)
        self.dim = fock_dim(self.n, self.N)

    def __repr__(self):
        return f"TruncatedFock(n={self.n}, N={self.N})"

    def offset(self, k):
        return level_offset(self.n, k)

    def level(self, k):
        """Slice of basis indices of length-``k`` words."""
        return slice(self.offset(k), self.offset(k + 1))

    @cached_property
    def degrees(self):
        deg = np.empty(self.dim, dtype=np.int64)
        for k in range(self.N + 1):
            deg[self.level(k)] = k
        return deg

    def words(self):
        return enumerate_words(self.n, self.N)

    def index(self, word):
        if len(word) > self.N:
            raise ShapeMismatch(f"word of length {len(word)} exceeds degree {self.N}")
        return word_index(word, self.n)

    def word(self, idx):
        if not 0 <= idx < self.dim:
            raise ShapeMismatch(f"index {idx} outside 0..{self.dim - 1}")
        return index_word(idx, self.n)

    def basis_vector(self, word):
        v = np.zeros(self.dim, dtype=np.complex128)
        v[self.index(word)] = 1.0
        return v

    # -- creation operators ------------------------------------------------------

    def _shift_maps(self, side):
        """For each letter, (source indices, target indices) of the shift."""
        n = self.n
        maps = []
        src = np.arange(self.offset(self.N))  # words of length < N
        deg = self.degrees[src]
        rank = src - np.array([self.offset(k) for k in deg], dtype=np.int64)
        new_off = np.array([self.offset(k + 1) for k in deg], dtype=np.int64)
        for i in range(n):
            if side == "left":
                tgt = new_off + i * (n ** deg) + rank
            elif side == "right":
                tgt = new_off + rank * n + i
            else:
                raise ValueError(f"side must be 'left' or 'right', got {side!r}")
            maps.append((src, tgt))
        return maps

    def creation_operators(self, side="left", sparse=False):
        """``S_i e_a = e_{g_i a}`` (left) or ``R_i e_a = e_{a g_i}`` (right)."""
        ops = []
        for src, tgt in self._shift_maps(side):
            M = sp.csr_matrix((np.ones(src.size, dtype=np.complex128), (tgt, src)),
                              shape=(self.dim, self.dim))
            ops.append(M if sparse else M.toarray())
        return tuple(ops)

    def degree_projection(self, m, cumulative=False):
        if not 0 <= m <= self.N:
            raise ShapeMismatch(f"degree {m} outside 0..{self.N}")
        mask = self.degrees <= m if cumulative else self.degrees == m
        return np.diag(mask.astype(np.complex128))

    def safe_mask(self, m):
        """Boolean mask of basis words of length at most ``m``."""
        return self.degrees <= m

    def pad(self, v, L):
        """Zero-extend vectors (rows of ``v`` indexed by this basis) to degree ``L``."""
        v = np.asarray(v)
        out = np.zeros((fock_dim(self.n, L),) + v.shape[1:], dtype=np.complex128)
        out[:self.dim] = v
        return out


def neumann_apply(A, B, max_terms, tol=0.0):
    """
    ``sum_k A^k B`` for a nilpotent (or small) operator ``A``, stopping after
    ``max_terms`` terms or once a term falls below ``tol`` relative to ``B``.
    ``A`` may be sparse.
    """
    out = np.array(B, dtype=np.complex128, copy=True)
    term = out
    ref = np.linalg.norm(out)
    for _ in range(max_terms):
        term = A @ term
        nt = np.linalg.norm(term)
        if nt == 0.0:
            break
        out = out + term
        if nt <= tol * ref:
            break
    return out


class RationalVector:
    """
    A Fock vector with ``C^p``-valued coefficients ``f_a = C A_{a_1} ... A_{a_k} B``
    (a recognizable series). Inner products of such vectors are computed without
    truncation.
    """

    def __init__(self, C, A, B):
        self.C = np.atleast_2d(np.asarray(C, dtype=np.complex128))
        self.A = np.asarray(A, dtype=np.complex128)
        self.B = np.asarray(B, dtype=np.complex128).ravel()
        self.n = self.A.shape[0]
        m = self.B.size
        if self.A.shape[1:] != (m, m) or self.C.shape[1] != m:
            raise ShapeMismatch("realization shapes do not match")

    @property
    def states(self):
        return self.B.size

    @property
    def width(self):
        return self.C.shape[0]

    @classmethod
    def vacuum(cls, n):
        return cls([[1.0]], np.zeros((n, 1, 1)), [1.0])

    @classmethod
    def basis(cls, word, n):
        k = len(word)
        A = np.zeros((n, k + 1, k + 1))
        for t, a in enumerate(word):
            A[a - 1, t, t + 1] = 1.0
        C = np.zeros((1, k + 1))
        C[0, 0] = 1.0
        B = np.zeros(k + 1)
        B[k] = 1.0
        return cls(C, A, B)

    def tensor(self, x):
        """``f (x) x`` for a scalar vector ``f`` and ``x`` in ``C^q``."""
        if self.width != 1:
            raise ShapeMismatch("tensor needs a scalar-valued vector")
        x = np.asarray(x, dtype=np.complex128).ravel()
        return RationalVector(x[:, None] @ self.C, self.A, self.B)

    def scale(self, c):
        return RationalVector(c * self.C, self.A, self.B)

    def __add__(self, other):
        if self.width != other.width:
            raise ShapeMismatch("cannot add vectors of different widths")
        m, p = self.states, other.states
        A = np.zeros((self.n, m + p, m + p), dtype=np.complex128)
        A[:, :m, :m] = self.A
        A[:, m:, m:] = other.A
        return RationalVector(np.hstack([self.C, other.C]), A, np.concatenate([self.B, other.B]))

    def left_multiply(self, c, Ag, b):
        """
        ``g(S) f`` for a series with ``p x q`` coefficients ``g_a = c Ag_a b``
        (``c`` is ``p x m``, ``b`` is ``m x q``) and ``f`` of width ``q``.
        """
        c = np.atleast_2d(np.asarray(c, np.complex128))
        b = np.asarray(b, np.complex128)
        b = b.reshape(-1, 1) if b.ndim == 1 else b
        if b.shape[1] != self.width:
            raise ShapeMismatch(f"series of input width {b.shape[1]} applied to width {self.width}")
        m, p = b.shape[0], self.states
        A = np.zeros((self.n, m + p, m + p), dtype=np.complex128)
        A[:, :m, :m] = Ag
        A[:, :m, m:] = np.einsum("iq,qj,ajk->aik", b, self.C, self.A)
        A[:, m:, m:] = self.A
        B = np.concatenate([b @ (self.C @ self.B), self.B])
        C = np.hstack([c, np.zeros((c.shape[0], p))])
        return RationalVector(C, A, B)

    def coefficients(self, N):
        """Coefficients on the truncated Fock space of degree ``N`` (Fock-major)."""
        parts = [self.C @ self.B]
        rows = self.B[None, :]  # A_a B for words of the current length
        for _ in range(N):
            # A_{g a} B = A_g (A_a B): prepend letters
            rows = np.einsum("amk,wk->awm", self.A, rows).reshape(-1, self.states)
            parts.append((rows @ self.C.T).ravel())
        return np.concatenate(parts)


def rational_gram(vectors, tol=1e-15, max_iter=5000):
    """
    ``G_ij = <f_j, f_i>`` for rational vectors of a common width, from the fixed
    point of ``X = B B^* + sum_a A_a X A_a^*`` on the joint state space.
    """
    from .errors import NoConvergence

    M = sum(v.states for v in vectors)
    n = vectors[0].n
    p = vectors[0].width
    A = np.zeros((n, M, M), dtype=np.complex128)
    B = np.zeros(M, dtype=np.complex128)
    C = np.zeros((len(vectors), p, M), dtype=np.complex128)
    o = 0
    for k, v in enumerate(vectors):
        if v.width != p:
            raise ShapeMismatch("Gram of vectors of different widths")
        s = slice(o, o + v.states)
        A[:, s, s] = v.A
        B[s] = v.B
        C[k, :, s] = v.C
        o += v.states
    X = np.outer(B, B.conj())
    term = X
    Cf = C.reshape(-1, M)
    for _ in range(max_iter):
        term = sum(A[a] @ term @ A[a].conj().T for a in range(n))
        X = X + term
        if np.abs(term).max() <= tol * np.abs(X).max():
            Y = (Cf @ X @ Cf.conj().T).reshape(len(vectors), p, len(vectors), p)
            return np.einsum("isjs->ij", Y).T
    raise NoConvergence(f"Gram iteration did not settle after {max_iter} steps")
