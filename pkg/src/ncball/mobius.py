"""
Free holomorphic automorphisms of the noncommutative unit ball in the
normal form ``Psi(X) = Psi_lambda(X) U``, with

    Psi_lambda(X) = lambda - Delta_lambda (I - X lambda^*)^{-1} X Delta_{lambda*},

``Delta_lambda = (1 - ||lambda||^2)^{1/2}`` and ``Delta_{lambda*} = (I - lambda^* lambda)^{1/2}``.
Also the scalar Moebius maps of the ball ``B_n`` and the Schwarz/Gleason
checkers built on them.
"""

from dataclasses import dataclass
from functools import cached_property

import numpy as np

from . import linalg as la
from .errors import ContractViolation, DomainViolation, IllConditioned, ShapeMismatch
from .fock import TruncatedFock, neumann_apply
from .series import (
    DEFAULT_R_EVAL, ExactMap, FreeSeries, compose, extract_coefficients, jacobian_at_zero, linear_tuple, sup_norm_estimate,
    tuple_eval,
)

UNIT_TOL = 1e-10
IDENTITY_SNAP = 1e-10
DOMAIN_TOL = 1e-10


def apply_linear(L, X):
    """``Phi_L(X) = [X_1 ... X_n] L``: entry ``j`` is ``sum_i L_ij X_i``."""
    L = la.as_matrix(L)
    X = la.as_tuple(X)
    if L.shape[0] != len(X):
        raise ShapeMismatch(f"{L.shape[0]} x {L.shape[1]} matrix applied to a {len(X)}-tuple")
    return tuple(sum(L[i, j] * X[i] for i in range(len(X))) for j in range(L.shape[1]))


def scalar_point(z):
    """A vector of ``C^n`` as an ``n``-tuple of ``1 x 1`` matrices."""
    return tuple(np.array([[complex(v)]]) for v in np.ravel(z))


def point_vector(X):
    return np.array([complex(x[0, 0]) for x in X])


class BallAutomorphism:
    """``Phi_U o Psi_lambda``; the pair ``(0, -I)`` is the identity map."""

    def __init__(self, lam, U=None):
        lam = np.asarray(lam, dtype=np.complex128).ravel()
        n = lam.size
        U = -la.eye(n) if U is None else la.as_matrix(U)
        if U.shape != (n, n):
            raise ShapeMismatch(f"U has shape {U.shape}, expected {(n, n)}")
        if np.linalg.norm(lam) >= 1 - 1e-12:
            raise DomainViolation(f"||lambda|| = {np.linalg.norm(lam):.15g} is not < 1")
        if la.operator_norm(la.dagger(U) @ U - la.eye(n)) > UNIT_TOL:
            raise ShapeMismatch("U is not unitary")
        if np.linalg.norm(lam) < IDENTITY_SNAP and la.operator_norm(U + la.eye(n)) < IDENTITY_SNAP:
            lam, U = np.zeros(n, dtype=np.complex128), -la.eye(n)
        self.n = n
        self.lam = lam
        self.U = U

    @classmethod
    def identity(cls, n):
        return cls(np.zeros(n))

    @classmethod
    def psi(cls, lam):
        """The involution ``Psi_lambda`` (``U = I``)."""
        lam = np.asarray(lam, dtype=np.complex128).ravel()
        return cls(lam, la.eye(lam.size))

    @classmethod
    def phi(cls, U):
        """``Phi_U`` alone: ``X -> XU``, which is ``Psi_0`` followed by ``-U``."""
        U = la.as_matrix(U)
        return cls(np.zeros(U.shape[0]), -U)

    @classmethod
    def random(cls, n, seed, radius=None):
        rng = np.random.default_rng(seed)
        return cls(la.random_ball_point(n, rng, radius), la.random_unitary(n, rng))

    def __repr__(self):
        return f"BallAutomorphism(lambda={np.round(self.lam, 6)}, identity={self.is_identity()})"

    @cached_property
    def delta(self):
        return float(np.sqrt(max(0.0, 1 - np.vdot(self.lam, self.lam).real)))

    @cached_property
    def delta_star(self):
        return la.psd_sqrt(la.eye(self.n) - np.outer(self.lam.conj(), self.lam))

    @cached_property
    def _M(self):
        return self.delta_star @ self.U

    def is_identity(self, tol=0.0):
        return bool(np.linalg.norm(self.lam) <= tol and la.operator_norm(self.U + la.eye(self.n)) <= tol)

    @property
    def domain_radius(self):
        nl = np.linalg.norm(self.lam)
        return float("inf") if nl == 0 else 1.0 / nl

    # -- evaluation --------------------------------------------------------------

    def apply(self, X):
        """``Psi_lambda(X) U`` as an ``n``-tuple."""
        X = la.as_tuple(X)
        if len(X) != self.n:
            raise ShapeMismatch(f"automorphism of B_{self.n} applied to a {len(X)}-tuple")
        d = X[0].shape[0]
        Xl = sum(np.conj(self.lam[i]) * X[i] for i in range(self.n))
        if np.any(self.lam) and la.operator_norm(Xl) >= 1 - DOMAIN_TOL:
            raise DomainViolation(f"||X lambda^*|| = {la.operator_norm(Xl):.6g} leaves the domain")
        A = la.eye(d) - Xl
        XM = np.hstack(apply_linear(self._M, X))
        try:
            Y = la.solve(A, XM)
        except IllConditioned as exc:
            raise DomainViolation(str(exc)) from exc
        c = self.lam @ self.U
        return tuple(c[j] * la.eye(d) - self.delta * Y[:, j * d:(j + 1) * d] for j in range(self.n))

    __call__ = apply

    def apply_scalar(self, z):
        return point_vector(self.apply(scalar_point(z)))

    def apply_to_vectors(self, Xs, V, max_terms):
        """
        ``[Psi(X)_1 V, ..., Psi(X)_n V]`` for a tuple of (sparse) operators whose
        combination ``sum conj(lambda_i) X_i`` is nilpotent of index ``<= max_terms``,
        such as creation operators on a truncated Fock space.
        """
        A = sum(np.conj(self.lam[i]) * Xs[i] for i in range(self.n))
        XV = [X @ V for X in Xs]
        c = self.lam @ self.U
        out = []
        for j in range(self.n):
            B = sum(self._M[i, j] * XV[i] for i in range(self.n))
            out.append(c[j] * V - self.delta * neumann_apply(A, B, max_terms))
        return out

    def realization(self, j):
        """
        ``(c, A, b)`` with ``Psi_j`` coefficient ``c A_a b`` on three states: a constant
        state, a geometric state driven by ``conj(lambda)`` and a terminal state.
        """
        n = self.n
        A = np.zeros((n, 3, 3), dtype=np.complex128)
        A[:, 1, 1] = np.conj(self.lam)
        A[:, 1, 2] = -self.delta * self._M[:, j]
        c = np.array([1.0, 1.0, 0.0])
        b = np.array([(self.lam @ self.U)[j], 0.0, 1.0])
        return c, A, b

    def apply_rational(self, v):
        """``[Psi^_1 v, ..., Psi^_n v]`` for a rational Fock vector, with no truncation."""
        return [v.left_multiply(*self.realization(j)) for j in range(self.n)]

    def fock_tuple(self, N, r=1.0):
        """``Psi(rS_1, ..., rS_n)`` on the truncated Fock space (exact compression)."""
        S = TruncatedFock(self.n, N).creation_operators("left")
        return self.apply(tuple(r * s for s in S))

    def series(self, max_deg):
        """
        Coefficients of ``Psi`` as ``n`` scalar series: constant ``(lambda U)_j`` and,
        for the word ``b g_i``, ``-Delta_lambda conj(lambda)_b (Delta_{lambda*} U)_{ij}``.
        """
        lb = np.conj(self.lam)
        words = [np.ones(1, dtype=np.complex128)]
        for _ in range(max_deg):
            words.append(np.kron(words[-1], lb))
        c = self.lam @ self.U
        out = []
        for j in range(self.n):
            lv = [np.array([[[c[j]]]])]
            for k in range(max_deg):
                lv.append((-self.delta * np.kron(words[k], self._M[:, j])).reshape(-1, 1, 1))
            out.append(FreeSeries(self.n, max_deg, lv))
        return out

    def jacobian(self):
        """``Psi'(0)`` with entry ``(i, j) = dPsi_i/dZ_j(0) = -Delta_lambda (Delta_{lambda*} U)_{ji}``."""
        return -self.delta * self._M.T

    def as_map(self):
        return ExactMap(self.apply, self.n, self.n, self.domain_radius)

    # -- group operations --------------------------------------------------------

    def inverse_map(self, Y):
        """``Psi^{-1}(Y) = Psi_lambda(Y U^*)``."""
        return _psi_only(self.lam).apply(apply_linear(la.dagger(self.U), Y))


def _psi_only(lam):
    return BallAutomorphism.psi(lam)


def _blocks(f, n):
    return np.block([[f(i, j) for j in range(n)] for i in range(n)])


def defect_identity_residuals(lam, X, Y):
    """
    Residuals of
    ``I - Psi_l(X)Psi_l(Y)^* = D_l (I - X l^*)^{-1}(I - X Y^*)(I - l Y^*)^{-1} D_l`` and
    ``I - Psi_l(X)^*Psi_l(Y) = D_l* (I - X^* l)^{-1}(I - X^* Y)(I - l^* Y)^{-1} D_l*``.
    """
    p = _psi_only(lam)
    X, Y = la.as_tuple(X), la.as_tuple(Y)
    n, d = p.n, X[0].shape[0]
    lam, Id = p.lam, la.eye(d)
    PX, PY = la.row(p.apply(X)), la.row(p.apply(Y))
    lhs1 = Id - PX @ la.dagger(PY)
    A = Id - sum(np.conj(lam[i]) * X[i] for i in range(n))
    M = Id - sum(X[i] @ la.dagger(Y[i]) for i in range(n))
    B = Id - sum(lam[i] * la.dagger(Y[i]) for i in range(n))
    rhs1 = p.delta ** 2 * la.solve(A, M) @ la.inv(B)
    lhs2 = la.eye(n * d) - la.dagger(PX) @ PY
    A2 = la.eye(n * d) - _blocks(lambda i, j: lam[j] * la.dagger(X[i]), n)
    M2 = la.eye(n * d) - _blocks(lambda i, j: la.dagger(X[i]) @ Y[j], n)
    B2 = la.eye(n * d) - _blocks(lambda i, j: np.conj(lam[i]) * Y[j], n)
    Ds = np.kron(p.delta_star, Id)
    rhs2 = Ds @ la.solve(A2, M2) @ la.inv(B2) @ Ds
    return la.operator_norm(lhs1 - rhs1), la.operator_norm(lhs2 - rhs2)


def normal_form_identity_residual(psi, X, Y):
    """
    ``I - Psi(X)Psi(Y)^*`` for ``Psi = Phi_U o Psi_lambda`` against the factorization
    ``D_l (I - X l^*)^{-1}(I - X Y^*)(I - l Y^*)^{-1} D_l``, in which ``U`` does not appear.
    """
    X, Y = la.as_tuple(X), la.as_tuple(Y)
    n, d = psi.n, X[0].shape[0]
    lam, Id = psi.lam, la.eye(d)
    lhs = Id - la.row(psi.apply(X)) @ la.dagger(la.row(psi.apply(Y)))
    A = Id - sum(np.conj(lam[i]) * X[i] for i in range(n))
    M = Id - sum(X[i] @ la.dagger(Y[i]) for i in range(n))
    B = Id - sum(lam[i] * la.dagger(Y[i]) for i in range(n))
    rhs = psi.delta ** 2 * la.solve(A, M) @ la.inv(B)
    return la.operator_norm(lhs - rhs)


def boundary_series(f, n, N, r=DEFAULT_R_EVAL):
    """Coefficients of a tuple map ``f`` on ``n``-tuples, read from ``f(rS)`` on the Fock space of degree ``N``."""
    S = TruncatedFock(n, N).creation_operators("left")
    return [extract_coefficients(o, r, N, n) for o in f(tuple(r * s for s in S))]


def fixed_origin_rigidity(psi, N=4, r=DEFAULT_R_EVAL):
    """
    For an automorphism with ``Psi(0) = 0``: (mass of boundary coefficients of degree
    ``>= 2``, ``||J^* J - I||`` of the degree-1 part).
    """
    F = boundary_series(psi.apply, psi.n, N, r)
    mass = sum(G.coefficient_mass(range(2, N + 1)) for G in F)
    J = jacobian_at_zero(F)
    return float(mass), la.operator_norm(la.dagger(J) @ J - la.eye(psi.n))


def linear_part(f, n, r=0.5):
    """
    Matrix ``L`` of a map known to be linear, ``f(X) = XL``, read from the
    degree-1 boundary coefficients on the Fock space of degree 1.
    """
    S = TruncatedFock(n, 1).creation_operators("left")
    out = f(tuple(r * s for s in S))
    coeffs = [extract_coefficients(o, r, 1, n) for o in out]
    return jacobian_at_zero(coeffs).T


def recover_normal_form(f, n):
    """
    Normal form of an automorphism given only as a callable on tuples:
    ``mu = f(0)``, ``Psi_mu o f = Phi_W``, ``lambda = mu W^*``, ``f o Psi_lambda = Phi_U``.
    """
    mu = point_vector(f(scalar_point(np.zeros(n))))
    psi_mu = _psi_only(mu)
    W = linear_part(lambda X: psi_mu.apply(f(X)), n)
    lam = mu @ la.dagger(W)
    psi_l = _psi_only(lam)
    U = linear_part(lambda X: f(psi_l.apply(X)), n)
    return BallAutomorphism(lam, _polar_unitary(U))


def _polar_unitary(U):
    """Nearest unitary, removing roundoff from an extracted unitary matrix."""
    W, _, Vh = np.linalg.svd(U)
    return W @ Vh


def invert(psi):
    """Normal form of ``Psi^{-1}``; its ``lambda`` is ``Psi(0) = lambda U``."""
    return recover_normal_form(psi.inverse_map, psi.n)


def compose_autos(psi1, psi2):
    """
    Normal form of ``Psi_1 o Psi_2``: ``lambda`` is the preimage of 0, computed as
    ``Psi_2^{-1}(Psi_1^{-1}(0))``, and ``U`` is the linear part of ``(Psi_1 o Psi_2) o Psi_lambda``.
    """
    if psi1.n != psi2.n:
        raise ShapeMismatch("automorphisms of different balls")
    n = psi1.n
    lam = point_vector(psi2.inverse_map(psi1.inverse_map(scalar_point(np.zeros(n)))))
    psi_l = _psi_only(lam)
    U = linear_part(lambda X: psi1.apply(psi2.apply(psi_l.apply(X))), n)
    return BallAutomorphism(lam, _polar_unitary(U))


def extend_automorphism(psi, N):
    """``lambda -> (lambda, 0)``, ``U -> U (+) I``: an automorphism of ``B_N`` restricting to ``psi``."""
    if N <= psi.n:
        raise ShapeMismatch(f"extension target {N} must exceed {psi.n}")
    lam = np.concatenate([psi.lam, np.zeros(N - psi.n)])
    U = la.eye(N)
    U[:psi.n, :psi.n] = psi.U
    return BallAutomorphism(lam, U)


def scalar_mobius(a, z):
    """``phi_a(z) = (a - Q_a z - s_a (I - Q_a) z) / (1 - <z, a>)`` on the ball ``B_n``."""
    a = np.asarray(a, dtype=np.complex128).ravel()
    z = np.asarray(z, dtype=np.complex128).ravel()
    if a.shape != z.shape:
        raise ShapeMismatch("a and z must have the same length")
    na2 = np.vdot(a, a).real
    if na2 >= 1 or np.vdot(z, z).real >= 1:
        raise DomainViolation("scalar_mobius needs points of the open ball")
    za = np.vdot(a, z)  # <z, a> = sum z_i conj(a_i)
    Qz = za / na2 * a if na2 > 0 else np.zeros_like(z)
    s = np.sqrt(1 - na2)
    return (a - Qz - s * (z - Qz)) / (1 - za)


def scalar_action(psi, z):
    """``[Gamma(Psi)](z) = phi_lambda(z) U`` for ``z`` in ``B_n``."""
    return scalar_mobius(psi.lam, z) @ psi.U


# -- Schwarz, Gleason, maximum principle --------------------------------------------


def row_norm_tuple(X):
    return la.row_norm(X)


def schwarz_pick_defect(F, a, X):
    """``||Psi_b(F(X))|| - ||Psi_a(X)||`` with ``b = F(a)``."""
    F = [F] if isinstance(F, FreeSeries) else list(F)
    b = np.array([complex(G.eval(scalar_point(a))[0, 0]) for G in F])
    if np.linalg.norm(b) >= 1:
        raise DomainViolation(f"F(a) has norm {np.linalg.norm(b):.6g} >= 1")
    FX = tuple_eval(F, X)
    left = la.row_norm(_psi_only(b).apply(FX))
    right = la.row_norm(_psi_only(a).apply(X))
    return left - right


def gleason_factorization(F, a, N=8, samples=20, seed=0, x_norm=0.5):
    """
    ``F - F(a) = sum_i Psi_a(X)_i H_i(Psi_a(X))`` with ``H_i`` the left quotients of
    ``F o Psi_a - F(a)``. Returns ``(H, residual)``; the residual is the largest
    reconstruction error over random ``X`` of row norm ``x_norm`` (``d = 2``).
    """
    if F.block_shape != (1, 1):
        raise ShapeMismatch("gleason_factorization needs a scalar series")
    a = np.asarray(a, dtype=np.complex128).ravel()
    psi_a = _psi_only(a)
    # F is a polynomial: zero-padding to degree N makes its domain radius infinite
    G = compose(F.truncate(max(N, 2 * F.max_deg + 2)), psi_a.series(N), N=N)
    Fa = complex(F.eval(scalar_point(a))[0, 0])
    G0 = G - Fa
    H = [G0.left_quotient(i) for i in range(1, F.n + 1)]
    rng = np.random.default_rng(seed)
    residual = 0.0
    for _ in range(samples):
        X = la.random_row_contraction(F.n, 2, x_norm, rng)
        Y = psi_a.apply(X)
        recon = Fa * la.eye(2) + sum(Y[i] @ H[i].eval(Y) for i in range(F.n))
        residual = max(residual, la.operator_norm(F.eval(X) - recon))
    return H, residual


def rigidity_check(F, tol=1e-9):
    """
    For a ball-to-ball tuple ``F``: unitary ``F'(0)`` forces ``F`` linear, and an isometric
    ``F'(0)`` makes ``Phi_L o F`` the identity for ``L = conj(F'(0))``.
    Returns ``"Unitary->Linear"``, ``"Isometry->LeftInvertible"`` or ``"None"``.
    """
    F = list(F)
    m, n = len(F), F[0].n
    J = jacobian_at_zero(F)
    iso = la.operator_norm(la.dagger(J) @ J - la.eye(n))
    if iso > tol:
        return "None"
    if m == n:
        for i, G in enumerate(F):
            for w, c in G.terms():
                if len(w) != 1 and np.linalg.norm(c) > 10 * tol:
                    raise ContractViolation(
                        f"component {i + 1} has coefficient {complex(c[0, 0]):.3e} at word {list(w)} "
                        "although F'(0) is unitary", w, complex(c[0, 0]))
        return "Unitary->Linear"
    L = np.conj(J)
    outer = linear_tuple(L, max_deg=1)
    maxd = max(G.max_deg for G in F)
    comp = compose(outer, F, N=maxd)
    ident = [FreeSeries.variable(n, maxd, j + 1) for j in range(n)]
    for j, (C, I) in enumerate(zip(comp, ident)):
        for w, c in (C - I).terms():
            if np.linalg.norm(c) > 10 * tol:
                raise ContractViolation(
                    f"Phi_L o F differs from the identity in slot {j + 1} at word {list(w)}",
                    w, complex(c[0, 0]))
    return "Isometry->LeftInvertible"


def max_principle_probe(F, samples, seed, N=None, d=3, r_grid=(0.5, 0.9, 0.99, 0.999)):
    """
    Largest ``||F(X)||`` over random strict row contractions with ``||X|| <= 0.95``
    against the boundary estimate ``sup_r ||F(rS)||``.
    """
    rng = np.random.default_rng(seed)
    n = F.n
    interior = 0.0
    for _ in range(samples):
        X = la.random_row_contraction(n, d, rng.uniform(0.0, 0.95), rng)
        interior = max(interior, la.operator_norm(F.eval(X)))
    sup = sup_norm_estimate(F, r_grid, N)
    return interior, sup


def coefficient_bound_residual(F):
    """
    ``max_k lambda_max(sum_{|a|=k} A_a^* A_a - (I - F(0)^* F(0)))`` over ``k >= 1``;
    nonpositive for a contractive ``F``. With ``F(0)`` isometric it forces ``F`` constant.
    """
    A0 = F.levels[0][0]
    gap = la.eye(A0.shape[1]) - la.dagger(A0) @ A0
    worst = -np.inf
    for k in range(1, F.max_deg + 1):
        A = F.levels[k]
        G = np.einsum("wpq,wps->qs", A.conj(), A)
        worst = max(worst, float(np.linalg.eigvalsh(G - gap).max()))
    return worst
