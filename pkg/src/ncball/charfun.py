"""
Characteristic functions of row contractions, their factorization identities,
their behavior under automorphisms of the ball, and curvature estimators.

Conventions: ``Theta_T(X)`` maps ``(G (x) K)^(n)`` (slot-major) to ``G (x) K``;
tensor products are ``np.kron(X, T)`` with the ``G`` factor first.
"""

from dataclasses import dataclass, field
from functools import cached_property

import numpy as np

from . import linalg as la
from .errors import DomainViolation, IllConditioned, NotCommuting, ShapeMismatch
from .fock import RationalVector, TruncatedFock, enumerate_words, rational_gram
from .opmodel import as_row_contraction, cp_map
from .poisson import poisson_kernel

COMMUTE_TOL = 1e-10


def lift_columns(Q, n, g):
    """``I_G (x) Q`` for ``Q: C^r -> K^(n)``, rows slot-major, columns ``G``-major."""
    Q = la.as_matrix(Q)
    d = Q.shape[0] // n
    r = Q.shape[1]
    out = np.zeros((n * g * d, g * r), dtype=np.complex128)
    for s in range(n):
        blk = Q[s * d:(s + 1) * d]
        out[s * g * d:(s + 1) * g * d] = np.kron(la.eye(g), blk)
    return out


class CharFunction:
    """The characteristic function ``Theta_T`` of a row contraction ``T``."""

    def __init__(self, T):
        self.T = as_row_contraction(T)
        self.n, self.d = self.T.n, self.T.d
        self.defects = self.T.defects

    def __repr__(self):
        return f"CharFunction(n={self.n}, d={self.d}, rank={self.defects.rank}, rank*={self.defects.rank_star})"

    @property
    def block_shape(self):
        return (self.d, self.n * self.d)

    @cached_property
    def range_bases(self):
        return self.defects.range_basis, self.defects.range_basis_star

    def domain_radius(self):
        nt = self.T.row_norm()
        return float("inf") if nt == 0 else 1.0 / nt

    def eval(self, X, compressed=False):
        return char_eval(self, X, compressed)

    def boundary(self, N, compressed=True):
        return char_boundary(self, N, compressed)

    def realization(self, compressed=True):
        """
        ``(c, A, b)`` with coefficients ``c A_a b``: the constant is ``-T`` and the
        coefficient of ``g a_j`` is ``Delta_T T_{g_1}^* ... T_{g_k}^* E_j Delta_{T*}``.
        """
        n, d = self.n, self.d
        D, Ds = self.defects.delta, self.defects.delta_star
        m = d + n * d
        A = np.zeros((n, m, m), dtype=np.complex128)
        for a in range(n):
            A[a, :d, :d] = la.dagger(self.T[a])
            A[a, :d, d:] = Ds[a * d:(a + 1) * d]
        c = np.hstack([D, -self.T.row()])
        b = np.vstack([np.zeros((d, n * d)), la.eye(n * d)])
        if compressed:
            Q, Qs = self.range_bases
            c, b = la.dagger(Q) @ c, b @ Qs
        return c, A, b


def as_char_function(C):
    return C if isinstance(C, CharFunction) else CharFunction(C)


def char_eval(C, X, compressed=False):
    """
    ``-I (x) T + (I (x) Delta_T)(I - sum X_i (x) T_i^*)^{-1}[X_i (x) I](I (x) Delta_{T*})``,
    of shape ``(g d) x (g n d)``; with ``compressed`` the result is restricted to the
    defect spaces, ``(g r) x (g r*)``.
    """
    C = as_char_function(C)
    X = la.as_tuple(X)
    if len(X) != C.n:
        raise ShapeMismatch(f"characteristic function of an {C.n}-tuple evaluated at {len(X)} entries")
    T, n, d = C.T, C.n, C.d
    g = X[0].shape[0]
    Ig = la.eye(g)
    A = la.eye(g * d) - sum(np.kron(X[i], la.dagger(T[i])) for i in range(n))
    Xh = np.hstack([np.kron(X[i], la.eye(d)) for i in range(n)])
    try:
        Y = la.solve(A, Xh)
    except IllConditioned as exc:
        raise DomainViolation(str(exc)) from exc
    Th = np.hstack([np.kron(Ig, T[i]) for i in range(n)])
    out = -Th + np.kron(Ig, C.defects.delta) @ Y @ la.block_lift(C.defects.delta_star, n, g)
    if compressed:
        Q, Qs = C.range_bases
        out = np.kron(Ig, la.dagger(Q)) @ out @ lift_columns(Qs, n, g)
    return out


def char_boundary(C, N, compressed=True):
    """
    ``Theta_T(R_1, ..., R_n)`` on the truncated Fock space: the compression of the
    boundary function, exact because it is analytic in the right creations.
    """
    C = as_char_function(C)
    R = TruncatedFock(C.n, N).creation_operators("right")
    return char_eval(C, R, compressed)


def multi_analytic_defect(C, N):
    """``max_i ||Theta^ (S_i (x) I) - (S_i (x) I) Theta^||`` on Fock degrees ``<= N - 2``."""
    C = as_char_function(C)
    fock = TruncatedFock(C.n, N)
    S = fock.creation_operators("left")
    B = char_boundary(C, N, compressed=True)
    r, rs = C.defects.rank, C.defects.rank_star
    cols = np.nonzero(np.repeat(fock.safe_mask(N - 2), rs))[0]
    worst = 0.0
    for s in S:
        L = np.kron(s, la.eye(r)) @ B[:, cols]
        Rt = B @ np.kron(s, la.eye(rs))[:, cols]
        worst = max(worst, la.operator_norm(L - Rt))
    return worst


def factorization_defect(C, X, Y):
    """
    Residuals of
    ``I - Theta(X)Theta(Y)^* = Delta~ (I - X^ T~^*)^{-1}(I - X^ Y^^*)(I - T~ Y^^*)^{-1} Delta~`` and
    ``I - Theta(X)^*Theta(Y) = Delta~_* (I - X^^* T~)^{-1}(I - X^^* Y^)(I - T~^* Y^)^{-1} Delta~_*``.
    """
    C = as_char_function(C)
    X, Y = la.as_tuple(X), la.as_tuple(Y)
    T, n, d = C.T, C.n, C.d
    g = X[0].shape[0]
    Ig, Id = la.eye(g), la.eye(d)
    TX, TY = char_eval(C, X), char_eval(C, Y)
    Dt = np.kron(Ig, C.defects.delta)
    Ts = la.block_lift(C.defects.delta_star, n, g)

    lhs1 = la.eye(g * d) - TX @ la.dagger(TY)
    A1 = la.eye(g * d) - sum(np.kron(X[i], la.dagger(T[i])) for i in range(n))
    M1 = la.eye(g * d) - sum(np.kron(X[i] @ la.dagger(Y[i]), Id) for i in range(n))
    B1 = la.eye(g * d) - sum(np.kron(la.dagger(Y[i]), T[i]) for i in range(n))
    rhs1 = Dt @ la.solve(A1, M1) @ la.inv(B1) @ Dt

    def blocks(f):
        return np.block([[f(i, j) for j in range(n)] for i in range(n)])

    m = n * g * d
    lhs2 = la.eye(m) - la.dagger(TX) @ TY
    A2 = la.eye(m) - blocks(lambda i, j: np.kron(la.dagger(X[i]), T[j]))
    M2 = la.eye(m) - blocks(lambda i, j: np.kron(la.dagger(X[i]) @ Y[j], Id))
    B2 = la.eye(m) - blocks(lambda i, j: np.kron(Y[j], la.dagger(T[i])))
    rhs2 = Ts @ la.solve(A2, M2) @ la.inv(B2) @ Ts
    return la.operator_norm(lhs1 - rhs1), la.operator_norm(lhs2 - rhs2)


def defect_kernel_identity(C, N, safe_degree=None):
    """
    Residual of ``I - Theta^ Theta^^* = K_T K_T^*`` on Fock degrees ``<= safe_degree``
    (default ``N - 2``) and the rank of the left side there.
    """
    C = as_char_function(C)
    s = N - 2 if safe_degree is None else safe_degree
    fock = TruncatedFock(C.n, N)
    B = char_boundary(C, N, compressed=False)
    K = poisson_kernel(C.T, 1.0, N).matrix
    idx = np.nonzero(np.repeat(fock.safe_mask(s), C.d))[0]
    lhs = (la.eye(B.shape[0]) - B @ la.dagger(B))[np.ix_(idx, idx)]
    rhs = (K @ la.dagger(K))[np.ix_(idx, idx)]
    return la.operator_norm(lhs - rhs), la.rank_tol(lhs)


def inner_defect(C, safe_degree):
    """
    ``||Theta^^* Theta^ - I||`` on ``F^2_{<= s} (x) D_{T*}``, from rational realizations
    of the columns (no truncation). Conjugation by the flip ``e_a -> e_{reverse(a)}``
    turns right creations into left creations and preserves the safe subspace.
    """
    C = as_char_function(C)
    c, A, b = C.realization(compressed=True)
    rs = b.shape[1]
    vecs = []
    for w in enumerate_words(C.n, safe_degree):
        e = RationalVector.basis(w, C.n)
        for k in range(rs):
            vecs.append(e.tensor(la.eye(rs)[k]).left_multiply(c, A, b))
    G = rational_gram(vecs)
    return la.operator_norm(G - la.eye(G.shape[0]))


# -- automorphisms ------------------------------------------------------------------


@dataclass
class OmegaPair:
    omega: np.ndarray  # D_{Psi_lambda(T)} -> D_T, compressed
    omega_star: np.ndarray  # D_{Psi_lambda(T)*} -> D_{T*}, compressed
    full: np.ndarray = field(repr=False)  # uncompressed, d x d
    full_star: np.ndarray = field(repr=False)  # uncompressed, nd x nd

    def unitarity_defect(self):
        return max(_unitary_defect(self.omega), _unitary_defect(self.omega_star))


def _unitary_defect(W):
    if W.size == 0:
        return 0.0
    return max(la.operator_norm(la.dagger(W) @ W - la.eye(W.shape[1])),
               la.operator_norm(W @ la.dagger(W) - la.eye(W.shape[0])))


def _lam_star_T(lam, T):
    """``lambda^* T = [conj(lambda_i) T_j]_{ij}`` on ``K^(n)``."""
    n = len(T.entries)
    return np.block([[np.conj(lam[i]) * T[j] for j in range(n)] for i in range(n)])


def omega_unitaries(T, psi):
    """
    ``Omega Delta_{Psi_lambda(T)} = Delta_T (I - lambda T^*)^{-1} Delta_lambda`` and
    ``Omega_* Delta_{Psi_lambda(T)*} = Delta_{T*} (I - lambda^* T)^{-1} Delta_{lambda*}``,
    on orthonormal bases of the defect ranges.
    """
    T = as_row_contraction(T)
    lam, n, d = psi.lam, T.n, T.d
    P = as_row_contraction(_psi_lambda(psi).apply(T.entries), check=False)
    dP = P.defects
    lT = sum(lam[i] * la.dagger(T[i]) for i in range(n))
    R = T.defects.delta @ la.inv(la.eye(d) - lT) * psi.delta
    Rs = T.defects.delta_star @ la.inv(la.eye(n * d) - _lam_star_T(lam, T)) @ np.kron(psi.delta_star, la.eye(d))
    W = R @ np.linalg.pinv(dP.delta, rcond=la.RANK_TOL, hermitian=True)
    Ws = Rs @ np.linalg.pinv(dP.delta_star, rcond=la.RANK_TOL, hermitian=True)
    om = la.dagger(T.defects.range_basis) @ W @ dP.range_basis
    oms = la.dagger(T.defects.range_basis_star) @ Ws @ dP.range_basis_star
    return OmegaPair(om, oms, W, Ws)


def _psi_lambda(psi):
    from .mobius import BallAutomorphism

    return BallAutomorphism.psi(psi.lam)


def cara_defect(T, psi, X):
    """
    Residual of ``Theta_{Psi(T)}(X) = -(I (x) Omega^*) Theta_T(Psi^{-1}(X)) (I (x) Omega_* U)``
    with ``U = [u_ij I]``.
    """
    T = as_row_contraction(T)
    X = la.as_tuple(X)
    n, d, g = T.n, T.d, X[0].shape[0]
    om = omega_unitaries(T, psi)
    PT = psi.apply(T.entries)
    lhs = char_eval(CharFunction(as_row_contraction(PT, check=False)), X)
    inner = char_eval(CharFunction(T), psi.inverse_map(X))
    Ub = np.kron(psi.U, la.eye(d))
    rhs = -np.kron(la.eye(g), la.dagger(om.full)) @ inner @ la.block_lift(om.full_star @ Ub, n, g)
    return la.operator_norm(lhs - rhs)


def cara_formula_defect(mu, lam, X):
    """
    Scalar case: ``Psi_mu(Psi_lambda(X)) = -(I (x) Omega) Psi_{Psi_lambda(mu)}(X) (I (x) Omega_*^*)``
    with ``Omega``, ``Omega_*`` built at the scalar point ``T = mu``.
    """
    from .mobius import BallAutomorphism

    mu = np.asarray(mu, dtype=np.complex128).ravel()
    lam = np.asarray(lam, dtype=np.complex128).ravel()
    X = la.as_tuple(X)
    n, g = len(X), X[0].shape[0]
    pl, pm = BallAutomorphism.psi(lam), BallAutomorphism.psi(mu)
    Tm = tuple(np.array([[m]]) for m in mu)
    om = omega_unitaries(Tm, pl)
    nu = pl.apply_scalar(mu)
    lhs = la.row(pm.apply(pl.apply(X)))
    rhs = -np.kron(la.eye(g), om.full) @ la.row(BallAutomorphism.psi(nu).apply(X))
    rhs = rhs @ la.block_lift(la.dagger(om.full_star), n, g)
    return la.operator_norm(lhs - rhs)


def dede_defect(T, lam):
    """``||Psi_lambda(T) Delta_{lambda*} - Delta_lambda (I - T lambda^*)^{-1}(lambda - T)||``."""
    from .mobius import BallAutomorphism

    T = as_row_contraction(T)
    p = BallAutomorphism.psi(lam)
    d = T.d
    lhs = la.row(p.apply(T.entries)) @ np.kron(p.delta_star, la.eye(d))
    Tl = sum(np.conj(p.lam[i]) * T[i] for i in range(T.n))
    lmT = np.hstack([p.lam[i] * la.eye(d) - T[i] for i in range(T.n)])
    rhs = p.delta * la.solve(la.eye(d) - Tl, lmT)
    return la.operator_norm(lhs - rhs)


def ident2_defect(T, lam):
    """``||I - lambda Psi_lambda(T)^* - Delta_lambda (I - lambda T^*)^{-1} Delta_lambda||``."""
    from .mobius import BallAutomorphism

    T = as_row_contraction(T)
    p = BallAutomorphism.psi(lam)
    d = T.d
    P = p.apply(T.entries)
    lhs = la.eye(d) - sum(p.lam[i] * la.dagger(P[i]) for i in range(T.n))
    lT = sum(p.lam[i] * la.dagger(T[i]) for i in range(T.n))
    rhs = p.delta ** 2 * la.inv(la.eye(d) - lT)
    return la.operator_norm(lhs - rhs)


# -- curvature ---------------------------------------------------------------------

DENSE_LIMIT = 4000


@dataclass
class CurvatureReport:
    rank_delta_t: int
    trace_ratios: list
    curv_estimate: float
    euler_ratios: list
    euler_estimate: float
    route: str
    N: int

    def to_dict(self):
        return {
            "rankDeltaT": self.rank_delta_t,
            "traceRatios": list(self.trace_ratios),
            "curvEstimate": self.curv_estimate,
            "eulerRatios": list(self.euler_ratios),
            "eulerEstimate": self.euler_estimate,
            "route": self.route,
            "N": self.N,
        }


def _trace_ratios_boundary(C, N, ms):
    fock = TruncatedFock(C.n, N)
    B = char_boundary(C, N, compressed=True)
    r = C.defects.rank
    rows = np.abs(B) ** 2
    row_mass = rows.sum(axis=1).reshape(fock.dim, r).sum(axis=1)
    traces = [float(row_mass[fock.level(m)].sum()) for m in ms]
    G = la.eye(B.shape[0]) - B @ la.dagger(B)
    ranks = []
    for m in ms:
        idx = np.nonzero(np.repeat(fock.safe_mask(m), r))[0]
        ranks.append(la.rank_tol(G[:, idx]))
    return traces, ranks


def _trace_ratios_kernel(C, ms):
    T = C.T
    D2 = la.eye(T.d) - la.row_gram(T.entries)
    r = C.defects.rank
    traces, ranks = [], []
    term = D2
    basis = la.range_basis(C.defects.delta)
    level = basis
    k = 0
    for m in range(max(ms) + 1):
        if m > 0:
            term = cp_map(T, term)
            level = la.range_basis(np.hstack([t @ level for t in T]))
            basis = la.range_basis(np.hstack([basis, level])) if level.size else basis
        if m in ms:
            traces.append(float(r * T.n ** m - np.trace(term).real))
            ranks.append(basis.shape[1])
        k += 1
    return traces, ranks


def curvature_report(T, N, route="auto"):
    """
    ``traceRatios[m] = trace[Theta^ Theta^^* (P_m (x) I)] / n^m`` and
    ``eulerRatios[m] = rank[(I - Theta^ Theta^^*)(P_{<=m} (x) I)] / (1 + ... + n^{m-1})``
    for ``m = 1 .. N - 2``; the estimates use the last term.

    ``route`` is ``"boundary"`` (dense boundary function), ``"kernel"`` (through
    ``I - Theta^ Theta^^* = K_T K_T^*``, so the trace is ``n^m rank - trace Phi^m(Delta^2)``)
    or ``"auto"``, which picks the boundary route when it is small enough.
    """
    C = as_char_function(T)
    n, d = C.n, C.d
    if N < 3:
        raise ShapeMismatch("curvature needs N >= 3")
    ms = list(range(1, N - 1))
    if route == "auto":
        route = "boundary" if TruncatedFock(n, N).dim * d <= DENSE_LIMIT else "kernel"
    if route == "boundary":
        traces, ranks = _trace_ratios_boundary(C, N, ms)
    elif route == "kernel":
        traces, ranks = _trace_ratios_kernel(C, ms)
    else:
        raise ValueError(f"unknown route {route!r}")
    ratios = [t / n ** m for t, m in zip(traces, ms)]
    euler = [k / sum(n ** j for j in range(m)) for k, m in zip(ranks, ms)]
    rank = C.defects.rank
    return CurvatureReport(rank, ratios, rank - ratios[-1], euler, euler[-1], route, N)


# -- Arveson curvature -----------------------------------------------------------------


@dataclass
class ArvesonEstimate:
    estimate: float
    stderr: float
    samples: int
    r: float

    def to_dict(self):
        return {"estimate": self.estimate, "stderr": self.stderr, "samples": self.samples, "r": self.r}


def commutator_defect(T):
    T = as_row_contraction(T, check=False)
    return max((la.operator_norm(T[i] @ T[j] - T[j] @ T[i]) for i in range(T.n) for j in range(i)), default=0.0)


def _scalar_psi_batch(psi, Z):
    """``Psi(z)`` for each row ``z`` of ``Z`` (points of the ball of ``C^n``)."""
    lam = psi.lam
    W = Z
    den = 1.0 - W @ np.conj(lam)
    out = lam[None, :] - psi.delta * (W @ psi.delta_star) / den[:, None]
    return out @ psi.U


def _scalar_psi_inverse_batch(psi, Z):
    from .mobius import BallAutomorphism

    return _scalar_psi_batch(BallAutomorphism.psi(psi.lam), Z @ la.dagger(psi.U))


def arveson_integrand(T, Z):
    """``trace[I - Theta_T(z) Theta_T(z)^*]`` on ``D_T`` for each row ``z`` of ``Z``."""
    T = as_row_contraction(T)
    C = CharFunction(T)
    Q, Qs = C.range_bases
    Ts = np.array([la.dagger(t) for t in T])
    D, Dss = C.defects.delta, C.defects.delta_star
    Trow = T.row()
    A = la.eye(T.d)[None] - np.einsum("si,iab->sab", Z, Ts)
    Xh = np.einsum("si,ab->saib", Z, la.eye(T.d)).reshape(len(Z), T.d, -1)
    Y = np.linalg.solve(A, Xh)
    Th = -Trow[None] + np.einsum("ab,sbc,cd->sad", D, Y, Dss)
    Th = np.einsum("ab,sbc,cd->sad", la.dagger(Q), Th, Qs)
    return (Q.shape[1] - np.einsum("sab,sab->s", Th, Th.conj()).real)


def arveson_curvature(T, r=0.99, samples=10000, seed=0, psi=None):
    """
    Monte Carlo estimate of ``int trace[I - Theta_T(r xi) Theta_T(r xi)^*] d sigma(xi)``
    over the unit sphere of ``C^n``; with ``psi`` the point ``r xi`` is replaced by
    ``Psi^{-1}(r xi)``.
    """
    T = as_row_contraction(T)
    if not isinstance(samples, (int, np.integer)) or isinstance(samples, bool) or samples < 1:
        raise ValueError(f"samples must be a positive integer, got {samples!r}")
    if commutator_defect(T) > COMMUTE_TOL:
        raise NotCommuting(f"commutator norm {commutator_defect(T):.3e} exceeds {COMMUTE_TOL:g}")
    if not 0 < r < 1:
        raise ValueError("r must lie in (0, 1)")
    Z = r * la.random_sphere_points(T.n, samples, seed)
    if psi is not None:
        Z = _scalar_psi_inverse_batch(psi, Z)
    vals = arveson_integrand(T, Z)
    est = float(np.mean(vals))
    se = float(np.std(vals, ddof=1) / np.sqrt(samples)) if samples > 1 else float("inf")
    return ArvesonEstimate(est, se, samples, r)


def arveson_scalar_value(lam, r):
    """
    Exact sphere average of the integrand at a scalar point ``lambda`` of ``B_n``:
    ``(1 - r^2)(1 - |lambda|^2) sum_k (r |lambda|)^{2k} k! (n-1)! / (n+k-1)!``.
    """
    lam = np.asarray(lam, dtype=np.complex128).ravel()
    n = lam.size
    q = (r * np.linalg.norm(lam)) ** 2
    total, term, k = 0.0, 1.0, 0
    while term > 1e-18 * max(total, 1.0) or k == 0:
        total += term
        k += 1
        term *= q * k / (n + k - 1)
        if k > 100000:
            break
    return float((1 - r * r) * (1 - np.linalg.norm(lam) ** 2) * total)
