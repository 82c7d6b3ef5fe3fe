"""Normal-form reduction of quadratic Hamiltonians in phase-space variables.

The classical quadratic form

    H(p, q) = 1/2 (p^t A2 p + 2 p^t X q + q^t B2 q)

is reduced to independent oscillators by real linear canonical
transformations: first the positive square root A of A2, then the
orthogonal diagonalization of A (B2 - X^t A^-2 X) A.  Only symmetric
eigenproblems are ever solved.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import (
    ConstraintViolated,
    NotPositiveDefinite,
    UnstableMode,
    UnstableSpectrum,
)

EPS_PD = 1e-12
SYM_TOL = 1e-12
XA2_TOL = 1e-10


def _frozen(a):
    a = np.array(a, dtype=float)
    a.setflags(write=False)
    return a


def single_mode_bogoliubov(omega0, gamma):
    """Proper frequency of ``omega0 (a'a + a a')/2 + gamma (a'a' + a a)/2``.

    In phase space the Hamiltonian is ``(omega0-gamma) p^2/2 +
    (omega0+gamma) q^2/2``, so the frequency is ``sqrt(omega0^2 - gamma^2)``.
    """
    if omega0 <= 0 or abs(gamma) >= omega0:
        raise UnstableMode(
            f"|gamma|={abs(gamma)!r} >= omega0={omega0!r}: the p^2 or q^2 "
            "coefficient (omega0 -/+ gamma) is not positive, the form is "
            "unbounded from below"
        )
    return math.sqrt(omega0 * omega0 - gamma * gamma)


def sym_eigh(m):
    """Eigen-decomposition of a symmetric matrix with reproducible output.

    Eigenvalues ascend; every eigenvector (column) is signed so that its
    first non-negligible component is positive.
    """
    m = np.asarray(m, dtype=float)
    w, v = np.linalg.eigh(0.5 * (m + m.T))
    v = v.copy()
    for k in range(v.shape[1]):
        col = v[:, k]
        thresh = 1e-10 * np.max(np.abs(col))
        first = np.flatnonzero(np.abs(col) > thresh)[0]
        if col[first] < 0:
            v[:, k] = -col
    return w, v


def psd_sqrt(A2, eps_pd=EPS_PD):
    """Positive square root of a symmetric positive-definite matrix.

    Returns ``(A, A_inv)``.  Raises NotPositiveDefinite when the smallest
    eigenvalue is not above ``eps_pd`` times the largest one.
    """
    lam2, W = sym_eigh(A2)
    _check_pd(lam2, eps_pd)
    lam = np.sqrt(lam2)
    A = (W * lam) @ W.T
    A_inv = (W / lam) @ W.T
    return 0.5 * (A + A.T), 0.5 * (A_inv + A_inv.T)


def _check_pd(eigs, eps_pd):
    scale = max(float(np.max(np.abs(eigs))), 1e-300)
    if eigs[0] <= eps_pd * scale:
        raise NotPositiveDefinite(
            f"matrix is not positive definite: smallest eigenvalue "
            f"{eigs[0]:.6e} (largest {eigs[-1]:.6e})",
            eigenvalue=float(eigs[0]),
        )


@dataclass(frozen=True)
class QuadraticHamiltonian:
    """Quadratic phase-space Hamiltonian ``w + H_q(p - p0, q - q0)``.

    ``hbar_eff`` is the effective Planck constant; spin applications use
    ``1/S_tilde``.
    """

    A2: np.ndarray
    B2: np.ndarray
    X: np.ndarray | None = None
    p0: np.ndarray | None = None
    q0: np.ndarray | None = None
    w: float = 0.0
    hbar_eff: float = 1.0

    def __post_init__(self):
        A2 = _frozen(np.atleast_2d(self.A2))
        B2 = _frozen(np.atleast_2d(self.B2))
        n = A2.shape[0]
        if A2.shape != (n, n) or B2.shape != (n, n):
            raise ValueError(f"A2 {A2.shape} and B2 {B2.shape} must be square and equal")
        for name, m in (("A2", A2), ("B2", B2)):
            scale = max(float(np.max(np.abs(m))), 1.0)
            if np.max(np.abs(m - m.T)) > SYM_TOL * scale:
                raise ValueError(f"{name} is not symmetric")
        X = np.zeros((n, n)) if self.X is None else np.atleast_2d(self.X)
        if X.shape != (n, n):
            raise ValueError(f"X has shape {X.shape}, expected {(n, n)}")
        p0 = np.zeros(n) if self.p0 is None else np.ravel(self.p0)
        q0 = np.zeros(n) if self.q0 is None else np.ravel(self.q0)
        if p0.shape != (n,) or q0.shape != (n,):
            raise ValueError("shift vectors must have length n_dof")
        if not self.hbar_eff > 0:
            raise ValueError("hbar_eff must be positive")
        object.__setattr__(self, "A2", A2)
        object.__setattr__(self, "B2", B2)
        object.__setattr__(self, "X", _frozen(X))
        object.__setattr__(self, "p0", _frozen(p0))
        object.__setattr__(self, "q0", _frozen(q0))
        object.__setattr__(self, "w", float(self.w))
        object.__setattr__(self, "hbar_eff", float(self.hbar_eff))

    @property
    def n_dof(self):
        return self.A2.shape[0]

    @property
    def has_cross_term(self):
        return bool(np.any(self.X != 0.0))

    def energy(self, p, q):
        """Classical value of the form at the phase-space point (p, q)."""
        dp = np.asarray(p, dtype=float) - self.p0
        dq = np.asarray(q, dtype=float) - self.q0
        return self.w + 0.5 * (dp @ self.A2 @ dp + 2 * dp @ self.X @ dq + dq @ self.B2 @ dq)

    def shifted(self, dA2=None, dB2=None, w=None):
        """Copy with ``A2 + dA2``, ``B2 + dB2`` and optionally a new offset."""
        A2 = self.A2 if dA2 is None else self.A2 + dA2
        B2 = self.B2 if dB2 is None else self.B2 + dB2
        return QuadraticHamiltonian(
            A2, B2, self.X, self.p0, self.q0,
            self.w if w is None else w, self.hbar_eff,
        )


@dataclass(frozen=True)
class NormalModeBasis:
    """Matrices of the canonical transformation to normal modes.

    ``p = F p~ - X^t F q~`` and ``q = G q~`` with ``F^-1 = G^t = O A``.
    ``lambdas`` and ``omega`` hold the diagonals of Lambda and Omega.
    """

    V: np.ndarray
    lambdas: np.ndarray
    O: np.ndarray
    omega: np.ndarray
    F: np.ndarray
    G: np.ndarray
    A: np.ndarray
    A_inv: np.ndarray
    epsilon: np.ndarray = field(default=None)

    def __post_init__(self):
        for name in ("V", "lambdas", "O", "omega", "F", "G", "A", "A_inv"):
            object.__setattr__(self, name, _frozen(getattr(self, name)))
        eps = np.ones(len(self.omega)) if self.epsilon is None else self.epsilon
        object.__setattr__(self, "epsilon", _frozen(eps))

    @property
    def Lambda(self):
        return np.diag(self.lambdas)

    @property
    def Omega(self):
        return np.diag(self.omega)

    @property
    def E(self):
        return np.diag(self.epsilon)

    @property
    def gap(self):
        return float(self.omega[0])


def normal_form(H: QuadraticHamiltonian, eps_pd=EPS_PD) -> NormalModeBasis:
    """Reduce ``H`` to independent harmonic oscillators.

    Raises NotPositiveDefinite if A2 is not positive definite,
    ConstraintViolated if ``X A2`` is not symmetric and UnstableSpectrum if
    some squared frequency is not positive.
    """
    lam2, W = sym_eigh(H.A2)
    _check_pd(lam2, eps_pd)
    lam = np.sqrt(lam2)
    V = W.T
    A = (W * lam) @ W.T
    A_inv = (W / lam) @ W.T
    A, A_inv = 0.5 * (A + A.T), 0.5 * (A_inv + A_inv.T)

    X = H.X
    if H.has_cross_term:
        XA2 = X @ H.A2
        scale = max(float(np.max(np.abs(XA2))), 1e-300)
        if np.max(np.abs(XA2 - XA2.T)) > XA2_TOL * scale:
            raise ConstraintViolated(
                "X A2 is not symmetric, so p -> A p + A^-1 X q is not canonical; "
                "exchange the roles of coordinates and momenta (swap A2 and B2, "
                "transpose X) and require B2 X symmetric instead"
            )
        K = A @ (H.B2 - X.T @ A_inv @ A_inv @ X) @ A
    else:
        K = A @ H.B2 @ A

    w2, Wk = sym_eigh(K)
    scale = max(float(np.max(np.abs(w2))), 1e-300)
    if w2[0] <= eps_pd * scale:
        kind = "negative" if w2[0] < -eps_pd * scale else "vanishing"
        raise UnstableSpectrum(
            f"{kind} squared frequency {w2[0]:.6e}: the quadratic form is "
            "not bounded from below around this configuration"
        )
    O = Wk.T
    return NormalModeBasis(
        V=V, lambdas=lam, O=O, omega=np.sqrt(w2),
        F=A_inv @ O.T, G=A @ O.T, A=A, A_inv=A_inv,
    )


def thermal_factors(omega, beta=math.inf, hbar_eff=1.0):
    """Per-mode factors ``alpha_k = (hbar/2) coth(beta hbar omega_k / 2)``.

    ``beta = math.inf`` is the ground state, where ``alpha_k = hbar/2``.
    """
    omega = np.atleast_1d(np.asarray(omega, dtype=float))
    if np.any(omega <= 0):
        raise UnstableSpectrum(f"non-positive frequency {omega.min():.6e}")
    if not beta > 0:
        raise ValueError("beta must be positive (math.inf for the ground state)")
    if math.isinf(beta):
        return np.full_like(omega, 0.5 * hbar_eff)
    x = 0.5 * beta * hbar_eff * omega
    return 0.5 * hbar_eff / np.tanh(x)


@dataclass(frozen=True)
class CorrelatorSet:
    """Second moments ``<q q^t>``, ``<p p^t>``, ``<p q^t>`` of a Gaussian state."""

    Cqq: np.ndarray
    Cpp: np.ndarray
    Cpq: np.ndarray
    alpha: np.ndarray
    beta: float = math.inf

    def __post_init__(self):
        for name in ("Cqq", "Cpp", "Cpq", "alpha"):
            object.__setattr__(self, name, _frozen(getattr(self, name)))

    @property
    def n_dof(self):
        return self.Cqq.shape[0]

    def covariance(self):
        """Full 2N x 2N covariance of the phase-space vector ``(p, q)``."""
        return np.block([[self.Cpp, self.Cpq], [self.Cpq.T, self.Cqq]])


def correlators(H: QuadraticHamiltonian, basis: NormalModeBasis, beta=math.inf) -> CorrelatorSet:
    """Equilibrium correlators of the original variables at inverse temperature beta."""
    alpha = thermal_factors(basis.omega, beta, H.hbar_eff)
    F, G, X = basis.F, basis.G, H.X
    a_over_w = alpha / basis.omega
    Cqq = (G * a_over_w) @ G.T
    Cpp = (F * (alpha * basis.omega)) @ F.T
    if H.has_cross_term:
        XtF = X.T @ F
        Cpp = Cpp + (XtF * a_over_w) @ XtF.T
        Cpq = -(XtF * a_over_w) @ G.T
    else:
        Cpq = np.zeros_like(Cqq)
    return CorrelatorSet(
        Cqq=0.5 * (Cqq + Cqq.T), Cpp=0.5 * (Cpp + Cpp.T), Cpq=Cpq,
        alpha=alpha, beta=beta,
    )
