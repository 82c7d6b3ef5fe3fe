"""Finite open antiferromagnetic chain with an odd number of spins.

Around the antiparallel configuration the quadratic Hamiltonian has
``X = 0``, ``A2 = mu M + h H + K`` and ``B2 = H A2 H``.  Because
``A B2 A = (A H A)^2``, the normal modes follow from the symmetric matrix
``A H A``, whose eigenvalues shift rigidly with the field,
``w~_k(h) = w~_0k + h``.  Zero-temperature correlators do not depend on h.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import GapClosed, NoStableWindow, NotPositiveDefinite
from .quadratic import (
    EPS_PD,
    CorrelatorSet,
    QuadraticHamiltonian,
    psd_sqrt,
    sym_eigh,
)
from .scha import SchaConfig, SchaState, scha_iterate, wick_average

SCAN_POINTS = 64
EDGE_TOL = 1e-13


@dataclass(frozen=True)
class ChainModel:
    """Chain of ``N = 2M + 1`` spins; ``S_tilde = S + 1/2`` (``inf`` is classical)."""

    N: int
    mu: float
    h: float = 0.0
    S_tilde: float = math.inf

    def __post_init__(self):
        if self.N < 3 or self.N % 2 == 0:
            raise ValueError(f"N must be odd and >= 3, got {self.N}")
        if not self.S_tilde > 0:
            raise ValueError("S_tilde must be positive")

    @property
    def hbar_eff(self):
        return 1.0 / self.S_tilde


def _offdiag(v):
    return np.diag(v, 1) + np.diag(v, -1)


@dataclass(frozen=True)
class ChainMatrices:
    """Structural matrices plus optional SCHA dressing.

    ``site`` (length N) adds to the diagonal of both A2 and B2; ``bond``
    (length N-1) is subtracted from the couplings of A2 and added to those
    of B2, so ``H A2 H = B2`` holds by construction.
    """

    M: np.ndarray
    H: np.ndarray
    K: np.ndarray
    mu: float
    site: np.ndarray
    bond: np.ndarray

    @property
    def N(self):
        return self.M.shape[0]

    @property
    def couplings(self):
        return 1.0 - self.bond

    def base(self):
        """Field-independent part of A2."""
        return self.mu * self.M + np.diag(self.site) + _offdiag(self.couplings)

    def A2(self, h):
        return self.base() + h * self.H

    def B2(self, h):
        return self.H @ self.A2(h) @ self.H

    def dressed(self, site, bond):
        return ChainMatrices(self.M, self.H, self.K, self.mu,
                             np.asarray(site, dtype=float), np.asarray(bond, dtype=float))


def build_matrices(model: ChainModel) -> ChainMatrices:
    N = model.N
    m = np.full(N, 2.0)
    m[0] = m[-1] = 1.0
    sign = np.where(np.arange(N) % 2 == 0, 1.0, -1.0)
    return ChainMatrices(
        M=np.diag(m), H=np.diag(sign), K=_offdiag(np.ones(N - 1)), mu=float(model.mu),
        site=np.zeros(N), bond=np.zeros(N - 1),
    )


def is_stable(mats: ChainMatrices, h) -> bool:
    """Whether A2(h) is positive definite (Cholesky test)."""
    try:
        np.linalg.cholesky(mats.A2(h))
    except np.linalg.LinAlgError:
        return False
    return True


def _bisect(mats, inside, outside):
    while abs(outside - inside) > EDGE_TOL * max(1.0, abs(inside)):
        mid = 0.5 * (inside + outside)
        if is_stable(mats, mid):
            inside = mid
        else:
            outside = mid
    return 0.5 * (inside + outside)


def _find_stable(mats, h_bot, h_top):
    grid = np.linspace(h_bot, h_top, SCAN_POINTS + 1)[:-1]
    inside = next((h for h in grid if is_stable(mats, h)), None)
    if inside is None:
        # narrow window: try between consecutive roots of det A2(h), and
        # geometrically close to the lower end where windows pinch at h = 0
        roots = np.sort((-np.linalg.eigvals(mats.base() @ mats.H)).real)
        roots = np.concatenate(([h_bot], roots[(roots > h_bot) & (roots < h_top)], [h_top]))
        cands = list(0.5 * (roots[1:] + roots[:-1]))
        cands += [h_bot + (h_top - h_bot) * 2.0 ** -k for k in range(1, 50)]
        inside = next((h for h in cands if is_stable(mats, h)), None)
    return inside


def stability_window(mats: ChainMatrices, allow_negative=False):
    """Field bracket ``(h_lo, h_hi)`` where A2 is positive definite.

    A2 is affine in h, so the set is one interval.  A 64-point scan of
    ``h >= 0`` looks for a stable field; if it misses a narrow window, the
    midpoints between consecutive roots of ``det A2(h)`` (the values
    ``-eig(A2(0) H)``) are tried.  Edges are refined by bisection and the
    lower edge is cut at 0.  With ``allow_negative`` a window lying wholly
    at ``h < 0`` is returned too (useful as a reference field, since
    correlators do not depend on h).
    """
    diag = np.diag(mats.base())
    up_sites = mats.H.diagonal() > 0
    h_top = float(np.min(diag[~up_sites]))
    h_bot = -float(np.min(diag[up_sites]))
    inside = _find_stable(mats, 0.0, h_top) if h_top > 0 else None
    lower = 0.0
    if inside is None and allow_negative and h_bot < min(h_top, 0.0):
        inside = _find_stable(mats, h_bot, min(h_top, 0.0))
        lower = h_bot
    if inside is None:
        raise NoStableWindow(
            f"no field in [0, {h_top:.6g}) makes A2 positive definite: "
            "the antiparallel phase is absent"
        )
    lo = lower if is_stable(mats, lower) else _bisect(mats, inside, lower)
    hi = _bisect(mats, inside, h_top)
    return lo, hi


@dataclass(frozen=True)
class ChainSpectrum:
    """Field-independent data of the A H A eigenproblem.

    ``omega_tilde_0`` are the signed eigenvalues continued to h = 0,
    ``epsilon`` their signs inside the window and ``R = A U |w~|^-1/2``
    with U the eigenvectors of A H A.
    """

    omega_tilde_0: np.ndarray
    epsilon: np.ndarray
    R: np.ndarray
    h_ref: float

    def omega_tilde(self, h):
        return self.omega_tilde_0 + h

    def frequencies(self, h):
        return np.abs(self.omega_tilde(h))

    @property
    def E(self):
        return np.diag(self.epsilon)


def spectrum_AHA(mats: ChainMatrices, h) -> ChainSpectrum:
    """Diagonalize A H A at the field h (inside the stability window)."""
    A, _ = psd_sqrt(mats.A2(h))
    w, U = sym_eigh(A @ mats.H @ A)
    if np.min(np.abs(w)) <= EPS_PD * np.max(np.abs(w)):
        raise GapClosed(f"a mode frequency vanishes at h = {h}")
    R = (A @ U) / np.sqrt(np.abs(w))
    return ChainSpectrum(w - h, np.sign(w), R, float(h))


def critical_fields_HA(spec: ChainSpectrum, mu=None):
    """``(h_minus, h_plus)`` from the signed spectrum.

    Modes with ``epsilon = -1`` go soft at ``h = -w~_0k`` from below, the
    others from above.  ``h_minus`` is clamped at 0 and set to exactly 0
    for ``mu >= 1``.
    """
    neg = spec.omega_tilde_0[spec.epsilon < 0]
    pos = spec.omega_tilde_0[spec.epsilon > 0]
    h_plus = -float(np.max(neg)) if neg.size else math.inf
    h_minus = -float(np.min(pos)) if pos.size else -math.inf
    if (mu is not None and mu >= 1) or h_minus < 0:
        h_minus = 0.0
    if h_minus >= h_plus:
        raise NoStableWindow(f"h_minus = {h_minus:.6g} >= h_plus = {h_plus:.6g}")
    return h_minus, h_plus


def correlators_chain(spec: ChainSpectrum, S_tilde) -> CorrelatorSet:
    """Zero-temperature correlators ``2 S~ <q q^t> = R R^t`` and ``<p p^t> = H <q q^t> H``."""
    Cqq = spec.R @ spec.R.T / (2 * S_tilde)
    Cqq = 0.5 * (Cqq + Cqq.T)
    sign = np.where(np.arange(len(Cqq)) % 2 == 0, 1.0, -1.0)
    Cpp = Cqq * np.outer(sign, sign)
    return CorrelatorSet(Cqq, Cpp, np.zeros_like(Cqq),
                         np.full(len(Cqq), 0.5 / S_tilde), math.inf)


def magnetization(spec: ChainSpectrum, S_tilde):
    """Total ``M^z = S~ [1 - Tr(H <q q^t>)]``, which equals ``S~ - 1/2``."""
    sign = np.where(np.arange(spec.R.shape[0]) % 2 == 0, 1.0, -1.0)
    tr = float(np.sum(sign * np.sum(spec.R ** 2, axis=1))) / (2 * S_tilde)
    return S_tilde * (1.0 - tr)


def dressing_vectors(Cqq, mu):
    """Site and bond corrections from the Gaussian averages of the quartic term.

    Neighbours with label 0 or N+1 contribute nothing.
    """
    Cqq = np.asarray(Cqq)
    d = np.diag(Cqq)
    nn = np.diag(Cqq, 1)
    site = np.zeros(len(d))
    site[:-1] += nn - mu * d[1:]
    site[1:] += nn - mu * d[:-1]
    bond = 0.5 * (d[:-1] + d[1:]) - mu * nn
    return site, bond


def scha_second_derivatives(C: CorrelatorSet, mu):
    """``(dA2, dB2)``: averaged second derivatives of the quartic chain term.

    Diagonals are equal, couplings opposite: ``dB2`` has ``+bond`` and
    ``dA2`` has ``-bond`` on the first off-diagonals.
    """
    site, bond = dressing_vectors(C.Cqq, mu)
    return np.diag(site) - _offdiag(bond), np.diag(site) + _offdiag(bond)


def quartic_average(C: CorrelatorSet, mu):
    """``<H4>`` over the Gaussian state, with ``r_i = (p_i^2 + q_i^2)/2``.

    The bond term is ``(r_i + r_j)(q_i q_j - p_i p_j)/4 - mu r_i r_j``, the
    normalization whose Hessian gives :func:`scha_second_derivatives`.
    """
    cov = C.covariance()
    n = C.n_dof
    p = lambda i: i
    q = lambda i: n + i
    total = 0.0
    for i in range(n - 1):
        j = i + 1
        for a in (p(i), q(i), p(j), q(j)):
            total += 0.125 * (wick_average(cov, [a, a, q(i), q(j)])
                             - wick_average(cov, [a, a, p(i), p(j)]))
        for a in (p(i), q(i)):
            for b in (p(j), q(j)):
                total -= 0.25 * mu * wick_average(cov, [a, a, b, b])
    return total


class ChainSchaModel:
    """Chain SCHA problem for the generic engine.

    The trial Hamiltonian is evaluated at a reference field inside the
    current stability window.  With ``recenter`` the field is moved to the
    midpoint of the dressed window at every iteration; correlators do not
    depend on the field, so this only keeps the construction of A valid.
    """

    def __init__(self, N, mu, S_tilde, h_ref=None, recenter=True):
        self.chain = ChainModel(N, mu, 0.0, S_tilde)
        self.mats = build_matrices(self.chain)
        lo, hi = stability_window(self.mats)
        self.h_ref = 0.5 * (lo + hi) if h_ref is None else float(h_ref)
        if not is_stable(self.mats, self.h_ref):
            raise NoStableWindow(f"reference field {self.h_ref} is outside the window ({lo}, {hi})")
        self.recenter = recenter
        self._bare = self._hamiltonian(self.mats)

    def _hamiltonian(self, mats):
        return QuadraticHamiltonian(mats.A2(self.h_ref), mats.B2(self.h_ref),
                                    hbar_eff=self.chain.hbar_eff)

    def bare(self):
        return self._bare

    def delta_second_derivatives(self, C):
        return scha_second_derivatives(C, self.chain.mu)

    def energy_offset(self, C):
        dA2, dB2 = self.delta_second_derivatives(C)
        return (quartic_average(C, self.chain.mu)
                - 0.5 * float(np.sum(dA2 * C.Cpp) + np.sum(dB2 * C.Cqq)))

    def effective(self, dA2, dB2):
        site = np.diag(dB2).copy()
        bond = np.diag(dB2, 1).copy()
        mats = self.mats.dressed(site, bond)
        if self.recenter:
            lo, hi = stability_window(mats, allow_negative=True)
            self.h_ref = 0.5 * (lo + hi)
        elif not is_stable(mats, self.h_ref):
            raise NotPositiveDefinite(f"dressed A2 is not positive definite at h = {self.h_ref}")
        self.dressed_matrices = mats
        return self._hamiltonian(mats)


def scha_chain(model: ChainModel, config: SchaConfig = SchaConfig(), h_ref=None,
               recenter=True):
    """Quantum-renormalized critical fields ``(h_minus, h_plus, state)``.

    For ``S_tilde = inf`` there is no dressing: the HA fields are returned
    with ``state = None``.
    """
    mats = build_matrices(model)
    if math.isinf(model.S_tilde):
        lo, hi = stability_window(mats)
        spec = spectrum_AHA(mats, 0.5 * (lo + hi))
        return (*critical_fields_HA(spec, model.mu), None)
    sm = ChainSchaModel(model.N, model.mu, model.S_tilde, h_ref=h_ref, recenter=recenter)
    state: SchaState = scha_iterate(sm, math.inf, config)
    spec = spectrum_AHA(sm.dressed_matrices, sm.h_ref)
    h_minus, h_plus = critical_fields_HA(spec, model.mu)
    state.dressed_matrices = sm.dressed_matrices
    return h_minus, h_plus, state
