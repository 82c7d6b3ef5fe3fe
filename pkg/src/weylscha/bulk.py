"""Bulk easy-axis antiferromagnet on a hypercubic lattice.

Reduced units: the energy scale is ``J S~^2 = 1``, the field is
``h = H/(J S~)`` and the effective Planck constant is ``1/S~`` with
``S~ = S + 1/2``.  The quadratic Hamiltonian splits into 2x2 blocks
pairing k with k + pi; the quartic interaction, in the SCHA, dresses the
anisotropy ``mu -> mu~`` and the hopping ``gamma_k -> theta gamma_k``.

The Brillouin zone is sampled at midpoints ``k = 2 pi (j + 1/2)/L`` so
that ``gamma_k = +-1`` never falls on the grid; this makes the isotropic
one-dimensional sums finite and midpoint-rule convergent.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.optimize import brentq

from .errors import DivergentCorrelator, GapClosed, NoConvergence
from .quadratic import QuadraticHamiltonian
from .scha import SchaConfig

SIGMA1 = np.array([[0.0, 1.0], [1.0, 0.0]])
SIGMA3 = np.diag([1.0, -1.0])
EPS_DIV = 1e-14


@dataclass(frozen=True)
class BulkLattice:
    dim: int
    L: int
    mu: float
    h: float = 0.0
    S_tilde: float = math.inf

    def __post_init__(self):
        if self.dim not in (1, 2, 3):
            raise ValueError("dim must be 1, 2 or 3")
        if self.L < 2 or self.L % 2:
            raise ValueError("L must be even so that k pairs with k + pi")
        if not self.S_tilde > 0:
            raise ValueError("S_tilde must be positive")

    @property
    def z(self):
        return 2 * self.dim

    @property
    def hbar_eff(self):
        return 1.0 / self.S_tilde

    def k_axis(self):
        return 2 * np.pi * (np.arange(self.L) + 0.5) / self.L

    def gammas(self):
        """``gamma_k`` over the whole zone, flattened (``L**dim`` values)."""
        axes = np.meshgrid(*([self.k_axis()] * self.dim), indexing="ij")
        return sum(np.cos(a) for a in axes).ravel() / self.dim


@dataclass(frozen=True)
class BulkState:
    theta: float
    mu_eff: float
    D: float
    D_prime: float
    lattice: BulkLattice
    iterations: int = 0
    converged: bool = True
    residual: float = 0.0


def gamma_k(k):
    """``(1/d) sum_a cos k_a`` for a d-vector (or an array with last axis d)."""
    k = np.atleast_1d(np.asarray(k, dtype=float))
    return np.mean(np.cos(k), axis=-1)


def bare_spectrum(lattice: BulkLattice, gammas=None):
    """``(omega_plus, omega_minus) = z sqrt(mu^2 - gamma^2) +- h`` on the grid."""
    g = lattice.gammas() if gammas is None else np.asarray(gammas, dtype=float)
    w0 = lattice.z * np.sqrt(lattice.mu ** 2 - g ** 2)
    return w0 + lattice.h, w0 - lattice.h


def block_hamiltonian(lattice: BulkLattice, gamma, mu_eff=None, theta=1.0):
    """2x2 block for the pair (k, k+pi): ``A2 = z(mu + theta gamma s3) - h s1``, ``B2 = z(mu - theta gamma s3) - h s1``."""
    mu = lattice.mu if mu_eff is None else mu_eff
    tg = theta * gamma
    hbar = 1.0 if math.isinf(lattice.S_tilde) else lattice.hbar_eff
    A2 = lattice.z * (mu * np.eye(2) + tg * SIGMA3) - lattice.h * SIGMA1
    B2 = lattice.z * (mu * np.eye(2) - tg * SIGMA3) - lattice.h * SIGMA1
    return QuadraticHamiltonian(A2, B2, hbar_eff=hbar)


def ha_instability_field(lattice: BulkLattice, mu_eff=None, theta=1.0):
    """Field at which the uniform (gamma = 1) block stops being positive definite."""
    mu = lattice.mu if mu_eff is None else mu_eff
    z = lattice.z

    def lam_min(h):
        A2 = z * (mu * np.eye(2) + theta * SIGMA3) - h * SIGMA1
        return np.linalg.eigvalsh(A2)[0]

    if lam_min(0.0) <= 0:
        return 0.0
    return brentq(lam_min, 0.0, z * (mu + theta), xtol=1e-15, rtol=4 * np.finfo(float).eps)


def _thermal_boost(lattice, w0, beta):
    """``(coth(b hbar w+/2) + coth(b hbar w-/2))/2``; 1 in the ground state."""
    if math.isinf(beta):
        return 1.0
    hb = lattice.hbar_eff
    wp, wm = w0 + lattice.h, w0 - lattice.h
    if np.any(wm <= 0):
        raise GapClosed("a mode frequency is not positive at this field")
    return 0.5 * (1 / np.tanh(0.5 * beta * hb * wp) + 1 / np.tanh(0.5 * beta * hb * wm))


def correlators_DDprime(mu_eff, theta, lattice: BulkLattice, beta=math.inf):
    """On-site ``D = <q_i^2>`` and nearest-neighbour ``D' = <q_i q_i+d>``.

    In the ground state ``D = (1/2 S~ N) sum_k sqrt((mu~ + theta g)/(mu~ - theta g))``
    and D' carries an extra ``gamma_k``; neither depends on h.
    """
    if math.isinf(lattice.S_tilde):
        return 0.0, 0.0
    g = lattice.gammas()
    gap = mu_eff - theta * np.abs(g)
    if np.min(gap) <= EPS_DIV * max(abs(mu_eff), 1.0):
        raise DivergentCorrelator(
            f"mu~ - theta |gamma_k| = {np.min(gap):.3e} on the grid: the correlator sum diverges"
        )
    ratio = np.sqrt((mu_eff + theta * g) / (mu_eff - theta * g))
    boost = _thermal_boost(lattice, lattice.z * np.sqrt(mu_eff ** 2 - (theta * g) ** 2), beta)
    weight = 0.5 * lattice.hbar_eff * ratio * boost
    return float(np.mean(weight)), float(np.mean(weight * g))


def dressed_parameters(mu, D, D_prime):
    """``(theta, mu~) = (1 - D + mu D', mu (1 - D) + D')``."""
    return 1.0 - D + mu * D_prime, mu * (1.0 - D) + D_prime


def scha_bulk(lattice: BulkLattice, config: SchaConfig = SchaConfig(), beta=math.inf) -> BulkState:
    """Self-consistent ``(theta, mu~)`` by mixed Jacobi iteration.

    Raises GapClosed when the dressed anisotropy no longer exceeds the
    dressed hopping (``mu~ <= theta``, no stable antiparallel state), and
    NoConvergence after ``config.max_iter`` iterations.
    """
    mu = lattice.mu
    if math.isinf(lattice.S_tilde):
        return BulkState(1.0, mu, 0.0, 0.0, lattice, 0, True, 0.0)
    theta, mu_eff = 1.0, mu
    D, Dp = correlators_DDprime(mu_eff, theta, lattice, beta)
    m = config.mixing
    for it in range(1, config.max_iter + 1):
        t_new, m_new = dressed_parameters(mu, D, Dp)
        theta = (1 - m) * theta + m * t_new
        mu_eff = (1 - m) * mu_eff + m * m_new
        # at mu = 1 the update keeps mu~ = theta exactly; otherwise the gap must stay open
        isotropic = mu == 1 and mu_eff == theta
        if theta <= 0 or (not isotropic and mu_eff - theta <= config.gap_tol * mu_eff):
            raise GapClosed(
                f"dressed parameters theta={theta:.6g}, mu~={mu_eff:.6g} admit no stable "
                f"antiparallel state (iteration {it})",
                context={"theta": theta, "mu_eff": mu_eff, "iteration": it},
            )
        try:
            D_new, Dp_new = correlators_DDprime(mu_eff, theta, lattice, beta)
        except DivergentCorrelator as exc:
            raise GapClosed(str(exc), context={"theta": theta, "mu_eff": mu_eff}) from exc
        residual = max(abs(D_new - D), abs(Dp_new - Dp))
        D, Dp = D_new, Dp_new
        if residual <= config.tol:
            theta, mu_eff = dressed_parameters(mu, D, Dp)
            return BulkState(theta, mu_eff, D, Dp, lattice, it, True, residual)
    raise NoConvergence(
        f"bulk SCHA did not converge in {config.max_iter} iterations",
        last_state=BulkState(theta, mu_eff, D, Dp, lattice, config.max_iter, False, residual),
    )


def h_sf(state: BulkState, lattice: BulkLattice | None = None):
    """``(h_classical, h_scha, h_first_order)`` for the spin-flop field."""
    lat = state.lattice if lattice is None else lattice
    z = lat.z
    h_cl = z * math.sqrt(max(lat.mu ** 2 - 1.0, 0.0))
    h_q = z * math.sqrt(max(state.mu_eff ** 2 - state.theta ** 2, 0.0))
    return h_cl, h_q, h_cl * (1.0 - state.D)


def staggered_magnetization(state: BulkState, S_tilde=None):
    """Ground-state staggered magnetization ``S~ (1 - D)``.

    In one dimension at ``mu~ = theta`` the on-site fluctuation grows like
    log L, so the order is destroyed and DivergentCorrelator is raised.
    """
    S = state.lattice.S_tilde if S_tilde is None else S_tilde
    if math.isinf(S):
        return math.inf
    if state.lattice.dim == 1 and abs(state.mu_eff - state.theta) <= 1e-12 * abs(state.theta):
        raise DivergentCorrelator(
            "isotropic one-dimensional lattice: <q^2> diverges logarithmically with L, "
            "no staggered order survives"
        )
    return S * (1.0 - state.D)


class BulkFourierModel:
    """One-dimensional bulk problem written as an explicit block-diagonal quadratic form.

    The L real modes are ordered as pairs ``(k, k+pi)`` with the field
    coupling each pair.  Used to run the bulk SCHA through the generic
    engine; the constant energy offset is not tracked.
    """

    def __init__(self, L, mu, S_tilde, h=0.0):
        self.lattice = BulkLattice(1, L, mu, h, S_tilde)
        k = self.lattice.k_axis()[: L // 2]
        g = np.cos(k)
        self.gamma = np.ravel(np.column_stack([g, -g]))
        z = self.lattice.z
        pair = np.kron(np.eye(L // 2), SIGMA1)
        self._bare = QuadraticHamiltonian(
            z * np.diag(mu + self.gamma) - h * pair,
            z * np.diag(mu - self.gamma) - h * pair,
            hbar_eff=self.lattice.hbar_eff,
        )

    def bare(self):
        return self._bare

    def D_pair(self, C):
        d = np.diag(C.Cqq)
        return float(np.mean(d)), float(np.mean(self.gamma * d))

    def delta_second_derivatives(self, C):
        D, Dp = self.D_pair(C)
        mu, z = self.lattice.mu, self.lattice.z
        shift = z * (Dp - mu * D)
        hop = z * (D - mu * Dp) * self.gamma
        return np.diag(shift - hop), np.diag(shift + hop)

    def energy_offset(self, C):
        return 0.0
