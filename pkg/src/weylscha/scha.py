"""Self-consistent harmonic approximation (SCHA).

A nonlinear Hamiltonian is replaced by the trial quadratic one whose
Gaussian averages of the second derivatives match those of the full
Hamiltonian.  The averages depend on the trial correlators, so the
conditions are solved by damped fixed-point iteration.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from typing import Callable, Protocol, Sequence

import numpy as np

from .errors import (
    GapClosed,
    NoConvergence,
    NotPositiveDefinite,
    NoStableWindow,
    UnstableSpectrum,
)
from .quadratic import (
    EPS_PD,
    CorrelatorSet,
    NormalModeBasis,
    QuadraticHamiltonian,
    correlators,
    normal_form,
)

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class SchaConfig:
    tol: float = 1e-10
    max_iter: int = 500
    mixing: float = 0.5
    gap_tol: float = 1e-6

    def __post_init__(self):
        if not self.tol > 0:
            raise ValueError("tol must be positive")
        if self.max_iter < 1:
            raise ValueError("max_iter must be >= 1")
        if not 0 < self.mixing <= 1:
            raise ValueError("mixing must lie in (0, 1]")


@dataclass
class SchaState:
    effective: QuadraticHamiltonian
    correlators: CorrelatorSet
    basis: NormalModeBasis
    gap: float
    iterations: int
    converged: bool
    residual: float
    history: list = field(default_factory=list)


class RenormalizableModel(Protocol):
    """What :func:`scha_iterate` needs from a model.

    ``delta_second_derivatives`` returns the Gaussian averages of the second
    derivatives of the non-quadratic part, i.e. the corrections to A2 and B2.
    A model may also define ``effective(dA2, dB2)`` to build the trial
    Hamiltonian itself; otherwise ``bare().shifted(dA2, dB2)`` is used.
    """

    def bare(self) -> QuadraticHamiltonian: ...

    def delta_second_derivatives(self, C: CorrelatorSet) -> tuple[np.ndarray, np.ndarray]: ...

    def energy_offset(self, C: CorrelatorSet) -> float: ...


def _trial(model, dA2, dB2):
    build = getattr(model, "effective", None)
    if build is not None:
        return build(dA2, dB2)
    return model.bare().shifted(dA2, dB2)


def scha_iterate(model: RenormalizableModel, beta=math.inf, config: SchaConfig = SchaConfig()) -> SchaState:
    """Iterate ``C -> correlators(bare + delta(C))`` to a fixed point.

    The corrections (dA2, dB2) are linearly mixed.  Convergence is declared
    when the max-norm change of ``<q q^t>`` between iterations is at most
    ``config.tol``.
    """
    H = model.bare()
    try:
        basis = normal_form(H)
    except (NotPositiveDefinite, UnstableSpectrum) as exc:
        raise GapClosed(f"bare Hamiltonian is unstable: {exc}") from exc
    C = correlators(H, basis, beta)
    state = SchaState(H, C, basis, basis.gap, 0, False, math.inf)
    dA2 = np.zeros_like(H.A2)
    dB2 = np.zeros_like(H.B2)
    m = config.mixing
    for it in range(1, config.max_iter + 1):
        tA2, tB2 = model.delta_second_derivatives(C)
        dA2 = (1 - m) * dA2 + m * np.asarray(tA2)
        dB2 = (1 - m) * dB2 + m * np.asarray(tB2)
        try:
            H = _trial(model, dA2, dB2)
            basis = normal_form(H)
        except (NotPositiveDefinite, UnstableSpectrum, NoStableWindow) as exc:
            raise GapClosed(
                f"trial Hamiltonian lost stability at iteration {it}: {exc}",
                last_state=state, context={"iteration": it},
            ) from exc
        scale = float(basis.omega[-1])
        if basis.gap < config.gap_tol * scale:
            raise GapClosed(
                f"spectrum gap {basis.gap:.3e} below {config.gap_tol:.0e} x {scale:.3e} "
                f"at iteration {it}",
                last_state=state, context={"iteration": it, "gap": basis.gap},
            )
        C_new = correlators(H, basis, beta)
        residual = float(np.max(np.abs(C_new.Cqq - C.Cqq)))
        C = C_new
        state = SchaState(H, C, basis, basis.gap, it, residual <= config.tol, residual,
                          state.history + [residual])
        if state.converged:
            w = model.energy_offset(C)
            state.effective = H.shifted(w=w)
            log.debug("SCHA converged in %d iterations (residual %.2e)", it, residual)
            return state
    raise NoConvergence(
        f"no fixed point after {config.max_iter} iterations (residual {state.residual:.3e})",
        last_state=state,
    )


def wick_average(cov, indices: Sequence[int]) -> float:
    """Gaussian average of ``prod_k x[indices[k]]`` for zero-mean x with covariance ``cov``.

    Sums the products of pair covariances over all perfect matchings; odd
    degree gives zero.
    """
    idx = list(indices)
    if len(idx) % 2:
        return 0.0
    if not idx:
        return 1.0
    first, rest = idx[0], idx[1:]
    total = 0.0
    for j, other in enumerate(rest):
        c = cov[first][other]
        if c != 0:
            total += c * wick_average(cov, rest[:j] + rest[j + 1:])
    return total


def wick_average_quartic(C: CorrelatorSet, monomial) -> float:
    """Wick average of a phase-space monomial.

    ``monomial`` is a sequence of labels ``("p", i)`` / ``("q", i)``, or for a
    single degree of freedom a string such as ``"ppqqqq"``.
    """
    n = C.n_dof
    labels = [(ch, 0) for ch in monomial] if isinstance(monomial, str) else list(monomial)
    pos = []
    for kind, i in labels:
        if kind not in ("p", "q"):
            raise ValueError(f"unknown variable {kind!r}")
        pos.append(i if kind == "p" else n + i)
    return wick_average(C.covariance(), pos)


@dataclass(frozen=True)
class Scha1DResult:
    """Self-consistent trial potential ``w + omega2 (q - q0)^2 / 2``."""

    omega2: float
    q0: float
    w: float
    free_energy: float
    fluctuation: float
    iterations: int


def gaussian_average(fn: Callable, center, variance, order=40):
    """``<fn(q)>`` for ``q ~ N(center, variance)`` by Gauss-Hermite quadrature."""
    x, wts = np.polynomial.hermite_e.hermegauss(order)
    vals = fn(center + math.sqrt(variance) * x)
    return float(np.dot(wts, vals) / math.sqrt(2 * math.pi))


def _fluctuation(omega2, beta, hbar):
    omega = math.sqrt(omega2)
    if math.isinf(beta):
        return 0.5 * hbar / omega
    return 0.5 * hbar / (omega * math.tanh(0.5 * beta * hbar * omega))


def _harmonic_free_energy(omega, beta, hbar):
    if math.isinf(beta):
        return 0.5 * hbar * omega
    x = 0.5 * beta * hbar * omega
    # log(2 sinh x) written to stay finite for large x
    return (x + math.log1p(-math.exp(-2 * x))) / beta


def scha_1d(V, dV, d2V, beta=math.inf, hbar_eff=1.0, config: SchaConfig = SchaConfig(),
            q_init=0.0) -> Scha1DResult:
    """SCHA for a unit-mass particle in the potential V.

    Solves ``<V''>_0 = omega^2`` and ``<V'>_0 = 0`` with the trial
    fluctuation ``(hbar/2 omega) coth(beta hbar omega / 2)``; ``w`` then
    follows from ``<V>_0 = w + omega^2 <(q-q0)^2>_0 / 2``.  The iteration
    starts at the classical minimum found from ``q_init``.
    """
    q0 = float(q_init)
    for _ in range(200):
        curv = d2V(q0)
        if curv <= 0:
            break
        step = dV(q0) / curv
        q0 -= step
        if abs(step) < 1e-15 * max(1.0, abs(q0)):
            break
    omega2 = float(d2V(q0))
    if omega2 <= EPS_PD:
        raise GapClosed(f"no harmonic minimum near q={q_init}: V''={omega2:.3e}")
    scale = omega2
    m = config.mixing
    for it in range(1, config.max_iter + 1):
        c = _fluctuation(omega2, beta, hbar_eff)
        new_omega2 = gaussian_average(d2V, q0, c)
        force = gaussian_average(dV, q0, c)
        if new_omega2 <= config.gap_tol * scale:
            raise GapClosed(
                f"renormalized omega^2 = {new_omega2:.3e} at iteration {it}: the "
                "potential cannot be fitted by a stable harmonic trial",
                context={"beta": beta, "omega2": omega2, "q0": q0},
            )
        new_q0 = q0 - force / new_omega2
        omega2_next = (1 - m) * omega2 + m * new_omega2
        q0_next = (1 - m) * q0 + m * new_q0
        c_next = _fluctuation(omega2_next, beta, hbar_eff)
        residual = max(abs(c_next - c), abs(q0_next - q0))
        omega2, q0 = omega2_next, q0_next
        if residual <= config.tol:
            c = _fluctuation(omega2, beta, hbar_eff)
            w = gaussian_average(V, q0, c) - 0.5 * omega2 * c
            free = w + _harmonic_free_energy(math.sqrt(omega2), beta, hbar_eff)
            return Scha1DResult(omega2, q0, w, free, c, it)
    raise NoConvergence(f"scha_1d did not converge in {config.max_iter} iterations")
