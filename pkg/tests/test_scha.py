import math

import numpy as np
import pytest

from weylscha import (
    GapClosed,
    NoConvergence,
    QuadraticHamiltonian,
    SchaConfig,
    correlators,
    normal_form,
    scha_1d,
    scha_iterate,
    wick_average,
    wick_average_quartic,
)
from weylscha.bulk import BulkFourierModel, BulkLattice, scha_bulk


def quartic(lam):
    return (lambda q: 0.5 * q**2 + lam * q**4,
            lambda q: q + 4 * lam * q**3,
            lambda q: 1 + 12 * lam * q**2)


class QuarticOscillator:
    """p^2/2 + q^2/2 + lam q^4 written for the generic engine."""

    def __init__(self, lam, hbar=1.0):
        self.lam = lam
        self._bare = QuadraticHamiltonian([[1.0]], [[1.0]], hbar_eff=hbar)

    def bare(self):
        return self._bare

    def delta_second_derivatives(self, C):
        return np.zeros((1, 1)), 12 * self.lam * C.Cqq

    def energy_offset(self, C):
        c = C.Cqq[0, 0]
        return 3 * self.lam * c**2 - 6 * self.lam * c**2


class Frozen:
    def __init__(self, H):
        self.H = H

    def bare(self):
        return self.H

    def delta_second_derivatives(self, C):
        n = self.H.n_dof
        return np.zeros((n, n)), np.zeros((n, n))

    def energy_offset(self, C):
        return 0.0


def fock_ground_energy(lam, dim=100):
    pad = dim + 4
    a = np.diag(np.sqrt(np.arange(1, pad)), 1)
    q = (a + a.T) / math.sqrt(2)
    p2 = -((a - a.T) @ (a - a.T)) / 2
    H = 0.5 * p2 + 0.5 * q @ q + lam * np.linalg.matrix_power(q, 4)
    return float(np.linalg.eigvalsh(H[:dim, :dim])[0])


# 1-dof ---------------------------------------------------------------------

def test_harmonic_is_its_own_fixed_point():
    V, dV, d2V = quartic(0.0)
    r = scha_1d(V, dV, d2V)
    assert r.omega2 == pytest.approx(1.0, abs=1e-14)
    assert r.free_energy == pytest.approx(0.5, abs=1e-14)
    assert r.iterations == 1


def test_quartic_frequency_solves_cubic():
    # omega^2 = 1 + 12 lam / (2 omega)  =>  omega^3 - omega - 0.6 = 0 at lam = 0.1
    roots = np.roots([1.0, 0.0, -1.0, -0.6])
    omega = max(r.real for r in roots if abs(r.imag) < 1e-12)
    r = scha_1d(*quartic(0.1))
    assert math.sqrt(r.omega2) == pytest.approx(omega, abs=1e-9)
    assert r.q0 == pytest.approx(0.0, abs=1e-12)


def test_generic_engine_matches_1d_solver():
    for lam in (0.05, 0.5):
        st = scha_iterate(QuarticOscillator(lam), config=SchaConfig(tol=1e-13))
        r = scha_1d(*quartic(lam), config=SchaConfig(tol=1e-13))
        omega = float(st.basis.omega[0])
        assert omega**2 == pytest.approx(r.omega2, rel=1e-10)
        assert st.effective.w + 0.5 * omega == pytest.approx(r.free_energy, rel=1e-10)


@pytest.mark.parametrize("lam", [0.05, 0.1, 0.5])
def test_variational_bound(lam):
    r = scha_1d(*quartic(lam))
    e0 = fock_ground_energy(lam)
    assert abs(e0 - fock_ground_energy(lam, 120)) < 1e-9
    assert r.free_energy - e0 >= -1e-6
    assert r.free_energy - e0 < 0.02 * e0


def test_double_well_gap_closes_on_heating():
    V = lambda q: -q**2 / 2 + q**4 / 4
    dV = lambda q: -q + q**3
    d2V = lambda q: -1 + 3 * q**2
    cold = scha_1d(V, dV, d2V, beta=1e3, hbar_eff=0.1, q_init=1.0)
    assert 0.9 < cold.q0 < 1.0 and cold.omega2 > 1.5
    warm = scha_1d(V, dV, d2V, beta=1 / 0.16, hbar_eff=0.1, q_init=1.0)
    assert warm.q0 > 0.5
    for T in (0.17, 0.2):
        with pytest.raises(GapClosed):
            scha_1d(V, dV, d2V, beta=1 / T, hbar_eff=0.1, q_init=1.0)
    # far above the transition only the symmetric trial survives
    hot = scha_1d(V, dV, d2V, beta=2.0, hbar_eff=0.1, q_init=1.0)
    assert abs(hot.q0) < 1e-8


def test_classical_limit_scaling():
    # omega^2 - 1 is linear in hbar for the quartic oscillator
    shifts = []
    for hbar in (1e-2, 1e-3):
        r = scha_1d(*quartic(0.1), hbar_eff=hbar)
        shifts.append(r.omega2 - 1.0)
    assert shifts[0] / shifts[1] == pytest.approx(10.0, rel=1e-2)
    assert shifts[1] == pytest.approx(0.6e-3, rel=1e-2)


# engine --------------------------------------------------------------------

def test_zero_correction_converges_at_once(rng):
    from conftest import random_spd
    H = QuadraticHamiltonian(random_spd(rng, 4), random_spd(rng, 4))
    st = scha_iterate(Frozen(H))
    assert st.iterations == 1 and st.converged
    ref = correlators(H, normal_form(H))
    assert np.max(np.abs(st.correlators.Cqq - ref.Cqq)) < 1e-12
    assert np.max(np.abs(st.correlators.Cpp - ref.Cpp)) < 1e-12


def test_residual_decreases():
    st = scha_iterate(BulkFourierModel(64, 1.25, 5.0))
    hist = st.history[5:]
    assert all(b <= a * (1 + 1e-9) for a, b in zip(hist, hist[1:]))


def test_no_convergence_carries_state():
    with pytest.raises(NoConvergence) as info:
        scha_iterate(QuarticOscillator(0.5), config=SchaConfig(max_iter=2))
    assert info.value.last_state is not None
    assert info.value.last_state.iterations == 2


def test_config_validation():
    with pytest.raises(ValueError):
        SchaConfig(mixing=0.0)
    with pytest.raises(ValueError):
        SchaConfig(tol=-1)


def test_fourier_model_matches_bulk_solver():
    L, mu, S = 128, 1.25, 5.0
    st = scha_iterate(BulkFourierModel(L, mu, S), config=SchaConfig(tol=1e-13))
    D, Dp = BulkFourierModel(L, mu, S).D_pair(st.correlators)
    ref = scha_bulk(BulkLattice(1, L, mu, 0.0, S), SchaConfig(tol=1e-13))
    assert D == pytest.approx(ref.D, abs=1e-10)
    assert Dp == pytest.approx(ref.D_prime, abs=1e-10)


# Wick ----------------------------------------------------------------------

def _quadrature_moment(cov, powers, order=30):
    # two-variable Gaussian moment by Cholesky + tensor Gauss-Hermite
    x, w = np.polynomial.hermite_e.hermegauss(order)
    w = w / math.sqrt(2 * math.pi)
    L = np.linalg.cholesky(cov)
    X, Y = np.meshgrid(x, x, indexing="ij")
    u = L[0, 0] * X
    v = L[1, 0] * X + L[1, 1] * Y
    return float(np.sum(np.outer(w, w) * u ** powers[0] * v ** powers[1]))


def test_wick_single_variable():
    c = 0.37
    cov = [[c]]
    assert wick_average(cov, [0, 0, 0, 0]) == pytest.approx(3 * c * c, rel=1e-14)
    assert wick_average(cov, [0] * 6) == pytest.approx(15 * c**3, rel=1e-14)
    assert wick_average(cov, [0, 0, 0]) == 0.0


def test_wick_against_quadrature(rng):
    H = QuadraticHamiltonian([[1.3]], [[0.7]], X=[[0.4]])
    C = correlators(H, normal_form(H))
    cov = C.covariance()
    cpp, cqq, cpq = cov[0, 0], cov[1, 1], cov[0, 1]
    expected = cpp * 3 * cqq**2 + 12 * cpq**2 * cqq
    assert wick_average_quartic(C, "ppqqqq") == pytest.approx(expected, rel=1e-12)
    for powers in [(2, 4), (1, 3), (3, 3), (4, 0)]:
        mono = "p" * powers[0] + "q" * powers[1]
        assert wick_average_quartic(C, mono) == pytest.approx(
            _quadrature_moment(cov, powers), rel=1e-10, abs=1e-14)
    assert wick_average_quartic(C, "pqq") == 0.0


def test_wick_labels_multi_dof(rng):
    from conftest import random_spd
    H = QuadraticHamiltonian(random_spd(rng, 3), random_spd(rng, 3))
    C = correlators(H, normal_form(H))
    val = wick_average_quartic(C, [("q", 0), ("q", 1), ("p", 2), ("p", 2)])
    expected = C.Cqq[0, 1] * C.Cpp[2, 2] + 2 * C.Cpq[2, 0] * C.Cpq[2, 1]
    assert val == pytest.approx(expected, rel=1e-12)
    with pytest.raises(ValueError):
        wick_average_quartic(C, [("x", 0), ("q", 0)])
