import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from conftest import random_spd
from weylscha import (
    ConstraintViolated,
    NotPositiveDefinite,
    QuadraticHamiltonian,
    UnstableMode,
    UnstableSpectrum,
    correlators,
    normal_form,
    psd_sqrt,
    single_mode_bogoliubov,
    thermal_factors,
)
from weylscha.quadratic import sym_eigh


def test_bogoliubov_closed_form():
    assert single_mode_bogoliubov(5, 3) == pytest.approx(4, abs=1e-12)
    assert single_mode_bogoliubov(2.5, 0) == 2.5
    with pytest.raises(UnstableMode, match="omega0"):
        single_mode_bogoliubov(2, 2)


def test_bogoliubov_matches_phase_space_route():
    # omega0 (a'a + a a')/2 + gamma (a'a' + a a)/2 = (w0-g) p^2/2 + (w0+g) q^2/2
    w0, g = 3.0, -1.2
    H = QuadraticHamiltonian([[w0 - g]], [[w0 + g]])
    assert normal_form(H).omega[0] == pytest.approx(single_mode_bogoliubov(w0, g), rel=1e-14)


def test_psd_sqrt_examples(rng):
    A, Ai = psd_sqrt(np.eye(3))
    assert np.allclose(A, np.eye(3)) and np.allclose(Ai, np.eye(3))
    A, Ai = psd_sqrt(np.diag([4.0, 9.0]))
    assert np.allclose(A, np.diag([2, 3]), atol=1e-14)
    assert np.allclose(Ai, np.diag([0.5, 1 / 3]), atol=1e-14)
    M = random_spd(rng, 6)
    A, Ai = psd_sqrt(M)
    assert np.max(np.abs(A @ A - M)) < 1e-10
    assert np.max(np.abs(A @ Ai - np.eye(6))) < 1e-10


def test_psd_sqrt_reports_eigenvalue():
    with pytest.raises(NotPositiveDefinite) as info:
        psd_sqrt(np.diag([1.0, -0.25]))
    assert info.value.eigenvalue == pytest.approx(-0.25)


def test_sym_eigh_sign_convention(rng):
    w, v = sym_eigh(random_spd(rng, 5))
    assert np.all(np.diff(w) >= 0)
    for k in range(5):
        first = v[np.flatnonzero(np.abs(v[:, k]) > 1e-10)[0], k]
        assert first > 0


def test_single_oscillator():
    w = 1.7
    H = QuadraticHamiltonian([[1.0]], [[w * w]])
    b = normal_form(H)
    assert b.omega[0] == pytest.approx(w)
    C = correlators(H, b)
    assert C.Cqq[0, 0] == pytest.approx(1 / (2 * w))
    assert C.Cpp[0, 0] == pytest.approx(w / 2)


def afm_block(mu=1.25, g=0.75, hb=0.5):
    s3 = np.diag([1.0, -1.0])
    s1 = np.array([[0.0, 1.0], [1.0, 0.0]])
    return QuadraticHamiltonian(mu * np.eye(2) + g * s3 - hb * s1, mu * np.eye(2) - g * s3 - hb * s1)


def test_afm_block_frequencies_and_fluctuations():
    H = afm_block()
    b = normal_form(H)
    assert np.allclose(b.omega, [0.5, 1.5], atol=1e-12)
    C = correlators(H, b)
    # hbar = 1 here, so 2 S~ <qq> is 2 <qq>
    assert np.allclose(2 * C.Cqq, np.diag([2.0, 0.5]), atol=1e-12)


def random_hamiltonian(rng, n, with_x=False):
    A2 = random_spd(rng, n, cond=5)
    B2 = random_spd(rng, n, cond=5) + 2 * np.eye(n)
    X = None
    if with_x:
        # X = S A2^-1 with S symmetric makes X A2 symmetric
        S = rng.normal(size=(n, n)) * 0.2
        X = (S + S.T) @ np.linalg.inv(A2)
    return QuadraticHamiltonian(A2, B2, X)


def test_basis_invariants(rng):
    for n in (1, 3, 6):
        for with_x in (False, True):
            H = random_hamiltonian(rng, n, with_x)
            b = normal_form(H)
            assert np.max(np.abs(b.V @ H.A2 @ b.V.T - b.Lambda ** 2)) < 1e-10
            assert np.max(np.abs(b.F.T @ b.G - np.eye(n))) < 1e-10
            assert np.max(np.abs(b.O @ b.O.T - np.eye(n))) < 1e-10
            Ai2 = np.linalg.inv(H.A2)
            Bt = H.B2 - H.X.T @ Ai2 @ H.X
            rec = b.G.T @ Bt @ b.G
            assert np.max(np.abs(rec - b.Omega ** 2)) < 1e-9 * np.linalg.norm(Bt) * np.linalg.norm(H.A2)
            assert np.all(np.diff(b.omega) >= 0)


def test_spectrum_matches_direct_eigensolve(rng):
    # oracle: scipy-free dense eig of A2 B~ (same spectrum as A B~ A)
    H = random_hamiltonian(rng, 5, with_x=True)
    Bt = H.B2 - H.X.T @ np.linalg.inv(H.A2) @ H.X
    direct = np.sort(np.sqrt(np.linalg.eigvals(H.A2 @ Bt).real))
    assert np.allclose(normal_form(H).omega, direct, rtol=1e-9)


def test_constraint_violation_message():
    A2 = np.diag([1.0, 2.0])
    X = np.array([[0.0, 1.0], [0.0, 0.0]])
    with pytest.raises(ConstraintViolated, match="exchange"):
        normal_form(QuadraticHamiltonian(A2, np.eye(2) * 5, X))


def test_unstable_spectrum():
    with pytest.raises(UnstableSpectrum, match="negative"):
        normal_form(QuadraticHamiltonian(np.eye(2), np.diag([1.0, -1.0])))
    with pytest.raises(NotPositiveDefinite):
        normal_form(QuadraticHamiltonian(np.diag([1.0, 0.0]), np.eye(2)))


def test_asymmetric_input_rejected():
    with pytest.raises(ValueError, match="symmetric"):
        QuadraticHamiltonian([[1.0, 0.1], [0.0, 1.0]], np.eye(2))


def test_thermal_factors():
    assert np.allclose(thermal_factors([1.0, 2.0]), 0.5)
    w = 2 * math.atanh(0.5)
    assert thermal_factors([w], beta=1.0, hbar_eff=1.0)[0] == pytest.approx(1.0)
    hbar, beta, om = 1e-6, 2.0, np.array([0.5, 3.0])
    a = thermal_factors(om, beta, hbar)
    assert np.allclose(om * a, 1 / beta, rtol=1e-4)
    with pytest.raises(UnstableSpectrum):
        thermal_factors([0.0, 1.0])


def test_temperature_monotone_and_classical_limit(rng):
    H = random_hamiltonian(rng, 4)
    b = normal_form(H)
    diags = [np.diag(correlators(H, b, beta).Cqq) for beta in (math.inf, 10.0, 2.0, 0.5)]
    for lo, hi in zip(diags, diags[1:]):
        assert np.all(hi >= lo - 1e-15)
    Hc = QuadraticHamiltonian(H.A2, H.B2, hbar_eff=1e-6)
    C = correlators(Hc, normal_form(Hc), 0.8)
    # <p~^2> = w^2 <q~^2> = 1/beta per mode, i.e. Cqq = B2^-1 / beta
    assert np.allclose(C.Cqq * 0.8, np.linalg.inv(H.B2), rtol=1e-4)


@settings(max_examples=50, deadline=None)
@given(n=st.integers(1, 8), seed=st.integers(0, 2**32 - 1), hbar=st.floats(0.05, 3.0))
def test_heisenberg_product_property(n, seed, hbar):
    rng = np.random.default_rng(seed)
    H = QuadraticHamiltonian(random_spd(rng, n, 8), random_spd(rng, n, 8), hbar_eff=hbar)
    C = correlators(H, normal_form(H))
    assert np.max(np.abs(C.Cpp @ C.Cqq - hbar ** 2 / 4 * np.eye(n))) < 1e-10 * max(1, hbar ** 2)


def test_cross_term_correlators_against_transformed_problem(rng):
    # with X, the shift p -> p + A2^-1 X q removes the cross term; check <pq> relation
    H = random_hamiltonian(rng, 3, with_x=True)
    C = correlators(H, normal_form(H))
    Ai2 = np.linalg.inv(H.A2)
    # in equilibrium <p' q^t> = 0 for p' = p + A2^-1 X q
    assert np.max(np.abs(C.Cpq + Ai2 @ H.X @ C.Cqq)) < 1e-10
    cov = C.covariance()
    assert np.all(np.linalg.eigvalsh(cov) > 0)
