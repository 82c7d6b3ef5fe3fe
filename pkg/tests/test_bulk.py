import math

import numpy as np
import pytest

from weylscha import (
    DivergentCorrelator,
    GapClosed,
    SchaConfig,
    correlators,
    normal_form,
)
from weylscha.bulk import (
    BulkFourierModel,
    BulkLattice,
    bare_spectrum,
    block_hamiltonian,
    correlators_DDprime,
    gamma_k,
    h_sf,
    ha_instability_field,
    scha_bulk,
    staggered_magnetization,
)
from weylscha.scha import scha_iterate


def test_gamma_k_values():
    assert gamma_k([0.0, 0.0]) == pytest.approx(1.0)
    assert gamma_k([math.pi, math.pi]) == pytest.approx(-1.0)
    assert gamma_k([math.pi / 2]) == pytest.approx(0.0, abs=1e-15)
    k = np.array([[0.3, 1.1], [0.3 + math.pi, 1.1 + math.pi]])
    g = gamma_k(k)
    assert g[1] == pytest.approx(-g[0], abs=1e-15)


def test_lattice_validation():
    with pytest.raises(ValueError):
        BulkLattice(1, 7, 1.0)
    with pytest.raises(ValueError):
        BulkLattice(4, 8, 1.0)
    lat = BulkLattice(2, 8, 1.0)
    assert lat.gammas().shape == (64,)
    assert abs(lat.gammas()).max() < 1


def test_bare_spectrum_closed_form():
    lat = BulkLattice(1, 8, 1.25, h=0.5)
    wp, wm = bare_spectrum(lat, gammas=[1.0, 0.0])
    assert wp[0] == pytest.approx(2 * 0.75 + 0.5)
    assert wm[0] == pytest.approx(2 * 0.75 - 0.5)
    assert wp[1] == pytest.approx(2 * 1.25 + 0.5)


@pytest.mark.parametrize("dim", [1, 2])
def test_block_frequencies_match_normal_form(dim):
    lat = BulkLattice(dim, 32, 1.3, h=0.7)
    g = lat.gammas()[::37]
    wp, wm = bare_spectrum(lat, g)
    for gi, p, m in zip(g, wp, wm):
        basis = normal_form(block_hamiltonian(lat, gi))
        assert np.allclose(np.sort(basis.omega), [m, p], atol=1e-12)


@pytest.mark.parametrize("mu", [1.05, 1.25, 2.0])
@pytest.mark.parametrize("dim", [1, 2])
def test_ha_instability_field(mu, dim):
    lat = BulkLattice(dim, 8, mu)
    assert ha_instability_field(lat) == pytest.approx(2 * dim * math.sqrt(mu * mu - 1), abs=1e-8)


def test_correlators_field_independent():
    # route through the generic block normal form at two fields
    mu, S = 1.25, 1.0
    sums = []
    for h in (0.0, 0.5):
        lat = BulkLattice(1, 4096, mu, h=h, S_tilde=S)
        g = lat.gammas()[: lat.L // 2]
        tot = 0.0
        for gi in g[::64]:
            H = block_hamiltonian(lat, gi)
            C = correlators(H, normal_form(H))
            tot += np.trace(C.Cqq)
        sums.append(tot)
    assert sums[0] == pytest.approx(sums[1], abs=1e-12)
    D0 = correlators_DDprime(mu, 1.0, BulkLattice(1, 4096, mu, 0.0, S))
    D1 = correlators_DDprime(mu, 1.0, BulkLattice(1, 4096, mu, 0.5, S))
    assert D0 == pytest.approx(D1, abs=1e-14)


def test_block_and_sum_correlators_agree():
    lat = BulkLattice(1, 16, 1.25, h=0.3, S_tilde=2.0)
    g = lat.gammas()[: lat.L // 2]
    diag = []
    for gi in g:
        H = block_hamiltonian(lat, gi)
        diag.append(np.diag(correlators(H, normal_form(H)).Cqq))
    diag = np.array(diag)
    D, Dp = correlators_DDprime(1.25, 1.0, lat)
    assert np.mean(diag) == pytest.approx(D, rel=1e-12)
    assert 0.5 * np.mean(diag[:, 0] * g - diag[:, 1] * g) == pytest.approx(Dp, rel=1e-12)


def test_isotropic_benchmark_converges_to_one_over_pi():
    S = 1.0
    diffs = []
    for L in (512, 1024, 2048):
        D, Dp = correlators_DDprime(1.0, 1.0, BulkLattice(1, L, 1.0, S_tilde=S))
        diffs.append(D - Dp)
    # midpoint error is O(1/L^2)
    rich = (4 * diffs[2] - diffs[1]) / 3
    assert rich == pytest.approx(1 / (math.pi * S), abs=1e-6)
    assert abs(diffs[2] - 1 / math.pi) < abs(diffs[1] - 1 / math.pi)


def test_scha_bulk_classical_limit():
    st = scha_bulk(BulkLattice(1, 64, 1.25))
    assert (st.theta, st.mu_eff, st.D) == (1.0, 1.25, 0.0)
    big = scha_bulk(BulkLattice(1, 256, 1.25, S_tilde=1e6))
    assert big.theta == pytest.approx(1.0, abs=1e-5)
    assert big.mu_eff == pytest.approx(1.25, abs=1e-5)


def test_scha_bulk_fixed_point_is_consistent():
    lat = BulkLattice(2, 64, 1.25, S_tilde=1.0)
    st = scha_bulk(lat, SchaConfig(tol=1e-13))
    D, Dp = correlators_DDprime(st.mu_eff, st.theta, lat)
    assert D == pytest.approx(st.D, abs=1e-12)
    t, m = 1 - D + 1.25 * Dp, 1.25 * (1 - D) + Dp
    assert (st.theta, st.mu_eff) == pytest.approx((t, m), abs=1e-12)


def test_isotropic_stays_isotropic():
    st = scha_bulk(BulkLattice(1, 256, 1.0, S_tilde=1.0))
    assert st.theta == st.mu_eff
    assert 0 < st.theta < 1


def test_one_dimensional_spin_half_has_no_fixed_point():
    with pytest.raises(GapClosed):
        scha_bulk(BulkLattice(1, 512, 1.25, S_tilde=1.0))


def test_h_sf_orders():
    lat = BulkLattice(1, 1024, 1.25, S_tilde=5.5)
    h_cl, h_q, h_1 = h_sf(scha_bulk(lat))
    assert h_cl == pytest.approx(1.5)
    assert h_q < h_cl
    assert abs(h_q - h_1) / h_cl < 1e-2
    lat2 = BulkLattice(2, 128, 1.25, S_tilde=1.0)
    h_cl2, h_q2, _ = h_sf(scha_bulk(lat2))
    assert h_q2 < h_cl2


def test_finite_temperature_increases_fluctuations():
    lat = BulkLattice(2, 64, 1.25, h=0.2, S_tilde=2.0)
    D0, _ = correlators_DDprime(1.25, 1.0, lat)
    D1, _ = correlators_DDprime(1.25, 1.0, lat, beta=2.0)
    assert D1 > D0
    low = correlators_DDprime(1.25, 1.0, lat, beta=1e4)
    assert low[0] == pytest.approx(D0, rel=1e-12)


def test_staggered_magnetization():
    st = scha_bulk(BulkLattice(1, 256, 1.0, S_tilde=1.0))
    with pytest.raises(DivergentCorrelator):
        staggered_magnetization(st)
    # square lattice: zero-point reduction of the spin-wave moment
    vals = []
    for L in (128, 256):
        st2 = scha_bulk(BulkLattice(2, L, 1.0, S_tilde=1.0))
        vals.append(0.5 - staggered_magnetization(st2))
    assert vals[1] == pytest.approx(0.1966, abs=2e-3)
    assert abs(vals[1] - 0.1966) < abs(vals[0] - 0.1966)


def test_fourier_model_through_generic_engine():
    L, mu, S = 64, 1.25, 5.0
    model = BulkFourierModel(L, mu, S, h=0.3)
    st = scha_iterate(model, config=SchaConfig(tol=1e-13))
    D, Dp = model.D_pair(st.correlators)
    ref = scha_bulk(BulkLattice(1, L, mu, 0.3, S), SchaConfig(tol=1e-13))
    assert (D, Dp) == pytest.approx((ref.D, ref.D_prime), abs=1e-10)
