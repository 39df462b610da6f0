import numpy as np
import pytest

import photoloc.diagnostics as dg
from photoloc.diagnostics import (
    POISSON_R,
    band_diagnostics,
    eigenstate_diagnostics,
    evolve,
    ipr,
    localization_length,
    measure_rabi_frequency,
    r_ratios,
    r_statistic,
)
from photoloc.disorder import DisorderField, sample_field
from photoloc.lattice import Boundary, LatticeSpec, build_kernel, dual_symbol_values
from photoloc.one_photon import ModelParams, build_H
from photoloc.two_photon import build_two_photon_H


# ------------------------------------------------------------ statics


def test_ipr_limits():
    assert ipr(np.eye(10)[3]) == 1.0
    assert ipr(np.ones(10) / np.sqrt(10)) == pytest.approx(0.1)


def test_exponential_envelope_fit():
    x = np.arange(60)
    psi = np.exp(-np.abs(x - 20) / 5.0)
    fit = localization_length(psi / np.linalg.norm(psi))
    assert fit.xi == pytest.approx(5.0, rel=1e-10)
    assert fit.r2 == pytest.approx(1.0) and fit.accepted


def test_flat_state_is_not_accepted():
    fit = localization_length(np.ones(20))
    assert not fit.accepted and fit.xi == np.inf
    assert not localization_length(np.eye(5)[0]).accepted


def test_r_ratio_oracles():
    rng = np.random.default_rng(0)
    poisson = np.cumsum(rng.exponential(size=200001))
    assert r_statistic(poisson) == pytest.approx(POISSON_R, abs=5e-3)
    assert r_statistic(np.arange(100.0)) == 1.0
    # GOE: the Wigner-like surmise gives 4 - 2 sqrt(3) ~ 0.536; large matrices ~ 0.5307
    a = rng.normal(size=(1000, 1000))
    w = np.linalg.eigvalsh(a + a.T)
    bulk = w[300:700]
    assert r_statistic(bulk) == pytest.approx(0.5307, abs=0.03)


def test_r_ratios_hand_case_and_minimum_gaps():
    assert np.allclose(r_ratios([0.0, 1.0, 3.0, 4.0]), [0.5, 0.5])
    with pytest.raises(ValueError):
        r_statistic(np.arange(50.0))
    r_statistic(np.arange(51.0))


def test_eigenstate_diagnostics_normalises_photon_block():
    v = np.zeros((4, 1))
    v[0, 0], v[2, 0] = 3.0, 4.0
    d = eigenstate_diagnostics([0.1], v, 2)
    assert d.ipr[0] == pytest.approx((9 / 25) ** 2 + (16 / 25) ** 2)
    w = np.zeros((4, 1))
    w[2, 0] = 1.0
    d2 = eigenstate_diagnostics([0.0], w, 2)
    assert np.isnan(d2.xi[0]) and not d2.fit_accepted[0]


# ----------------------------------------------------------- dynamics


def one_photon(L=16, seed=0, boundary=Boundary.TRUNCATED_KERNEL, zero_field=False, Omega=0.5):
    sp = LatticeSpec(1, L, boundary)
    k = build_kernel(sp)
    f = DisorderField.constant(sp, 0.0) if zero_field else sample_field(sp, seed, 0)
    return build_H(k, f, ModelParams(1.0, 1.0, Omega))


def test_evolution_starts_at_initial_state_and_conserves():
    H = one_photon()
    psi0 = np.zeros(32)
    psi0[8] = 1.0
    tr = evolve(H, psi0, [0.0, 0.5, 3.0, 20.0])
    assert tr.method == "eigh"
    assert tr.photon_probability[0] == 1.0 and tr.atom_probability[0] == 0.0
    assert tr.second_moment[0] == 0.0
    assert tr.norm_drift < 1e-12
    assert np.ptp(tr.energy) < 1e-12


def test_evolution_of_eigenvector_is_stationary():
    H = one_photon()
    w, v = np.linalg.eigh(H.matrix)
    tr = evolve(H, v[:, 5], [0.0, 7.0])
    assert tr.energy == pytest.approx([w[5], w[5]])
    assert tr.photon_probability[1] == pytest.approx(tr.photon_probability[0], abs=1e-12)


def test_nonsymmetric_paths_agree(monkeypatch):
    k = build_kernel(LatticeSpec(1, 3))
    H = build_two_photon_H(k, sample_field(k.spec, 1, 0), ModelParams(1.0, 1.0, 1.0))
    psi0 = np.zeros(18)
    psi0[4] = 1.0
    times = [0.0, 0.3, 1.0]
    a = evolve(H, psi0, times)
    monkeypatch.setattr(dg, "COND_LIMIT", 0.0)
    b = evolve(H, psi0, times)
    assert (a.method, b.method) == ("eig", "expm")
    assert np.allclose(a.photon_probability, b.photon_probability, atol=1e-10)
    assert np.allclose(a.second_moment, b.second_moment, atol=1e-9)


@pytest.mark.parametrize("mode", [0, 3, 5])
def test_rabi_frequency_closed_form(mode):
    H = one_photon(L=12, boundary=Boundary.PERIODIC_SYMBOL, zero_field=True, Omega=0.4)
    t = dual_symbol_values(H.kernel.spec)[mode]
    # 2 x 2 block [[t, w], [w, Omega]] with w^2 = g^2 rho0 oscillates at the level splitting
    want = np.sqrt((t - 0.4) ** 2 + 4.0)
    assert measure_rabi_frequency(H, mode) == pytest.approx(want, rel=1e-10)


def test_extended_states_without_disorder():
    L = 32
    H = one_photon(L=L, boundary=Boundary.PERIODIC_SYMBOL, zero_field=True)
    w, v = np.linalg.eigh(H.matrix)
    d = eigenstate_diagnostics(w, v, L)
    # each state spreads over the whole box, IPR of order 1/L
    assert np.max(d.ipr) < 6.0 / L


def test_band_diagnostics_pools_realizations():
    sp = LatticeSpec(1, 40)
    p = ModelParams(1.0, 1.0, 0.5)
    out = band_diagnostics(sp, p, (-10.0, 10.0), 3, 5, workers=1)
    assert out.n_states == 3 * 80
    assert out.n_ratios == 3 * 78
    assert 0.0 < out.r_mean < 1.0 and 0.0 < out.ipr_mean <= 1.0
    again = band_diagnostics(sp, p, (-10.0, 10.0), 3, 5, workers=2)
    assert again == out
    with pytest.raises(ValueError):
        band_diagnostics(sp, p, (0.49, 0.51), 1, 5, workers=1)
