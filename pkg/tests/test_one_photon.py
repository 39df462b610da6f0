import numpy as np
import pytest

from photoloc.disorder import DisorderField, sample_field
from photoloc.errors import MuAtResonance, SpecMismatch
from photoloc.lattice import HoppingKernel, LatticeSpec, build_kernel
from photoloc.one_photon import (
    ModelParams,
    build_H,
    build_H_mu,
    check_lemma1,
    check_remark_resonance,
    fixed_point_scan,
    sigma_min,
    spectrum,
)


def zero_kernel(L=1):
    sp = LatticeSpec(1, L)
    return HoppingKernel.from_entries(sp, np.zeros((L, L)))


def test_single_site_closed_form():
    # [[0, w], [w, Omega]] has eigenvalues (Omega +- sqrt(Omega^2 + 4 w^2)) / 2
    k = zero_kernel()
    f = DisorderField(k.spec, [0.25])
    p = ModelParams(g=1.5, rho0=2.0, Omega=0.7)
    w2 = p.coupling * 1.25
    H = build_H(k, f, p)
    r = spectrum(H)
    disc = np.sqrt(p.Omega**2 + 4 * w2)
    assert np.allclose(r.eigenvalues, [(p.Omega - disc) / 2, (p.Omega + disc) / 2], atol=1e-14)
    assert r.symmetric and r.max_residual < 1e-14


def test_block_layout():
    k = build_kernel(LatticeSpec(1, 4))
    f = sample_field(k.spec, 3, 0)
    p = ModelParams(1.0, 2.0, 0.5)
    H = build_H(k, f, p).matrix
    assert np.array_equal(H[:4, :4], k.entries)
    assert np.allclose(np.diag(H[:4, 4:]), np.sqrt(2.0 * (1 + f.values)))
    assert np.array_equal(H[4:, 4:], 0.5 * np.eye(4))
    assert np.array_equal(H, H.T)


def test_effective_operator_diagonal():
    k = build_kernel(LatticeSpec(1, 5))
    f = sample_field(k.spec, 1, 2)
    p = ModelParams(1.0, 1.0, 2.0)
    Hm = build_H_mu(k, f, p, mu=1.0)
    assert Hm.disorder_strength == pytest.approx(-1.0)
    assert np.allclose(Hm.matrix - k.entries, np.diag(-(1 + f.values)))


def test_resonant_mu_rejected():
    k = zero_kernel()
    f = DisorderField.constant(k.spec, 0.0)
    with pytest.raises(MuAtResonance):
        build_H_mu(k, f, ModelParams(1, 1, 3.0), 3.0)


def test_mismatched_lattices_rejected():
    k = build_kernel(LatticeSpec(1, 4))
    f = DisorderField.constant(LatticeSpec(1, 5), 0.0)
    with pytest.raises(SpecMismatch):
        build_H(k, f, ModelParams(1, 1, 0))


def test_nonpositive_density_rejected():
    with pytest.raises(ValueError):
        ModelParams(1.0, 0.0, 0.0)


def test_spectrum_rejects_bad_input():
    with pytest.raises(ValueError):
        spectrum(np.zeros((2, 3)))
    with pytest.raises(ValueError):
        spectrum(np.array([[np.nan]]))


def test_general_solver_sorts_and_normalises():
    A = np.array([[0.0, -1.0], [1.0, 0.0]])
    r = spectrum(A)
    assert not r.symmetric
    assert np.allclose(r.eigenvalues, [-1j, 1j])
    assert np.allclose(np.linalg.norm(r.eigenvectors, axis=0), 1.0)


def test_sigma_min_paths_agree():
    A = np.random.default_rng(1).normal(size=(6, 6))
    A = A + A.T
    assert sigma_min(A, True) == pytest.approx(sigma_min(A, False), rel=1e-12)


@pytest.mark.parametrize("seed", range(4))
def test_eigenvalues_of_H_are_fixed_points(seed):
    k = build_kernel(LatticeSpec(1, 6))
    f = sample_field(k.spec, seed, 0)
    p = ModelParams(1.0, 1.0, 0.3)
    H = build_H(k, f, p)
    for E in np.linalg.eigvalsh(H.matrix):
        c = check_lemma1(H, E)
        assert c.sigma_H < 1e-12 * c.norm_H
        assert c.sigma_HE < 1e-10 * c.norm_HE
        assert c.lift_residual < 1e-10


def test_non_eigenvalue_is_invertible_for_both():
    k = build_kernel(LatticeSpec(1, 6))
    f = sample_field(k.spec, 0, 0)
    H = build_H(k, f, ModelParams(1.0, 1.0, 0.3))
    w = np.linalg.eigvalsh(H.matrix)
    E = 0.5 * (w[3] + w[4])
    c = check_lemma1(H, E)
    assert c.sigma_H > 1e-3 and c.sigma_HE > 1e-4


def test_fixed_point_scan_recovers_spectrum():
    k = build_kernel(LatticeSpec(1, 5))
    f = sample_field(k.spec, 4, 0)
    p = ModelParams(1.2, 1.0, 0.8)
    H = build_H(k, f, p)
    scan = fixed_point_scan(k, f, p)
    # one root per eigenvalue branch on each side of Omega
    assert scan.n_unbracketed == 0 and scan.n_brackets == 10
    assert np.allclose(scan.roots, np.linalg.eigvalsh(H.matrix), atol=1e-10)


def test_resonance_is_gapped_unless_a_site_decouples():
    k = build_kernel(LatticeSpec(1, 6))
    p = ModelParams(1.0, 1.0, 0.0)
    f = sample_field(k.spec, 0, 0)
    r = check_remark_resonance(build_H(k, f, p))
    assert r.distance > 1e-3 and not r.degenerate
    vals = np.array(f.values)
    vals[2] = -1.0
    r2 = check_remark_resonance(build_H(k, DisorderField(k.spec, vals), p))
    assert r2.degenerate and list(r2.degenerate_sites) == [2]
    assert r2.distance < 1e-12


def test_resonance_needs_coupling():
    k = zero_kernel()
    f = DisorderField.constant(k.spec, 0.0)
    with pytest.raises(ValueError):
        check_remark_resonance(build_H(k, f, ModelParams(0.0, 1.0, 0.0)))
