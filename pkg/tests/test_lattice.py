import numpy as np
import pytest

from photoloc.lattice import (
    Boundary,
    HoppingKernel,
    LatticeSpec,
    SymbolVariant,
    box_dft,
    box_idft,
    build_kernel,
    dual_symbol_values,
    kernel_s_norm,
    plane_wave,
    symbol_h,
)


def exact_sin2k(n):
    """Fourier coefficients of 2|sin k|: 4/pi at 0, zero at odd n,
    -(4/pi)/(4m^2 - 1) at n = 2m."""
    n = abs(n)
    if n % 2:
        return 0.0
    m = n // 2
    return -(4.0 / np.pi) / (4 * m * m - 1)


def exact_half_angle(n):
    """Fourier coefficients of 2|sin(k/2)|."""
    return -(4.0 / np.pi) / (4 * n * n - 1)


# ------------------------------------------------------------------ spec


def test_spec_defaults_and_validation():
    sp = LatticeSpec(2, 5)
    assert sp.oversample == 40
    assert sp.n_sites == 25
    assert sp.shape == (5, 5)
    with pytest.raises(ValueError):
        LatticeSpec(1, 8, oversample=30)
    with pytest.raises(ValueError):
        LatticeSpec(1, 8, oversample=33)
    with pytest.raises(ValueError):
        LatticeSpec(0, 8)


def test_index_roundtrip_row_major():
    sp = LatticeSpec(3, 4)
    for i in range(sp.n_sites):
        assert sp.index(sp.site(i)) == i
    assert sp.index((0, 0, 1)) == 1
    assert sp.index((1, 0, 0)) == 16
    assert np.array_equal(sp.coords()[7], sp.site(7))


def test_with_size_keeps_ratio():
    sp = LatticeSpec(1, 10, oversample=60)
    big = sp.with_size(20)
    assert big.L == 20 and big.oversample == 120 and big.boundary is sp.boundary


def test_center_and_distances():
    sp = LatticeSpec(2, 5)
    assert sp.site(sp.center) == (2, 2)
    d = sp.distances(sp.center)
    assert d[sp.index((2, 4))] == 2.0
    assert np.isclose(d[sp.index((0, 0))], np.sqrt(8))


# ---------------------------------------------------------------- symbol


def test_symbol_values():
    assert np.isclose(symbol_h(np.pi / 2), 4.0)
    assert np.isclose(symbol_h(np.pi / 2, "half-angle"), 2.0)
    assert np.isclose(symbol_h([np.pi / 2, np.pi / 4]), 6.0)
    assert symbol_h(0.0) == 0.0


# ---------------------------------------------------------------- kernel


@pytest.mark.parametrize("n", range(0, 12))
def test_sin2k_coefficients_match_closed_form(n):
    sp = LatticeSpec(1, 64)
    k = build_kernel(sp)
    M = sp.oversample
    # aliasing of the n^-2 tail leaves an O(M^-2) error
    assert abs(k.displacement_value(n) - exact_sin2k(n)) < 5.0 / M**2


@pytest.mark.parametrize("n", range(0, 8))
def test_half_angle_coefficients_match_closed_form(n):
    sp = LatticeSpec(1, 32, oversample=1024)
    k = build_kernel(sp, SymbolVariant.HALF_ANGLE)
    assert abs(k.displacement_value(n) - exact_half_angle(n)) < 5.0 / 1024**2


def test_odd_displacements_vanish_exactly_for_sin2k():
    k = build_kernel(LatticeSpec(1, 16))
    for n in range(1, 16, 2):
        assert k.displacement_value(n) == 0.0


def test_aliasing_converges_at_second_order():
    vals = [build_kernel(LatticeSpec(1, 8, oversample=M)).displacement_value(2) for M in (64, 128, 256)]
    e1 = abs(vals[0] - exact_sin2k(2))
    e2 = abs(vals[1] - exact_sin2k(2))
    assert 3.0 < e1 / e2 < 5.0


def test_kernel_is_exactly_symmetric_and_translation_invariant():
    k = build_kernel(LatticeSpec(2, 6))
    T = k.entries
    assert np.array_equal(T, T.T)
    sp = k.spec
    a, b = sp.index((1, 1)), sp.index((2, 3))
    c, d = sp.index((3, 2)), sp.index((4, 4))
    assert T[a, b] == pytest.approx(T[c, d], abs=1e-15)


def test_entries_are_read_only():
    k = build_kernel(LatticeSpec(1, 4))
    with pytest.raises(ValueError):
        k.entries[0, 0] = 1.0


def test_asymmetric_entries_rejected():
    sp = LatticeSpec(1, 2)
    with pytest.raises(ValueError):
        HoppingKernel.from_entries(sp, [[0.0, 1.0], [0.5, 0.0]])


def test_decay_constant_d1():
    # largest |T(n)| n^2 is attained at n = 2: (4/pi)(1/3)(4) = 16/(3 pi)
    sp = LatticeSpec(1, 32)
    k = build_kernel(sp)
    # n^2 times the per-coefficient aliasing error
    assert abs(k.c0 - 16.0 / (3.0 * np.pi)) < 4 * 5.0 / sp.oversample**2


@pytest.mark.parametrize("L", [4, 7, 10])
def test_periodic_kernel_spectrum_is_the_symbol(L):
    sp = LatticeSpec(1, L, Boundary.PERIODIC_SYMBOL)
    k = build_kernel(sp)
    w = np.linalg.eigvalsh(k.entries)
    assert np.allclose(np.sort(w), np.sort(dual_symbol_values(sp)), atol=1e-12)


def test_periodic_kernel_spectrum_d2():
    sp = LatticeSpec(2, 5, Boundary.PERIODIC_SYMBOL)
    k = build_kernel(sp, "half-angle")
    w = np.linalg.eigvalsh(k.entries)
    assert np.allclose(np.sort(w), np.sort(dual_symbol_values(sp, "half-angle")), atol=1e-12)


def test_plane_waves_diagonalise_periodic_kernel():
    sp = LatticeSpec(1, 9, Boundary.PERIODIC_SYMBOL)
    k = build_kernel(sp)
    t = dual_symbol_values(sp)
    for mode in range(9):
        v = plane_wave(sp, mode)
        assert np.allclose(k.entries @ v, t[mode] * v, atol=1e-12)


def test_box_dft_is_unitary():
    sp = LatticeSpec(2, 4)
    v = np.random.default_rng(0).normal(size=16)
    f = box_dft(sp, v)
    assert np.isclose(np.linalg.norm(f), np.linalg.norm(v))
    assert np.allclose(box_idft(sp, f), v)


def test_connected_sites_sublattice():
    k = build_kernel(LatticeSpec(1, 10))
    mask = k.connected_sites(4)
    assert np.array_equal(np.flatnonzero(mask), [0, 2, 4, 6, 8])
    k2 = build_kernel(LatticeSpec(1, 10), "half-angle")
    assert k2.connected_sites(4).all()


# ---------------------------------------------------------------- s-norm


def test_s_norm_rejects_divergent_exponents():
    k = build_kernel(LatticeSpec(1, 8))
    with pytest.raises(ValueError):
        kernel_s_norm(k, 0.5)
    with pytest.raises(ValueError):
        kernel_s_norm(k, 1.0)
    with pytest.raises(ValueError):
        kernel_s_norm(build_kernel(LatticeSpec(2, 4)), 0.6)


def test_s_norm_box_value_is_max_row_sum():
    k = build_kernel(LatticeSpec(1, 12))
    s = 0.8
    brute = max(sum(abs(k.entries[i, j]) ** s for j in range(12)) for i in range(12))
    assert kernel_s_norm(k, s).box == pytest.approx(brute, rel=1e-13)


@pytest.mark.parametrize("s", [0.7, 0.9])
def test_tail_bound_covers_larger_boxes(s):
    """Box sum plus tail bound at small L dominates the row sum at much larger L."""
    small = kernel_s_norm(build_kernel(LatticeSpec(1, 16)), s)
    big = build_kernel(LatticeSpec(1, 512))
    row = np.sum(np.abs(big.entries[256]) ** s)
    assert small.total >= row
    assert small.total == pytest.approx(small.box + small.tail)


def test_zero_kernel_has_no_tail():
    sp = LatticeSpec(1, 3)
    k = HoppingKernel.from_entries(sp, np.zeros((3, 3)))
    n = kernel_s_norm(k, 0.9)
    assert n.box == 0.0 and n.tail == 0.0


def test_decay_bound_holds_on_every_entry():
    k = build_kernel(LatticeSpec(1, 201))
    n = np.abs(np.arange(201) - 100)
    row = k.entries[100]
    assert np.all(np.abs(row[n > 0]) * n[n > 0] ** 2 <= k.c0)


@pytest.mark.parametrize("s", [0.7, 0.9])
def test_s_norm_against_direct_sum_on_a_tenfold_box(s):
    small = kernel_s_norm(build_kernel(LatticeSpec(1, 201)), s)
    big = kernel_s_norm(build_kernel(LatticeSpec(1, 2001)), s)
    assert abs(small.box - big.box) <= small.tail


def test_doubling_change_within_smaller_tail():
    a = kernel_s_norm(build_kernel(LatticeSpec(1, 101)), 0.9)
    b = kernel_s_norm(build_kernel(LatticeSpec(1, 201)), 0.9)
    assert abs(b.box - a.box) <= a.tail
