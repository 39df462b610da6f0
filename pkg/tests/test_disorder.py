import numpy as np
import pytest

from photoloc.disorder import (
    DisorderField,
    field_pair_potential,
    mix_seed,
    realization_rng,
    sample_field,
    splitmix64,
)
from photoloc.lattice import LatticeSpec


def test_splitmix64_reference_vector():
    # first outputs of the reference generator started from state 0
    state = 0
    outs = []
    for _ in range(3):
        outs.append(splitmix64(state))
        state = (state + 0x9E3779B97F4A7C15) & ((1 << 64) - 1)
    assert outs == [0xE220A8397B1DCDAF, 0x6E789E6AA1B965F4, 0x06C45D188009454F]


def test_mix_seed_distinguishes_indices_and_masters():
    keys = {mix_seed(m, i) for m in range(4) for i in range(64)}
    assert len(keys) == 256
    with pytest.raises(ValueError):
        mix_seed(0, -1)


def test_realizations_are_order_independent():
    sp = LatticeSpec(1, 16)
    forward = [sample_field(sp, 7, i).values for i in range(5)]
    backward = [sample_field(sp, 7, i).values for i in reversed(range(5))][::-1]
    for a, b in zip(forward, backward):
        assert np.array_equal(a, b)


def test_field_values_uniform_on_interval():
    sp = LatticeSpec(1, 20000)
    v = sample_field(sp, 1, 0).values
    assert v.min() >= -1.0 and v.max() <= 1.0
    assert abs(v.mean()) < 0.02
    assert v.var() == pytest.approx(1.0 / 3.0, abs=0.01)


def test_streams_are_philox():
    g = realization_rng(3, 2)
    assert isinstance(g.bit_generator, np.random.Philox)


def test_field_validation():
    sp = LatticeSpec(1, 3)
    with pytest.raises(ValueError):
        DisorderField(sp, [0.0, 1.5, 0.0])
    with pytest.raises(ValueError):
        DisorderField(sp, [0.0, 0.0])
    f = DisorderField.constant(sp, -1.0)
    assert np.array_equal(f.values, [-1.0, -1.0, -1.0])
    with pytest.raises(ValueError):
        f.values[0] = 0.0


def test_sub_box_is_a_restriction():
    big = LatticeSpec(2, 6)
    small = LatticeSpec(2, 3)
    f = sample_field(big, 5, 1)
    sub = f.sub_box(small, (1, 2))
    full = f.values.reshape(6, 6)
    assert np.array_equal(sub.values.reshape(3, 3), full[1:4, 2:5])
    assert sub.master_seed == 5 and sub.realization_index == 1


def test_pair_potential_layout_matches_kron():
    sp = LatticeSpec(1, 4)
    f = sample_field(sp, 0, 0)
    v = f.values
    W = field_pair_potential(f)
    expected = np.kron(v, np.ones(4)) + np.kron(np.ones(4), v)
    assert np.array_equal(W, expected)


def test_neighbouring_realizations_uncorrelated():
    sp = LatticeSpec(1, 40000)
    a = sample_field(sp, 7, 0).values
    b = sample_field(sp, 7, 1).values
    assert abs(np.corrcoef(a, b)[0, 1]) < 4.0 / np.sqrt(sp.n_sites)


def test_pair_potential_identities():
    sp = LatticeSpec(1, 9)
    f = sample_field(sp, 2, 3)
    W = field_pair_potential(f).reshape(9, 9)
    assert np.array_equal(W, W.T)
    assert np.array_equal(np.diag(W), 2 * f.values)
    assert np.max(np.abs(W)) <= 2.0
