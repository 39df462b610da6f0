"""
Reproducible i.i.d. uniform[-1, 1] disorder.

Realization ``i`` of master seed ``m`` is drawn from a counter-based Philox
stream whose key is

    key = splitmix64(splitmix64(m) XOR i)          (all arithmetic mod 2^64)

so any realization can be generated directly, in any order, on any worker.
``splitmix64`` is the standard finaliser (Steele, Lea & Flood 2014):

    z += 0x9E3779B97F4A7C15
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9
    z = (z ^ (z >> 27)) * 0x94D049BB133111EB
    z ^= z >> 31
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .lattice import LatticeSpec

_MASK = (1 << 64) - 1


def splitmix64(z: int) -> int:
    z = (z + 0x9E3779B97F4A7C15) & _MASK
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK
    return z ^ (z >> 31)


def mix_seed(master_seed: int, realization_index: int) -> int:
    """64-bit stream key for one realization."""
    if realization_index < 0:
        raise ValueError("realization index must be nonnegative")
    return splitmix64(splitmix64(master_seed & _MASK) ^ (realization_index & _MASK))


def realization_rng(master_seed: int, realization_index: int) -> np.random.Generator:
    return np.random.Generator(np.random.Philox(key=mix_seed(master_seed, realization_index)))


@dataclass(frozen=True)
class DisorderField:
    spec: LatticeSpec
    values: np.ndarray
    master_seed: int | None = None
    realization_index: int | None = None

    def __post_init__(self):
        v = np.array(self.values, dtype=float).ravel()
        if v.size != self.spec.n_sites:
            raise ValueError(f"field has {v.size} values for {self.spec.n_sites} sites")
        if np.any(np.abs(v) > 1.0):
            raise ValueError("disorder values must lie in [-1, 1]")
        v.setflags(write=False)
        object.__setattr__(self, "values", v)

    @classmethod
    def constant(cls, spec: LatticeSpec, value: float = 0.0) -> "DisorderField":
        return cls(spec, np.full(spec.n_sites, float(value)))

    def sub_box(self, spec: LatticeSpec, offset) -> "DisorderField":
        """Restriction to a smaller box whose corner sits at ``offset``."""
        full = self.values.reshape(self.spec.shape)
        sl = tuple(slice(o, o + spec.L) for o in offset)
        return DisorderField(spec, full[sl].ravel(), self.master_seed, self.realization_index)


def sample_field(spec: LatticeSpec, master_seed: int, realization_index: int) -> DisorderField:
    rng = realization_rng(master_seed, realization_index)
    values = rng.uniform(-1.0, 1.0, size=spec.n_sites)
    return DisorderField(spec, values, master_seed, realization_index)


def field_pair_potential(field: DisorderField) -> np.ndarray:
    """W(x1, x2) = V(x1) + V(x2) on the product box, flattened row-major.

    Product-box index of (x1, x2) is ``i1 * N + i2`` with N = L^d, matching
    ``kron(A, I)`` acting on the first coordinate.
    """
    v = field.values
    return (v[:, None] + v[None, :]).ravel()
