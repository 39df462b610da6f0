"""
Lattice geometry and the discrete half-Laplacian hopping kernel.

The kernel is the Fourier multiplier with symbol sqrt(h(k)) on Z^d,

    h(k) = 4 * sum_i sin^2(k_i)          (SymbolVariant.SIN2K, default)
    h(k) = 4 * sum_i sin^2(k_i / 2)      (SymbolVariant.HALF_ANGLE)

restricted to a finite box of L^d sites.  Two finite-volume conventions are
available:

* ``Boundary.PERIODIC_SYMBOL`` : circulant matrix, exactly diagonalised by the
  box DFT (eigenvalues are sqrt(h) on the L^d dual grid).
* ``Boundary.TRUNCATED_KERNEL`` : infinite-lattice coefficients T(n) computed
  on an oversampled M^d dual grid and hard-restricted to the box.  The
  aliasing error of a coefficient is sum_{p != 0} T(n + pM) = O(M^-(d+1)).

Sites are indexed row-major over the box, ``index = ravel_multi_index(x)``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum
from typing import NamedTuple

import numpy as np

# Coefficients smaller than this (relative to the largest) are FFT roundoff of
# exact zeros, e.g. odd displacements for SIN2K.
_ROUNDOFF_FLOOR = 1e-13


class Boundary(str, Enum):
    PERIODIC_SYMBOL = "periodic-symbol"
    TRUNCATED_KERNEL = "truncated-kernel"


class SymbolVariant(str, Enum):
    SIN2K = "sin2k"
    HALF_ANGLE = "half-angle"


@dataclass(frozen=True)
class LatticeSpec:
    """Finite box of ``L**d`` sites of Z^d.

    ``oversample`` is the dual-grid size M used by the truncated kernel; it
    defaults to ``8 * L`` and must be even and at least ``4 * L``.
    """

    d: int
    L: int
    boundary: Boundary = Boundary.TRUNCATED_KERNEL
    oversample: int | None = None

    def __post_init__(self):
        if int(self.d) != self.d or self.d < 1:
            raise ValueError(f"dimension must be a positive integer, got {self.d}")
        if int(self.L) != self.L or self.L < 1:
            raise ValueError(f"box size must be a positive integer, got {self.L}")
        object.__setattr__(self, "boundary", Boundary(self.boundary))
        if self.oversample is None:
            object.__setattr__(self, "oversample", 8 * self.L)
        M = self.oversample
        if M < 4 * self.L:
            raise ValueError(f"oversample M={M} < 4L={4 * self.L}: aliasing guarantee void")
        if M % 2:
            raise ValueError(f"oversample M={M} must be even")

    @property
    def shape(self) -> tuple[int, ...]:
        return (self.L,) * self.d

    @property
    def n_sites(self) -> int:
        return self.L**self.d

    def coords(self) -> np.ndarray:
        """Integer coordinates of all sites, shape (n_sites, d), row-major."""
        grids = np.indices(self.shape).reshape(self.d, -1)
        return grids.T.copy()

    def index(self, x) -> int:
        return int(np.ravel_multi_index(tuple(int(c) for c in x), self.shape))

    def site(self, index: int) -> tuple[int, ...]:
        return tuple(int(c) for c in np.unravel_index(index, self.shape))

    @property
    def center(self) -> int:
        """Index of the site at coordinates (L//2, ..., L//2)."""
        return self.index((self.L // 2,) * self.d)

    def distances(self, x0: int) -> np.ndarray:
        """Euclidean distance of every site from site ``x0``."""
        c = self.coords()
        return np.sqrt(np.sum((c - c[x0]) ** 2, axis=1))

    def with_size(self, L: int) -> "LatticeSpec":
        """Same lattice at box size ``L``, keeping the oversampling ratio."""
        M = max(4, self.oversample // self.L) * L
        return LatticeSpec(self.d, L, self.boundary, M + M % 2)


def symbol_h(k, variant: SymbolVariant | str = SymbolVariant.SIN2K) -> np.ndarray:
    """Symbol h(k) of the lattice Laplacian; the last axis of ``k`` holds the
    d components (a scalar or 1-D array is treated as d = 1)."""
    k = np.asarray(k, dtype=float)
    if k.ndim == 0:
        k = k[None]
    variant = SymbolVariant(variant)
    arg = k if variant is SymbolVariant.SIN2K else 0.5 * k
    return 4.0 * np.sum(np.sin(arg) ** 2, axis=-1)


def _dual_grid(d: int, n: int) -> np.ndarray:
    k1 = 2.0 * np.pi * np.arange(n) / n
    mesh = np.meshgrid(*([k1] * d), indexing="ij")
    return np.stack(mesh, axis=-1)


def _coefficients(d: int, n: int, variant: SymbolVariant) -> np.ndarray:
    """Displacement coefficients c[n] = (1/n^d) sum_k sqrt(h(k)) e^{ikn} on an
    n^d grid, exactly symmetric under n -> -n."""
    root = np.sqrt(symbol_h(_dual_grid(d, n), variant))
    c = np.fft.ifftn(root).real
    # c(n) and c(-n) agree mathematically; average them so T is exactly symmetric
    flipped = np.roll(np.flip(c), shift=1, axis=tuple(range(d)))
    c = 0.5 * (c + flipped)
    c[np.abs(c) < _ROUNDOFF_FLOOR * np.abs(c).max()] = 0.0
    return c


@dataclass(frozen=True)
class HoppingKernel:
    """Box matrix ``entries[x, x'] = T(x, x')`` of the half-Laplacian.

    ``c0`` is the fitted decay constant in |T(x, x')| <= c0 |x - x'|^-(d+1),
    taken over all off-diagonal box pairs (0 when there are none).
    """

    spec: LatticeSpec
    entries: np.ndarray
    variant: SymbolVariant = SymbolVariant.SIN2K
    c0: float = field(default=0.0)

    def __post_init__(self):
        e = np.array(self.entries, dtype=float)
        n = self.spec.n_sites
        if e.shape != (n, n):
            raise ValueError(f"kernel entries must be {n}x{n}, got {e.shape}")
        if not np.array_equal(e, e.T):
            raise ValueError("kernel entries must be exactly symmetric")
        e.setflags(write=False)
        object.__setattr__(self, "entries", e)
        object.__setattr__(self, "variant", SymbolVariant(self.variant))

    @classmethod
    def from_entries(cls, spec: LatticeSpec, entries, variant=SymbolVariant.SIN2K) -> "HoppingKernel":
        """Wrap an arbitrary symmetric matrix (test doubles, zero hopping)."""
        entries = np.asarray(entries, dtype=float)
        return cls(spec, entries, variant, _fit_decay_constant(spec, entries))

    @property
    def n(self) -> int:
        return self.spec.n_sites

    def displacement_value(self, n) -> float:
        """T at displacement ``n`` read from the box matrix (|n_i| < L)."""
        n = np.atleast_1d(np.asarray(n, dtype=int))
        x = np.where(n < 0, -n, 0)
        return float(self.entries[self.spec.index(x), self.spec.index(x + n)])

    def connected_sites(self, x0: int) -> np.ndarray:
        """Boolean mask of sites reachable from ``x0`` through nonzero hopping."""
        from scipy.sparse.csgraph import connected_components

        _, labels = connected_components(self.entries != 0.0, directed=False)
        return labels == labels[x0]


def _fit_decay_constant(spec: LatticeSpec, entries: np.ndarray) -> float:
    if spec.n_sites == 1:
        return 0.0
    c = spec.coords()
    dist = np.sqrt(np.sum((c[:, None, :] - c[None, :, :]) ** 2, axis=-1))
    off = dist > 0
    return float(np.max(np.abs(entries[off]) * dist[off] ** (spec.d + 1)))


def build_kernel(spec: LatticeSpec, variant: SymbolVariant | str = SymbolVariant.SIN2K) -> HoppingKernel:
    """Assemble the box matrix of (-Delta)^{1/2} in the convention of ``spec.boundary``."""
    variant = SymbolVariant(variant)
    n_grid = spec.L if spec.boundary is Boundary.PERIODIC_SYMBOL else spec.oversample
    coef = _coefficients(spec.d, n_grid, variant)
    c = spec.coords()
    disp = (c[:, None, :] - c[None, :, :]) % n_grid
    entries = coef[tuple(disp[..., i] for i in range(spec.d))]
    return HoppingKernel(spec, entries, variant, _fit_decay_constant(spec, entries))


class SNorm(NamedTuple):
    """Row s-sum of the kernel: box value, analytic tail bound, and their sum."""

    box: float
    tail: float
    total: float


def _shell_tail_bound(d: int, p: float, R: int) -> float:
    """Upper bound on sum_{n in Z^d, |n|_inf > R} |n|_2^-p for p > d.

    The shell |n|_inf = r holds at most 2d (2r+1)^(d-1) <= 2d 3^(d-1) r^(d-1)
    points, each with |n|_2 >= r; the radial sum is bounded by an integral.
    """
    pref = 2 * d * 3 ** (d - 1)
    q = p - d
    if R >= 1:
        return pref * R ** (-q) / q
    return pref * (1.0 + 1.0 / q)


def kernel_s_norm(kernel: HoppingKernel, s: float) -> SNorm:
    """Largest row sum of |T(x, x')|^s over the box, plus a tail bound.

    The tail bound covers every displacement missing from the maximising row
    (all n with |n|_inf beyond the row's distance to the box boundary),
    assuming the fitted decay |T(n)| <= c0 |n|^-(d+1).  It requires
    s > d/(d+1) for convergence.
    """
    d = kernel.spec.d
    if not 0.0 < s < 1.0:
        raise ValueError(f"s must lie in (0, 1), got {s}")
    if s <= d / (d + 1):
        raise ValueError(f"s={s} <= d/(d+1)={d / (d + 1):.4f}: the kernel s-sum diverges")
    rows = np.sum(np.abs(kernel.entries) ** s, axis=1)
    x_star = int(np.argmax(rows))
    box = float(rows[x_star])
    if kernel.c0 == 0.0:
        return SNorm(box, 0.0, box)
    pos = np.asarray(kernel.spec.site(x_star))
    R = int(np.min(np.minimum(pos, kernel.spec.L - 1 - pos)))
    tail = kernel.c0**s * _shell_tail_bound(d, s * (d + 1), R)
    return SNorm(box, tail, box + tail)


def box_dft(spec: LatticeSpec, v: np.ndarray) -> np.ndarray:
    """Unitary DFT of a box vector (row-major layout)."""
    return np.fft.fftn(np.reshape(v, spec.shape), norm="ortho").ravel()


def box_idft(spec: LatticeSpec, v: np.ndarray) -> np.ndarray:
    return np.fft.ifftn(np.reshape(v, spec.shape), norm="ortho").ravel()


def dual_symbol_values(spec: LatticeSpec, variant=SymbolVariant.SIN2K) -> np.ndarray:
    """sqrt(h(k)) over the L^d dual grid, same layout as ``box_dft`` output."""
    return np.sqrt(symbol_h(_dual_grid(spec.d, spec.L), variant)).ravel()


def plane_wave(spec: LatticeSpec, mode: int) -> np.ndarray:
    """Normalised plane wave e^{ik.x}/sqrt(N) for dual-grid index ``mode``."""
    kvec = _dual_grid(spec.d, spec.L).reshape(-1, spec.d)[mode]
    phase = spec.coords() @ kvec
    return np.exp(1j * phase) / np.sqrt(spec.n_sites)
