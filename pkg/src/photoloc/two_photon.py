"""
Two-photon Hamiltonian on l2(Z^{2d}) + l2(Z^{2d}).

With T2 = T (x) I + I (x) T on the product box and W(x1, x2) = V(x1) + V(x2)::

    H = [[ T2     , B                ],      B = diag((g rho0 / 2)(2 + W))
         [ 2 g I  , T2 / 2 + Omega I ]]

H is not symmetric.  Eliminating the first component from H (phi, psi) =
E (phi, psi) through the second block row, phi = (E - Omega - T2/2) psi / (2g),
gives the effective operator on psi::

    H_mu = -T2^2 / (2 (mu - Omega)) + c(mu) T2 / (2 (mu - Omega))
           + g^2 rho0 (2 + W) / (mu - Omega)

with c(mu) = 3 mu - 2 Omega.  ``Reduction.PAPER`` keeps the published
coefficient c(mu) = mu - 2 Omega, which does not satisfy the equivalence once
T2 != 0; it is retained only to demonstrate that.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum
from typing import NamedTuple

import numpy as np

from .disorder import DisorderField, field_pair_potential
from .errors import BudgetExceeded, MuAtResonance
from .lattice import HoppingKernel, kernel_s_norm
from .one_photon import ModelParams, _check_mu, _check_same_lattice, operator_norm

DENSE_BUDGET = 4096   # max dimension 2 * L^(2d) of the two-photon matrix


class Reduction(str, Enum):
    DERIVED = "derived"
    PAPER = "paper"


def linear_coefficient(mu: float, Omega: float, reduction: Reduction | str = Reduction.DERIVED) -> float:
    """c(mu) in the linear T2 term and in K_mu = T2 (c(mu) - T2)."""
    if Reduction(reduction) is Reduction.DERIVED:
        return 3.0 * mu - 2.0 * Omega
    return mu - 2.0 * Omega


def product_hopping(kernel: HoppingKernel) -> np.ndarray:
    """T2 = T (x) I + I (x) T, symmetric by construction."""
    T = kernel.entries
    eye = np.eye(kernel.n)
    return np.kron(T, eye) + np.kron(eye, T)


def exchange_permutation(n: int) -> np.ndarray:
    """Index map (x1, x2) -> (x2, x1) on the flattened product box."""
    i1, i2 = np.divmod(np.arange(n * n), n)
    return i2 * n + i1


@dataclass(frozen=True)
class TwoPhotonOperator:
    matrix: np.ndarray
    T2: np.ndarray
    kernel: HoppingKernel
    field: DisorderField
    params: ModelParams

    symmetric = False

    @property
    def m(self) -> int:
        """Product-box dimension L^(2d)."""
        return self.T2.shape[0]

    @property
    def W(self) -> np.ndarray:
        return field_pair_potential(self.field)


@dataclass(frozen=True)
class TwoPhotonEffective:
    matrix: np.ndarray
    mu: float
    reduction: Reduction

    symmetric = True


def build_two_photon_H(
    kernel: HoppingKernel, field: DisorderField, params: ModelParams, budget: int = DENSE_BUDGET
) -> TwoPhotonOperator:
    _check_same_lattice(kernel, field)
    m = kernel.n**2
    if 2 * m > budget:
        raise BudgetExceeded(f"two-photon matrix of size {2 * m} exceeds the dense budget {budget}")
    T2 = product_hopping(kernel)
    W = field_pair_potential(field)
    g, rho0, Om = params.g, params.rho0, params.Omega
    H = np.zeros((2 * m, 2 * m))
    H[:m, :m] = T2
    H[:m, m:] = np.diag(0.5 * g * rho0 * (2.0 + W))
    H[m:, :m] = 2.0 * g * np.eye(m)
    H[m:, m:] = 0.5 * T2 + Om * np.eye(m)
    return TwoPhotonOperator(H, T2, kernel, field, params)


def effective_matrix(T2: np.ndarray, W: np.ndarray, params: ModelParams, mu: float,
                     reduction: Reduction | str = Reduction.DERIVED) -> np.ndarray:
    _check_mu(mu, params.Omega)
    dm = mu - params.Omega
    c = linear_coefficient(mu, params.Omega, reduction)
    A = (-0.5 / dm) * (T2 @ T2) + (0.5 * c / dm) * T2
    A = 0.5 * (A + A.T)
    A[np.diag_indices_from(A)] += params.coupling * (2.0 + W) / dm
    return A


def build_two_photon_H_mu(kernel: HoppingKernel, field: DisorderField, params: ModelParams, mu: float,
                          reduction: Reduction | str = Reduction.DERIVED) -> TwoPhotonEffective:
    """Effective operator on the product box; T2^2 is the square of the
    restricted T2 (finite-volume convention)."""
    _check_same_lattice(kernel, field)
    A = effective_matrix(product_hopping(kernel), field_pair_potential(field), params, mu, reduction)
    return TwoPhotonEffective(A, float(mu), Reduction(reduction))


def exchange_commutator_norm(A: np.ndarray, n: int) -> float:
    """||A P - P A|| for the coordinate swap applied to each m x m block of A."""
    perm = exchange_permutation(n)
    m = n * n
    blocks = A.shape[0] // m
    full = np.concatenate([perm + b * m for b in range(blocks)])
    return float(np.linalg.norm(A[np.ix_(full, full)] - A))


def symmetric_subspace_basis(n: int) -> np.ndarray:
    """Orthonormal basis (m x n(n+1)/2) of exchange-symmetric product vectors."""
    cols = []
    for a in range(n):
        for b in range(a, n):
            v = np.zeros(n * n)
            v[a * n + b] += 1.0
            v[b * n + a] += 1.0
            cols.append(v / np.linalg.norm(v))
    return np.array(cols).T


class Lemma3Check(NamedTuple):
    E: float
    sigma_HE: float
    norm_HE: float
    reconstruction_residual: float

    @property
    def relative(self) -> float:
        return self.sigma_HE / self.norm_HE


def check_lemma3(H: TwoPhotonOperator, E: float, reduction: Reduction | str = Reduction.DERIVED) -> Lemma3Check:
    """sigma_min(H_E - E) for a real energy E, and the residual of the
    two-component vector rebuilt from the null vector psi of H_E - E via
    phi = (E - Omega - T2/2) psi / (2 g)."""
    p = H.params
    _check_mu(E, p.Omega)
    HE = effective_matrix(H.T2, H.W, p, E, reduction)
    w, v = np.linalg.eigh(HE - E * np.eye(H.m))
    j = int(np.argmin(np.abs(w)))
    psi = v[:, j]
    phi = ((E - p.Omega) * psi - 0.5 * (H.T2 @ psi)) / (2.0 * p.g)
    Psi = np.concatenate([phi, psi])
    res = float(np.linalg.norm(H.matrix @ Psi - E * Psi) / np.linalg.norm(Psi))
    return Lemma3Check(float(E), float(abs(w[j])), operator_norm(HE), res)


class Lemma3Sweep(NamedTuple):
    checks: list
    n_real: int
    n_nonreal: int
    n_skipped_resonant: int
    imag_tolerance: float

    @property
    def nonreal_fraction(self) -> float:
        return self.n_nonreal / (self.n_real + self.n_nonreal + self.n_skipped_resonant)

    @property
    def worst_relative(self) -> float:
        return max((c.relative for c in self.checks), default=0.0)


def lemma3_sweep(H: TwoPhotonOperator, reduction: Reduction | str = Reduction.DERIVED,
                 imag_rtol: float = 1e-8) -> Lemma3Sweep:
    """Run ``check_lemma3`` at every real-classified eigenvalue of H.

    Eigenvalues with |Im E| > imag_rtol * ||H|| are counted as nonreal and
    excluded.
    """
    ev = np.linalg.eigvals(H.matrix)
    tol = imag_rtol * operator_norm(H.matrix)
    real = ev[np.abs(ev.imag) <= tol].real
    Om = H.params.Omega
    resonant = np.abs(real - Om) <= 1e-12 * max(1.0, abs(Om))
    checks = [check_lemma3(H, float(E), reduction) for E in np.sort(real[~resonant])]
    return Lemma3Sweep(checks, int(real.size - resonant.sum()), int(ev.size - real.size),
                       int(resonant.sum()), float(tol))


@dataclass(frozen=True)
class KmuKernel:
    """K_mu = T2 (c(mu) - T2) with its row s-sums."""

    matrix: np.ndarray
    mu: float
    coefficient: float

    def row_s_sums(self, s: float) -> np.ndarray:
        return np.sum(np.abs(self.matrix) ** s, axis=1)


def kmu_kernel(T2: np.ndarray, params: ModelParams, mu: float,
               reduction: Reduction | str = Reduction.DERIVED) -> KmuKernel:
    c = linear_coefficient(mu, params.Omega, reduction)
    K = c * T2 - T2 @ T2
    return KmuKernel(0.5 * (K + K.T), float(mu), float(c))


class KmuConstants(NamedTuple):
    """Row s-sum constants of T2 (C1) and T2^2 (C2) on the product box.

    ``c1_tail_bound`` bounds the part of the infinite-lattice C1 missing from
    the box (each coordinate contributes a one-dimensional kernel tail); no
    analytic bound is available for C2.
    """

    C1: float
    C2: float
    c1_tail_bound: float
    L: int


def kmu_constants(kernel, s: float) -> KmuConstants:
    """C1 = max_x sum_x' |T2(x, x')|^s and C2 = max_x sum_x' |T2^2(x, x')|^s.

    ``kernel`` is the one-box ``HoppingKernel`` (T2 is formed on its product
    box) or an explicit T2 matrix.
    """
    if isinstance(kernel, HoppingKernel):
        d = kernel.spec.d
        if not d / (d + 1) < s < 1.0:
            raise ValueError(f"s must lie in ({d / (d + 1):.4f}, 1), got {s}")
        T2 = product_hopping(kernel)
        tail = 2.0 * kernel_s_norm(kernel, s).tail
        L = kernel.spec.L
    else:
        if not 0.0 < s < 1.0:
            raise ValueError(f"s must lie in (0, 1), got {s}")
        T2 = np.asarray(kernel, dtype=float)
        tail = 0.0
        L = 0
    C1 = float(np.max(np.sum(np.abs(T2) ** s, axis=1)))
    C2 = float(np.max(np.sum(np.abs(T2 @ T2) ** s, axis=1)))
    return KmuConstants(C1, C2, tail, L)


class TwoPhotonBand(NamedTuple):
    K_threshold: float
    R: float
    band: tuple[float, float] | None
    center: float
    excluded: float

    @property
    def exists(self) -> bool:
        return self.band is not None


def two_photon_band(params: ModelParams, s: float, C1: float, C2: float, kappa: float | None = None,
                    reduction: Reduction | str = Reduction.DERIVED) -> TwoPhotonBand:
    """Coupling threshold and localization window of the effective family.

    The contraction condition |c(mu)|^s C1 + C2 < (2 g^2 rho0 kappa)^s gives

        K = C2^(1/s) / (2 kappa),   R = [((2 g^2 rho0 kappa)^s - C2) / C1]^(1/s)

    and the window |c(mu)| < R.  ``kappa=None`` drops the decoupling constant
    (kappa = 1), the form in which the threshold is usually quoted.  For the
    published reduction c = mu - 2 Omega the window is (2 Omega - R,
    2 Omega + R); for the derived one c = 3 mu - 2 Omega it is centred at
    2 Omega / 3 with half-width R / 3.  mu = Omega is excluded in both.
    """
    kap = 1.0 if kappa is None else float(kappa)
    K = C2 ** (1.0 / s) / (2.0 * kap)
    gap = (2.0 * params.coupling * kap) ** s - C2
    if Reduction(reduction) is Reduction.DERIVED:
        center, scale = 2.0 * params.Omega / 3.0, 1.0 / 3.0
    else:
        center, scale = 2.0 * params.Omega, 1.0
    if gap < 0.0 or C1 <= 0.0:
        return TwoPhotonBand(K, 0.0, None, center, params.Omega)
    R = (gap / C1) ** (1.0 / s)
    half = scale * R
    return TwoPhotonBand(K, R, (center - half, center + half), center, params.Omega)


def two_photon_greens_residual(H_mu: TwoPhotonEffective, T2: np.ndarray, W: np.ndarray, params: ModelParams,
                               x0: int, E: complex, reduction=Reduction.DERIVED) -> float:
    """max_{x != x0} |2 (mu - Omega) [(H_mu - E) G](x)| / ||G|| for the
    finite-volume Green's vector G of H_mu, written through K_mu::

        (4 g^2 rho0 + 2 g^2 rho0 W - 2 E (mu - Omega)) G + K_mu G = 0 off x0.
    """
    mu = H_mu.mu
    m = T2.shape[0]
    delta = np.zeros(m)
    delta[x0] = 1.0
    G = np.linalg.solve(H_mu.matrix - E * np.eye(m), delta)
    K = kmu_kernel(T2, params, mu, reduction).matrix
    local = 4.0 * params.coupling + 2.0 * params.coupling * W - 2.0 * E * (mu - params.Omega)
    r = local * G + K @ G
    r[x0] = 0.0
    return float(np.max(np.abs(r)) / np.linalg.norm(G))


__all__ = [
    "MuAtResonance", "Reduction", "TwoPhotonOperator", "TwoPhotonEffective", "KmuKernel",
    "build_two_photon_H", "build_two_photon_H_mu", "check_lemma3", "lemma3_sweep", "kmu_kernel",
    "kmu_constants", "two_photon_band", "exchange_commutator_norm", "symmetric_subspace_basis",
    "product_hopping", "linear_coefficient", "two_photon_greens_residual",
]
