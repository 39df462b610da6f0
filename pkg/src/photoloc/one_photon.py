"""
One-photon Hamiltonian on l2 + l2 and its effective photon-sector family.

Block layout (photon amplitudes first, atomic amplitudes second)::

    H = [[ T          , S       ],
         [ S          , Omega I ]],   S = diag(sqrt(g^2 rho0 (1 + V)))

and for mu != Omega::

    H_mu = T + g^2 rho0 (1 + V) / (mu - Omega)

H has eigenvalue E != Omega exactly when E is an eigenvalue of H_E.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import NamedTuple

import numpy as np
import scipy.linalg as sla
from scipy.optimize import brentq

from .disorder import DisorderField
from .errors import MuAtResonance, SolverError, SpecMismatch
from .lattice import HoppingKernel


@dataclass(frozen=True)
class ModelParams:
    g: float
    rho0: float
    Omega: float

    def __post_init__(self):
        if self.rho0 <= 0:
            raise ValueError(f"background density must be positive, got {self.rho0}")

    @property
    def coupling(self) -> float:
        """g^2 rho0."""
        return self.g**2 * self.rho0

    @classmethod
    def from_coupling(cls, coupling: float, Omega: float, rho0: float = 1.0) -> "ModelParams":
        return cls(float(np.sqrt(coupling / rho0)), rho0, Omega)


def _check_mu(mu: float, Omega: float) -> None:
    if abs(mu - Omega) <= 1e-12 * max(1.0, abs(Omega)):
        raise MuAtResonance(f"mu={mu!r} is at the resonance Omega={Omega!r}")


@dataclass(frozen=True)
class OnePhotonOperator:
    matrix: np.ndarray
    kernel: HoppingKernel
    field: DisorderField
    params: ModelParams

    @property
    def n(self) -> int:
        return self.kernel.n

    @property
    def coupling(self) -> np.ndarray:
        """Diagonal of the off-diagonal blocks, sqrt(g^2 rho0 (1 + V))."""
        return np.sqrt(self.params.coupling * (1.0 + self.field.values))

    @property
    def degenerate_sites(self) -> np.ndarray:
        """Sites with V = -1 exactly, where photon and atom decouple."""
        return np.flatnonzero(self.coupling == 0.0)

    @property
    def symmetric(self) -> bool:
        return True


@dataclass(frozen=True)
class EffectiveOperator:
    matrix: np.ndarray
    mu: float
    kernel: HoppingKernel
    field: DisorderField
    params: ModelParams

    @property
    def disorder_strength(self) -> float:
        """lambda = g^2 rho0 / (mu - Omega), the prefactor of (1 + V)."""
        return self.params.coupling / (self.mu - self.params.Omega)

    @property
    def potential(self) -> np.ndarray:
        return self.disorder_strength * (1.0 + self.field.values)

    @property
    def symmetric(self) -> bool:
        return True


def _check_same_lattice(kernel: HoppingKernel, field: DisorderField) -> None:
    if kernel.spec != field.spec:
        raise SpecMismatch(f"kernel on {kernel.spec} but field on {field.spec}")


def build_H(kernel: HoppingKernel, field: DisorderField, params: ModelParams) -> OnePhotonOperator:
    _check_same_lattice(kernel, field)
    n = kernel.n
    w = np.sqrt(params.coupling * (1.0 + field.values))
    H = np.zeros((2 * n, 2 * n))
    H[:n, :n] = kernel.entries
    H[:n, n:] = np.diag(w)
    H[n:, :n] = np.diag(w)
    H[n:, n:] = params.Omega * np.eye(n)
    return OnePhotonOperator(H, kernel, field, params)


def build_H_mu(kernel: HoppingKernel, field: DisorderField, params: ModelParams, mu: float) -> EffectiveOperator:
    _check_same_lattice(kernel, field)
    _check_mu(mu, params.Omega)
    lam = params.coupling / (mu - params.Omega)
    H = np.array(kernel.entries, dtype=float)
    H[np.diag_indices_from(H)] += lam * (1.0 + field.values)
    return EffectiveOperator(H, float(mu), kernel, field, params)


@dataclass(frozen=True)
class SpectralResult:
    """Eigenpairs sorted by eigenvalue (real part, then imaginary part)."""

    eigenvalues: np.ndarray
    eigenvectors: np.ndarray
    residuals: np.ndarray
    symmetric: bool

    @property
    def max_residual(self) -> float:
        return float(np.max(self.residuals)) if self.residuals.size else 0.0


def _as_matrix(op) -> np.ndarray:
    return np.asarray(getattr(op, "matrix", op))


def spectrum(op) -> SpectralResult:
    """Full dense eigendecomposition with per-pair residual norms.

    Symmetric input goes through ``eigh``; anything else through the general
    solver, with eigenvectors normalised to unit 2-norm.
    """
    A = _as_matrix(op)
    if A.ndim != 2 or A.shape[0] != A.shape[1]:
        raise ValueError(f"expected a square matrix, got shape {A.shape}")
    if not np.all(np.isfinite(A)):
        raise ValueError("matrix has non-finite entries")
    symmetric = bool(getattr(op, "symmetric", np.array_equal(A, A.conj().T)))
    try:
        if symmetric:
            w, v = np.linalg.eigh(A)
        else:
            w, v = np.linalg.eig(A)
            order = np.lexsort((w.imag, w.real))
            w, v = w[order], v[:, order]
            v = v / np.linalg.norm(v, axis=0)
    except np.linalg.LinAlgError as exc:
        raise SolverError(f"eigensolver did not converge: {exc}") from exc
    residuals = np.linalg.norm(A @ v - v * w, axis=0)
    return SpectralResult(w, v, residuals, symmetric)


def sigma_min(A: np.ndarray, symmetric: bool | None = None) -> float:
    """Smallest singular value; through eigenvalues when ``A`` is symmetric."""
    if symmetric is None:
        symmetric = np.array_equal(A, A.T)
    if symmetric:
        return float(np.min(np.abs(np.linalg.eigvalsh(A))))
    return float(sla.svdvals(A)[-1])


def operator_norm(A: np.ndarray) -> float:
    return float(np.linalg.norm(A, 2))


class Lemma1Check(NamedTuple):
    """sigma_min(H - E) and sigma_min(H_E - E), both absolute, plus the norms
    needed to make them relative and the residual of the lifted eigenvector."""

    sigma_H: float
    sigma_HE: float
    norm_H: float
    norm_HE: float
    lift_residual: float


def check_lemma1(H: OnePhotonOperator, E: float) -> Lemma1Check:
    """Compare invertibility of H - E and H_E - E at one energy.

    The photon vector phi is the eigenvector of H_E closest to E; the atomic
    part is recovered from the second block row, alpha = w phi / (E - Omega),
    and the residual ||H (phi, alpha) - E (phi, alpha)|| / ||(phi, alpha)|| is
    returned as ``lift_residual``.
    """
    p = H.params
    _check_mu(E, p.Omega)
    HE = build_H_mu(H.kernel, H.field, p, E)
    n2 = H.matrix.shape[0]
    sH = sigma_min(H.matrix - E * np.eye(n2), symmetric=True)
    w, v = np.linalg.eigh(HE.matrix - E * np.eye(H.n))
    j = int(np.argmin(np.abs(w)))
    phi = v[:, j]
    alpha = H.coupling * phi / (E - p.Omega)
    Psi = np.concatenate([phi, alpha])
    lift = float(np.linalg.norm(H.matrix @ Psi - E * Psi) / np.linalg.norm(Psi))
    return Lemma1Check(sH, float(abs(w[j])), operator_norm(H.matrix), operator_norm(HE.matrix), lift)


class ResonanceCheck(NamedTuple):
    distance: float
    degenerate: bool
    degenerate_sites: np.ndarray


def check_remark_resonance(H: OnePhotonOperator) -> ResonanceCheck:
    """Distance from Omega to the spectrum of H.

    ``degenerate`` flags fields with V(x) = -1 somewhere; those sites carry a
    decoupled atom and put Omega in the spectrum.
    """
    if H.params.coupling <= 0:
        raise ValueError("the resonance check needs g^2 rho0 > 0")
    w = np.linalg.eigvalsh(H.matrix)
    deg = H.degenerate_sites
    return ResonanceCheck(float(np.min(np.abs(w - H.params.Omega))), bool(deg.size), deg)


class FixedPointScan(NamedTuple):
    """Solutions of lambda_i(H_mu) = mu on either side of Omega."""

    roots: np.ndarray
    n_brackets: int
    n_unbracketed: int


def fixed_point_scan(
    kernel: HoppingKernel,
    field: DisorderField,
    params: ModelParams,
    n_grid: int = 240,
    min_offset: float = 1e-11,
) -> FixedPointScan:
    """Locate the spectrum of H through the fixed points of mu -> lambda_i(H_mu).

    On each side of Omega every sorted eigenvalue lambda_i(H_mu) is continuous
    and nonincreasing in mu, so f_i(mu) = lambda_i(H_mu) - mu has at most one
    sign change.  Sign changes are bracketed on a geometric grid of offsets
    |mu - Omega| and refined by Brent's bracketing method.
    """
    Om = params.Omega
    n = kernel.n
    span = operator_norm(kernel.entries) + abs(Om) + 2.0 * np.sqrt(2.0 * params.coupling) + 1.0
    scale = max(1.0, abs(Om))
    offsets = np.geomspace(min_offset * scale, span, n_grid)

    def eigs(mu):
        return np.linalg.eigvalsh(build_H_mu(kernel, field, params, mu).matrix)

    roots = []
    n_brackets = 0
    n_missing = 0
    for side in (+1.0, -1.0):
        mus = Om + side * offsets
        lam = np.array([eigs(mu) for mu in mus])
        f = lam - mus[:, None]
        for i in range(n):
            sgn = np.sign(f[:, i])
            change = np.flatnonzero(sgn[:-1] * sgn[1:] < 0)
            if change.size == 0:
                n_missing += 1
                continue
            for c in change:
                n_brackets += 1
                a, b = mus[c], mus[c + 1]
                root = brentq(lambda m: eigs(m)[i] - m, a, b, xtol=1e-15 * scale, rtol=1e-15, maxiter=200)
                roots.append(root)
    return FixedPointScan(np.sort(np.array(roots)), n_brackets, n_missing)
