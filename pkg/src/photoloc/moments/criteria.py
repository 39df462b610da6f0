"""
Closed-form bounds and localization criteria for the one-photon family.

With lambda(mu) = g^2 rho0 / (mu - Omega) and eta(mu, E) = E / lambda - 1 the
localization criterion reads

    crit(mu, E) = C_s [ |lambda| theta_s(|eta|) ]^-s < 1,

and Theorem-1 style predictions evaluate it on the diagonal mu = E.
"""

from __future__ import annotations

from typing import Callable, NamedTuple

import numpy as np

from ..errors import ScanFailure
from ..one_photon import ModelParams, _check_mu

ThetaLike = Callable[[float], float]


def apriori_A(params: ModelParams, E: float) -> float:
    """A = 4 sqrt(2) |E - Omega| / (g^2 rho0)."""
    if params.coupling <= 0:
        raise ValueError("the a-priori bound needs g^2 rho0 > 0")
    return 4.0 * np.sqrt(2.0) * abs(E - params.Omega) / params.coupling


def Ds_from_A(A: float, s: float) -> float:
    """int_0^inf min(1, A t^(-1/s)) dt = A^s / (1 - s)."""
    if not 0.0 < s < 1.0:
        raise ValueError(f"s must lie in (0, 1), got {s}")
    if A < 0:
        raise ValueError("A must be nonnegative")
    return A**s / (1.0 - s)


def apriori_Ds(params: ModelParams, E: float, s: float) -> float:
    """Uniform bound D_s on E|G(x, x)|^s from the tail bound."""
    return Ds_from_A(apriori_A(params, E), s)


def criterion_one_photon(params: ModelParams, mu: float, E: float, s: float, C_s: float,
                         theta: ThetaLike) -> float:
    """C_s [ |g^2 rho0 / (mu - Omega)| theta_s(|E (mu - Omega) / (g^2 rho0) - 1|) ]^-s.

    ``theta`` is any callable returning a lower estimate of theta_s, such as a
    ``ThetaTable`` (its ``lower`` method keeps the criterion conservative).
    Returns ``inf`` where the theta value is zero.
    """
    _check_mu(mu, params.Omega)
    dm = mu - params.Omega
    lam = params.coupling / dm
    th = float(theta(abs(E * dm / params.coupling - 1.0)))
    prod = abs(lam) * th
    if prod <= 0.0:
        return float("inf")
    return float(C_s * prod ** (-s))


def predicted_localized(params: ModelParams, E: float, s: float, C_s: float, theta: ThetaLike) -> bool:
    return criterion_one_photon(params, E, E, s, C_s, theta) < 1.0


def resonance_window(params: ModelParams, s: float, C_s: float, kappa_s: float) -> float:
    """Half-width K g^2 rho0 of the window |mu - Omega| < kappa_s g^2 rho0 / C_s^(1/s)."""
    return band_K(s, C_s, kappa_s) * params.coupling


def band_K(s: float, C_s: float, kappa_s: float) -> float:
    return kappa_s / C_s ** (1.0 / s)


def corollary_C(s: float, C_s: float, kappa_s: float, Omega: float) -> float:
    """(2 C_s^(1/s) / kappa_s) [ (4 + kappa_s) C_s^(1/s) / kappa_s + Omega ]."""
    q = C_s ** (1.0 / s) / kappa_s
    return 2.0 * q * ((4.0 + kappa_s) * q + Omega)


class BandConstants(NamedTuple):
    K: float
    E0: float
    corollary_C: float
    E0_by_side: tuple[float, float]


def _diag_criterion(params, s, C_s, theta):
    def f(E):
        return criterion_one_photon(params, E, E, s, C_s, theta)
    return f


def find_E0(params: ModelParams, s: float, C_s: float, theta: ThetaLike, E_max: float = 1e6,
            n_grid: int = 400) -> tuple[float, float]:
    """Outer edges (E0+, E0-) beyond which the diagonal criterion stays below 1.

    Each side is scanned inwards from |E| = E_max on a geometric grid in
    |E - Omega|; the outermost grid point with criterion >= 1 and its outer
    neighbour bracket the edge, which is refined by bisection.  The returned
    values are |E| at the edge on the positive and negative side.
    """
    f = _diag_criterion(params, s, C_s, theta)
    Om = params.Omega
    scale = max(1.0, abs(Om))
    offsets = np.geomspace(1e-9 * scale, E_max + abs(Om), n_grid)
    edges = []
    for side in (+1.0, -1.0):
        Es = Om + side * offsets
        crit = np.array([f(E) for E in Es])
        if crit[-1] >= 1.0:
            raise ScanFailure(f"criterion still >= 1 at E={Es[-1]:.3g}")
        bad = np.flatnonzero(crit >= 1.0)
        if bad.size == 0:
            edges.append(0.0)
            continue
        i = int(bad[-1])
        a, b = Es[i], Es[i + 1]
        # bisection on the step function crit >= 1 (not assumed continuous)
        for _ in range(200):
            m = 0.5 * (a + b)
            if m in (a, b):
                break
            if f(m) >= 1.0:
                a = m
            else:
                b = m
        edges.append(abs(b))
    return edges[0], edges[1]


def band_constants_one_photon(params: ModelParams, s: float, C_s: float, kappa_s: float,
                              theta: ThetaLike) -> BandConstants:
    K = band_K(s, C_s, kappa_s)
    ep, em = find_E0(params, s, C_s, theta)
    return BandConstants(K, max(ep, em), corollary_C(s, C_s, kappa_s, params.Omega), (ep, em))


class OverlapCheck(NamedTuple):
    energies: np.ndarray
    criterion: np.ndarray
    threshold: float

    @property
    def passed(self) -> bool:
        return bool(np.all(self.criterion < 1.0))

    @property
    def worst(self) -> float:
        return float(np.max(self.criterion))


def corollary_overlap_check(params: ModelParams, s: float, C_s: float, kappa_s: float, theta: ThetaLike,
                            n_samples: int = 100, seed: int = 0, max_decades: float = 6.0) -> OverlapCheck:
    """Sample E with |E - Omega| > kappa_s g^2 rho0 / (2 C_s^(1/s)) and
    evaluate the diagonal criterion.

    Offsets are log-uniform over ``max_decades`` decades above the threshold,
    with a random sign.
    """
    thr = 0.5 * kappa_s * params.coupling / C_s ** (1.0 / s)
    rng = np.random.default_rng(seed)
    off = thr * 10.0 ** rng.uniform(0.0, max_decades, n_samples) * (1.0 + 1e-12)
    Es = params.Omega + np.where(rng.random(n_samples) < 0.5, -1.0, 1.0) * off
    f = _diag_criterion(params, s, C_s, theta)
    return OverlapCheck(Es, np.array([f(E) for E in Es]), float(thr))


class XiVerdict(NamedTuple):
    xi: float
    xi_error: float
    bound: float
    passed: bool


def xi_bound_check(report, Ds: float, criterion: float) -> XiVerdict:
    """Xi_hat <= D_s / (1 - criterion) + 3 * (statistical error of Xi_hat).

    ``report`` is anything with ``xi`` and ``xi_error`` attributes, normally a
    ``MomentReport``.
    """
    xi, xi_error = report.xi, report.xi_error
    if not criterion < 1.0:
        raise ValueError(f"the Xi bound needs criterion < 1, got {criterion}")
    bound = Ds / (1.0 - criterion)
    return XiVerdict(float(xi), float(xi_error), float(bound), bool(xi <= bound + 3.0 * xi_error))

