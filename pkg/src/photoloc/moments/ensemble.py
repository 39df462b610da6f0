"""
Disorder-averaged fractional moments of the one-photon Green's function.

The estimator of E|G(x)|^s is median-of-means: realizations are split, in
index order, into ``n_blocks`` contiguous blocks, each block is averaged and
the median of the block means is reported.  Its error bar is
sqrt(pi/2) * std(block means) / sqrt(n_blocks), the asymptotic standard error
of a median of roughly normal block means.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import partial
from typing import NamedTuple, Sequence

import numpy as np
from scipy import stats

from .._pool import ordered_map
from ..disorder import mix_seed, sample_field
from ..errors import FailureBudgetExceeded, SingularAtE, SolverError
from ..lattice import HoppingKernel, LatticeSpec, SymbolVariant, build_kernel, kernel_s_norm
from ..one_photon import ModelParams, _check_mu, build_H_mu
from .criteria import apriori_Ds, criterion_one_photon
from .greens import SimonWolffResult, greens, simon_wolff_sum

FAILURE_BUDGET = 0.01


def median_of_means(samples: np.ndarray, n_blocks: int = 8) -> tuple[np.ndarray, np.ndarray]:
    """Median-of-means along axis 0 and its standard error."""
    x = np.asarray(samples, dtype=float)
    if x.shape[0] < n_blocks:
        raise ValueError(f"need at least {n_blocks} samples, got {x.shape[0]}")
    blocks = np.array_split(x, n_blocks, axis=0)
    means = np.stack([b.mean(axis=0) for b in blocks])
    est = np.median(means, axis=0)
    err = np.sqrt(np.pi / 2.0) * means.std(axis=0, ddof=1) / np.sqrt(n_blocks)
    return est, err


def default_epsilon(kernel: HoppingKernel, params: ModelParams, mu: float) -> float:
    """1e-3 * (spectral width bound of H_mu) / N: the spectral range of the
    hopping plus the full range 2 |lambda| of the potential lambda (1 + V)."""
    _check_mu(mu, params.Omega)
    width = np.ptp(np.linalg.eigvalsh(kernel.entries)) + 2.0 * abs(params.coupling / (mu - params.Omega))
    return 1e-3 * width / kernel.n


class DecayFit(NamedTuple):
    slope: float
    intercept: float
    ci: tuple[float, float]
    n_points: int


def fit_log_decay(r: np.ndarray, m: np.ndarray, level: float = 0.95) -> DecayFit:
    """Least-squares line through (r, log m) with a two-sided t interval on the slope."""
    keep = (m > 0) & np.isfinite(m)
    r, y = np.asarray(r)[keep], np.log(np.asarray(m)[keep])
    if r.size < 3:
        return DecayFit(float("nan"), float("nan"), (float("nan"), float("nan")), int(r.size))
    lr = stats.linregress(r, y)
    half = stats.t.ppf(0.5 + level / 2.0, r.size - 2) * lr.stderr
    return DecayFit(float(lr.slope), float(lr.intercept), (float(lr.slope - half), float(lr.slope + half)),
                    int(r.size))


@dataclass(frozen=True)
class MomentReport:
    s: float
    E: float
    mu: float
    epsilon: float
    n_realizations: int
    n_failed: int
    source: int
    distances: np.ndarray
    moment: np.ndarray
    moment_error: np.ndarray
    site_moment: np.ndarray
    xi: float
    xi_error: float
    fit: DecayFit
    C_s: float
    Ds: float
    criterion: float
    seeds: tuple = field(default=())   # per-realization stream keys

    @property
    def predicted(self) -> bool:
        return bool(self.criterion < 1.0)

    @property
    def slope(self) -> float:
        return self.fit.slope


def _realization_moments(index: int, *, kernel: HoppingKernel, params: ModelParams, mu: float, E: float,
                         s: float, epsilon: float, master_seed: int, source: int):
    field_ = sample_field(kernel.spec, master_seed, index)
    Hm = build_H_mu(kernel, field_, params, mu)
    try:
        G = greens(Hm, source, E, epsilon)
    except (SingularAtE, SolverError):
        return None
    return np.abs(G.values) ** s


def moment_ensemble(
    spec: LatticeSpec,
    params: ModelParams,
    mu: float,
    E: float,
    s: float,
    epsilon: float | None,
    n_realizations: int,
    master_seed: int,
    *,
    n_blocks: int = 8,
    variant: SymbolVariant | str = SymbolVariant.SIN2K,
    theta=None,
    C_s: float | None = None,
    workers: int | None = None,
    kernel: HoppingKernel | None = None,
) -> MomentReport:
    """Fractional moments E|G(x, x0)|^s with the source x0 at the box centre.

    The decay fit of log <|G|^s> against distance uses distances >= 1 that
    are connected to the source through nonzero hopping.  ``theta`` (a
    ``ThetaTable`` or callable) enables the criterion value; without it the
    criterion is reported as NaN.  D_s uses mu for the disorder strength.
    ``kernel`` replaces the hopping built from ``spec`` (e.g. zero hopping).
    """
    if not 0.0 < s < 1.0:
        raise ValueError(f"s must lie in (0, 1), got {s}")
    if n_realizations < 8 * n_blocks:
        raise ValueError(f"need at least {8 * n_blocks} realizations for {n_blocks} blocks")
    _check_mu(mu, params.Omega)
    if kernel is None:
        kernel = build_kernel(spec, variant)
    elif kernel.spec != spec:
        raise ValueError("kernel lives on a different lattice than spec")
    eps = default_epsilon(kernel, params, mu) if epsilon is None else float(epsilon)
    source = spec.center
    job = partial(_realization_moments, kernel=kernel, params=params, mu=mu, E=E, s=s, epsilon=eps,
                  master_seed=master_seed, source=source)
    rows = ordered_map(job, range(n_realizations), workers)
    good = [r for r in rows if r is not None]
    n_failed = n_realizations - len(good)
    if n_failed > FAILURE_BUDGET * n_realizations:
        raise FailureBudgetExceeded(f"{n_failed} of {n_realizations} solves failed", n_failed, n_realizations)
    samples = np.array(good)

    site_est, _ = median_of_means(samples, n_blocks)
    xi_est, xi_err = median_of_means(samples.sum(axis=1), n_blocks)

    dist = spec.distances(source)
    key = np.round(dist, 9)
    shells, inverse = np.unique(key, return_inverse=True)
    shell_samples = np.stack([samples[:, inverse == k].mean(axis=1) for k in range(shells.size)], axis=1)
    prof, prof_err = median_of_means(shell_samples, n_blocks)

    connected = kernel.connected_sites(source)
    shell_connected = np.array([connected[inverse == k].any() for k in range(shells.size)])
    use = shell_connected & (shells >= 1.0)
    fit = fit_log_decay(shells[use], prof[use])

    Cs = kernel_s_norm(kernel, s).total if C_s is None else float(C_s)
    crit = criterion_one_photon(params, mu, E, s, Cs, theta) if theta is not None else float("nan")
    return MomentReport(
        s=float(s), E=float(E), mu=float(mu), epsilon=eps, n_realizations=n_realizations, n_failed=n_failed,
        source=source, distances=shells, moment=prof, moment_error=prof_err, site_moment=site_est,
        xi=float(xi_est), xi_error=float(xi_err), fit=fit, C_s=Cs, Ds=apriori_Ds(params, mu, s),
        criterion=float(crit), seeds=tuple(mix_seed(master_seed, i) for i in range(n_realizations)),
    )


class SimonWolffStudy(NamedTuple):
    small: SimonWolffResult
    large: SimonWolffResult
    L_small: int
    L_large: int

    @property
    def relative_difference(self) -> float:
        """|S_large - S_small| / S_small at the smallest epsilon."""
        a, b = self.small.sums[-1], self.large.sums[-1]
        return float(abs(b - a) / a)


def simon_wolff_study(spec: LatticeSpec, params: ModelParams, mu: float, E: float, epsilons: Sequence[float],
                      master_seed: int, realization_index: int = 0,
                      variant: SymbolVariant | str = SymbolVariant.SIN2K) -> SimonWolffStudy:
    """Simon-Wolff sums at box size L and at the doubled size (2L - 1 for odd
    L, so both boxes share their centre site).  The size-L field is the
    central sub-box of the large realization."""
    L = spec.L
    big = spec.with_size(2 * L - 1 if L % 2 else 2 * L)
    field_big = sample_field(big, master_seed, realization_index)
    off = (big.L - L) // 2
    field_small = field_big.sub_box(spec, (off,) * spec.d)
    results = []
    for sp, fld in ((spec, field_small), (big, field_big)):
        Hm = build_H_mu(build_kernel(sp, variant), fld, params, mu)
        results.append(simon_wolff_sum(Hm, sp.center, E, epsilons))
    return SimonWolffStudy(results[0], results[1], L, big.L)
