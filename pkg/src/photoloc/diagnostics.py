"""
Localization diagnostics that do not use fractional moments: participation
ratios, envelope fits, level-spacing ratios and time evolution.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import partial
from typing import NamedTuple, Sequence

import numpy as np
import scipy.linalg as sla

from ._pool import ordered_map
from .disorder import sample_field
from .lattice import LatticeSpec, SymbolVariant, build_kernel, plane_wave
from .one_photon import ModelParams, build_H

POISSON_R = 2.0 * np.log(2.0) - 1.0
MIN_GAPS = 50
R2_ACCEPT = 0.8
COND_LIMIT = 1e8


def ipr(state) -> float:
    """sum_x |psi(x)|^4 of a normalised state."""
    p = np.abs(np.asarray(state)) ** 2
    return float(np.sum(p * p))


class LocalizationFit(NamedTuple):
    xi: float
    r2: float
    accepted: bool


def localization_length(state, floor: float = 1e-12) -> LocalizationFit:
    """Exponential envelope fit of a d = 1 state.

    Regresses log|psi(x)| on |x - x_peak| over the sites with |psi| > floor;
    xi = -1 / slope.  The fit is accepted when R^2 >= 0.8 and the slope is
    negative.
    """
    a = np.abs(np.asarray(state)).ravel()
    peak = int(np.argmax(a))
    r = np.abs(np.arange(a.size) - peak).astype(float)
    keep = a > floor
    r, y = r[keep], np.log(a[keep])
    if r.size < 3 or np.ptp(r) == 0:
        return LocalizationFit(float("inf"), 0.0, False)
    slope, icpt = np.polyfit(r, y, 1)
    ss_tot = float(np.sum((y - y.mean()) ** 2))
    ss_res = float(np.sum((y - (slope * r + icpt)) ** 2))
    r2 = 1.0 - ss_res / ss_tot if ss_tot > 0 else 0.0
    xi = -1.0 / slope if slope < 0 else float("inf")
    return LocalizationFit(float(xi), float(r2), bool(r2 >= R2_ACCEPT and slope < 0))


def r_ratios(eigenvalues) -> np.ndarray:
    """min(d_n, d_n+1) / max(d_n, d_n+1) over consecutive gaps of the sorted
    values; pairs of zero gaps are dropped."""
    e = np.sort(np.asarray(eigenvalues, dtype=float))
    d = np.diff(e)
    lo, hi = np.minimum(d[:-1], d[1:]), np.maximum(d[:-1], d[1:])
    ok = hi > 0
    return lo[ok] / hi[ok]


def r_statistic(eigenvalues) -> float:
    """Mean consecutive-gap ratio; needs at least 50 gaps."""
    n_gaps = max(np.size(eigenvalues) - 1, 0)
    if n_gaps < MIN_GAPS:
        raise ValueError(f"r statistic needs at least {MIN_GAPS} gaps, got {n_gaps}")
    return float(np.mean(r_ratios(eigenvalues)))


@dataclass(frozen=True)
class EigenstateDiagnostics:
    energies: np.ndarray
    ipr: np.ndarray
    xi: np.ndarray
    r2: np.ndarray
    fit_accepted: np.ndarray


def eigenstate_diagnostics(energies, vectors, n_photon: int) -> EigenstateDiagnostics:
    """IPR of each full state and envelope fits of its normalised photon block."""
    iprs, xis, r2s, acc = [], [], [], []
    for j in range(vectors.shape[1]):
        v = vectors[:, j] / np.linalg.norm(vectors[:, j])
        iprs.append(ipr(v))
        ph = v[:n_photon]
        nrm = np.linalg.norm(ph)
        fit = localization_length(ph / nrm) if nrm > 0 else LocalizationFit(float("nan"), 0.0, False)
        xis.append(fit.xi)
        r2s.append(fit.r2)
        acc.append(fit.accepted)
    return EigenstateDiagnostics(np.asarray(energies), np.array(iprs), np.array(xis), np.array(r2s),
                                 np.array(acc, dtype=bool))


@dataclass(frozen=True)
class EvolutionTrace:
    times: np.ndarray
    norm: np.ndarray
    photon_probability: np.ndarray
    atom_probability: np.ndarray
    second_moment: np.ndarray
    energy: np.ndarray
    method: str
    condition: float

    @property
    def norm_drift(self) -> float:
        return float(np.max(np.abs(self.norm - 1.0)))


def _photon_positions(op) -> np.ndarray | None:
    kernel = getattr(op, "kernel", None)
    if kernel is None:
        return None
    spec = kernel.spec
    c = spec.coords() - np.asarray(spec.site(spec.center))
    r2 = np.sum(c**2, axis=1).astype(float)
    n_block = op.matrix.shape[0] // 2
    if n_block == spec.n_sites:
        return r2
    # two-photon product box: both photons measured from the centre
    return (r2[:, None] + r2[None, :]).ravel()


def evolve(H, psi0, times: Sequence[float], positions=None) -> EvolutionTrace:
    """Propagate psi(t) = exp(-i H t) psi0 and record block observables.

    Symmetric matrices use ``eigh``.  Otherwise the general eigenbasis is used
    unless its condition number exceeds 1e8, in which case the state is
    stepped between recorded times with ``scipy.linalg.expm``.  Squared
    position ``positions`` for the photon block (first half of the vector)
    defaults to the squared distance from the box centre when ``H`` carries
    its kernel.
    """
    A = np.asarray(getattr(H, "matrix", H))
    t = np.asarray(times, dtype=float)
    psi0 = np.asarray(psi0, dtype=complex)
    n_block = A.shape[0] // 2
    pos = _photon_positions(H) if positions is None else np.asarray(positions, dtype=float)
    symmetric = bool(getattr(H, "symmetric", np.array_equal(A, A.T)))

    if symmetric:
        w, V = np.linalg.eigh(A)
        c = V.T @ psi0
        states = (V @ (np.exp(-1j * np.outer(w, t)) * c[:, None])).T
        method, cond = "eigh", 1.0
    else:
        w, V = np.linalg.eig(A)
        cond = float(np.linalg.cond(V))
        if cond <= COND_LIMIT:
            c = np.linalg.solve(V, psi0)
            states = (V @ (np.exp(-1j * np.outer(w, t)) * c[:, None])).T
            method = "eig"
        else:
            states = np.empty((t.size, A.shape[0]), dtype=complex)
            cur, t_prev = psi0.copy(), 0.0
            for k, tk in enumerate(t):
                if tk != t_prev:
                    cur = sla.expm(-1j * A * (tk - t_prev)) @ cur
                states[k], t_prev = cur, tk
            method = "expm"
    if t.size and t[0] == 0.0:
        states[0] = psi0

    p = np.abs(states) ** 2
    photon = p[:, :n_block].sum(axis=1)
    atom = p[:, n_block:].sum(axis=1)
    if pos is not None:
        second = (p[:, :n_block] @ pos) / np.where(photon > 0, photon, 1.0)
    else:
        second = np.full(t.size, np.nan)
    energy = np.einsum("ti,ij,tj->t", states.conj(), A, states).real
    return EvolutionTrace(t, np.sqrt(photon + atom), photon, atom, second, energy, method, cond)


def _two_time_frequency(H, psi0, t: float) -> float:
    """Oscillation frequency of P_photon(t) = 1 - a sin^2(omega t / 2) from
    samples at t and 2t (needs omega t < pi)."""
    tr = evolve(H, psi0, [t, 2.0 * t])
    q1, q2 = 1.0 - tr.photon_probability[0], 1.0 - tr.photon_probability[1]
    if q1 <= 0.0:
        return 0.0
    c = np.clip(0.5 * q2 / q1 - 1.0, -1.0, 1.0)
    return float(np.arccos(c) / t)


def measure_rabi_frequency(H, mode: int) -> float:
    """Photon-atom oscillation frequency for a plane-wave photon initial state.

    Meaningful for V = 0 with the periodic-symbol kernel, where each Fourier
    mode only couples to the atomic amplitude with the same momentum.  The
    frequency is measured from the evolved photon probability at two times,
    first at t = 0.5 / ||H|| and then re-measured at t = 1 / omega.
    """
    spec = H.kernel.spec
    n = spec.n_sites
    psi0 = np.concatenate([plane_wave(spec, mode), np.zeros(n)])
    t0 = 0.5 / np.linalg.norm(H.matrix, 2)
    om = _two_time_frequency(H, psi0, t0)
    if om == 0.0:
        return 0.0
    return _two_time_frequency(H, psi0, 1.0 / om)


@dataclass(frozen=True)
class BandDiagnostics:
    window: tuple[float, float]
    L: int
    n_realizations: int
    n_states: int
    r_mean: float
    n_ratios: int
    ipr_mean: float
    fit_fraction: float
    r2_median: float
    xi_median: float


def _band_realization(index: int, *, kernel, params: ModelParams, window, master_seed: int):
    fld = sample_field(kernel.spec, master_seed, index)
    H = build_H(kernel, fld, params)
    w, v = np.linalg.eigh(H.matrix)
    lo, hi = window
    sel = (w > lo) & (w < hi) & (w != params.Omega)
    diag = eigenstate_diagnostics(w[sel], v[:, sel], kernel.n)
    return r_ratios(w[sel]), diag.ipr, diag.r2, diag.xi, diag.fit_accepted


def band_diagnostics(spec: LatticeSpec, params: ModelParams, window: tuple[float, float], n_realizations: int,
                     master_seed: int, variant: SymbolVariant | str = SymbolVariant.SIN2K,
                     workers: int | None = None) -> BandDiagnostics:
    """Pooled in-window diagnostics of the one-photon H over an ensemble.

    Gap ratios are formed within each realization from consecutive in-window
    eigenvalues and pooled; the pooled count must reach 50.
    """
    kernel = build_kernel(spec, variant)
    job = partial(_band_realization, kernel=kernel, params=params, window=tuple(window),
                  master_seed=master_seed)
    out = ordered_map(job, range(n_realizations), workers)
    rs = np.concatenate([o[0] for o in out])
    if rs.size < MIN_GAPS:
        raise ValueError(f"only {rs.size} in-window gap ratios; need {MIN_GAPS}")
    iprs = np.concatenate([o[1] for o in out])
    r2 = np.concatenate([o[2] for o in out])
    xi = np.concatenate([o[3] for o in out])
    acc = np.concatenate([o[4] for o in out])
    return BandDiagnostics(
        window=(float(window[0]), float(window[1])), L=spec.L, n_realizations=n_realizations,
        n_states=int(iprs.size), r_mean=float(rs.mean()), n_ratios=int(rs.size),
        ipr_mean=float(iprs.mean()), fit_fraction=float(acc.mean()), r2_median=float(np.median(r2)),
        xi_median=float(np.median(xi)),
    )
