"""
Experiment kinds.  Each takes an ``ExperimentConfig`` and returns an
``ExperimentResult``: named tables, headline scalars, invariant violations
and a failure count.  Nothing here touches the file system.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import partial
from typing import Callable

import numpy as np

from .. import two_photon as tp
from .._pool import ordered_map
from ..diagnostics import band_diagnostics, evolve
from ..disorder import sample_field
from ..lattice import build_kernel, kernel_s_norm
from ..moments import (
    band_constants_one_photon,
    criterion_one_photon,
    moment_ensemble,
    simon_wolff_study,
    theta_table,
    xi_bound_check,
)
from ..one_photon import ModelParams, build_H, check_lemma1, fixed_point_scan, spectrum
from .config import ExperimentConfig


@dataclass
class Table:
    columns: list[str]
    rows: list[tuple] = field(default_factory=list)


@dataclass
class ExperimentResult:
    tables: dict[str, Table]
    summary: dict
    violations: list[str] = field(default_factory=list)
    n_failed: int = 0
    n_total: int = 0


def _theta(cfg: ExperimentConfig):
    return theta_table(cfg.s, np.asarray(cfg.eta) if cfg.eta else None)


# ---------------------------------------------------------------- one-photon


def _spectrum_job(index, *, kernel, params, seed):
    H = build_H(kernel, sample_field(kernel.spec, seed, index), params)
    res = spectrum(H)
    return res.eigenvalues, res.residuals, float(np.linalg.norm(H.matrix, 2))


def run_spectrum(cfg: ExperimentConfig) -> ExperimentResult:
    kernel = build_kernel(cfg.lattice_spec(), cfg.variant)
    job = partial(_spectrum_job, kernel=kernel, params=cfg.model_params(), seed=cfg.master_seed)
    out = ordered_map(job, range(cfg.n_realizations))
    t = Table(["realization", "index", "eigenvalue", "residual"])
    worst = 0.0
    for r, (w, res, nrm) in enumerate(out):
        t.rows += [(r, i, w[i], res[i]) for i in range(w.size)]
        worst = max(worst, float(np.max(res)) / nrm)
    viol = [f"eigenpair residual {worst:.3e} exceeds 1e-8 ||H||"] if worst > 1e-8 else []
    return ExperimentResult({"spectrum": t}, {"max_relative_residual": worst}, viol, 0, cfg.n_realizations)


def _lemma1_job(index, *, kernel, params, seed):
    H = build_H(kernel, sample_field(kernel.spec, seed, index), params)
    w = np.linalg.eigvalsh(H.matrix)
    w = w[np.abs(w - params.Omega) > 1e-6]
    scan = fixed_point_scan(kernel, H.field, params)
    rows = []
    for E in w:
        c = check_lemma1(H, float(E))
        hit = scan.roots.size > 0 and np.min(np.abs(scan.roots - E)) < 1e-6
        rows.append((float(E), c.sigma_HE / c.norm_HE, c.lift_residual, int(hit)))
    return rows


def run_lemma_equivalence(cfg: ExperimentConfig) -> ExperimentResult:
    kernel = build_kernel(cfg.lattice_spec(), cfg.variant)
    job = partial(_lemma1_job, kernel=kernel, params=cfg.model_params(), seed=cfg.master_seed)
    out = ordered_map(job, range(cfg.n_realizations))
    t = Table(["realization", "E", "sigma_min_relative", "lift_residual", "recovered"])
    for r, rows in enumerate(out):
        t.rows += [(r, *row) for row in rows]
    sig = np.array([row[2] for row in t.rows])
    rec = np.array([row[4] for row in t.rows])
    summ = {"worst_sigma_min_relative": float(sig.max()), "recovered_fraction": float(rec.mean()),
            "n_eigenvalues": int(sig.size)}
    viol = []
    if summ["worst_sigma_min_relative"] >= 1e-8:
        viol.append("sigma_min(H_E - E) >= 1e-8 ||H_E|| at some eigenvalue")
    if summ["recovered_fraction"] < 0.95:
        viol.append("fixed-point scan recovered < 95% of the spectrum")
    return ExperimentResult({"lemma1": t}, summ, viol, 0, cfg.n_realizations)


def run_moments(cfg: ExperimentConfig) -> ExperimentResult:
    spec, params = cfg.lattice_spec(), cfg.model_params()
    theta = _theta(cfg)
    prof = Table(["E", "mu", "distance", "moment_estimate", "mom_error_low", "mom_error_high"])
    summ_t = Table(["E", "mu", "xi", "xi_error", "slope", "slope_ci_low", "slope_ci_high", "criterion", "Ds",
                    "xi_bound", "xi_verdict", "n_failed"])
    n_failed = 0
    for E in cfg.energies:
        mu = E if cfg.mu is None else cfg.mu
        rep = moment_ensemble(spec, params, mu, E, cfg.s, cfg.epsilon, cfg.n_realizations, cfg.master_seed,
                              variant=cfg.variant, theta=theta)
        n_failed += rep.n_failed
        prof.rows += [(E, mu, r, m, m - e, m + e) for r, m, e in zip(rep.distances, rep.moment, rep.moment_error)]
        if rep.criterion < 1.0:
            v = xi_bound_check(rep, rep.Ds, rep.criterion)
            bound, verdict = v.bound, int(v.passed)
        else:
            bound, verdict = float("inf"), -1
        summ_t.rows.append((E, mu, rep.xi, rep.xi_error, rep.fit.slope, *rep.fit.ci, rep.criterion, rep.Ds,
                            bound, verdict, rep.n_failed))
    summ = {"n_energies": len(cfg.energies), "kappa": theta.kappa}
    return ExperimentResult({"moments": prof, "moments_summary": summ_t}, summ, [], n_failed,
                            cfg.n_realizations * len(cfg.energies))


def run_theta(cfg: ExperimentConfig) -> ExperimentResult:
    tab = _theta(cfg)
    t = Table(["eta", "theta_hat", "argmin_beta_re", "argmin_beta_im", "boundary_argmin"])
    t.rows = [(e, th, b.real, b.imag, int(f))
              for e, th, b, f in zip(tab.eta, tab.theta, tab.argmin_beta, tab.boundary_argmin)]
    viol = []
    if tab.boundary_argmin.any():
        viol.append("beta search attained its minimum on the domain boundary")
    if tab.max_decrease > 1e-3:
        viol.append(f"theta table decreases by {tab.max_decrease:.3e}")
    return ExperimentResult({"theta": t}, {"s": cfg.s, "kappa": tab.kappa, "max_decrease": tab.max_decrease},
                            viol)


def _band_setup(cfg: ExperimentConfig):
    params = cfg.model_params()
    kernel = build_kernel(cfg.lattice_spec(), cfg.variant)
    Cs = kernel_s_norm(kernel, cfg.s).total
    theta = _theta(cfg)
    return params, Cs, theta, band_constants_one_photon(params, cfg.s, Cs, theta.kappa, theta)


def run_band(cfg: ExperimentConfig) -> ExperimentResult:
    params, Cs, theta, bc = _band_setup(cfg)
    energies = cfg.energies or tuple(params.Omega + np.linspace(-20.0, 20.0, 400))
    t = Table(["E", "criterion", "predicted"])
    for E in energies:
        if abs(E - params.Omega) <= 1e-12 * max(1.0, abs(params.Omega)):
            continue
        c = criterion_one_photon(params, E, E, cfg.s, Cs, theta)
        t.rows.append((E, c, int(c < 1.0)))
    half = bc.K * params.coupling
    summ = {"C_s": Cs, "kappa": theta.kappa, "K": bc.K, "window_low": params.Omega - half,
            "window_high": params.Omega + half, "E0": float(bc.E0), "corollary_C": bc.corollary_C}
    return ExperimentResult({"band": t}, summ)


def _sw_job(index, *, cfg: ExperimentConfig, E: float):
    mu = E if cfg.mu is None else cfg.mu
    return simon_wolff_study(cfg.lattice_spec(), cfg.model_params(), mu, E, cfg.epsilons, cfg.master_seed, index,
                             cfg.variant)


def run_sw_sum(cfg: ExperimentConfig) -> ExperimentResult:
    t = Table(["E", "realization", "L", "epsilon", "sum"])
    summ_t = Table(["E", "realization", "growth_small", "growth_large", "relative_difference"])
    for E in cfg.energies:
        studies = ordered_map(partial(_sw_job, cfg=cfg, E=E), range(cfg.n_realizations))
        for r, st in enumerate(studies):
            for L, res in ((st.L_small, st.small), (st.L_large, st.large)):
                t.rows += [(E, r, L, e, v) for e, v in zip(res.epsilons, res.sums)]
            summ_t.rows.append((E, r, st.small.growth_exponent, st.large.growth_exponent, st.relative_difference))
    return ExperimentResult({"sw_sum": t, "sw_summary": summ_t}, {"n_energies": len(cfg.energies)}, [], 0,
                            cfg.n_realizations * len(cfg.energies))


def run_evolve(cfg: ExperimentConfig) -> ExperimentResult:
    spec = cfg.lattice_spec()
    H = build_H(build_kernel(spec, cfg.variant), sample_field(spec, cfg.master_seed, 0), cfg.model_params())
    psi0 = np.zeros(2 * spec.n_sites)
    psi0[spec.center] = 1.0
    tr = evolve(H, psi0, cfg.times)
    t = Table(["time", "norm", "photon_probability", "atom_probability", "second_moment", "energy"])
    t.rows = list(zip(tr.times, tr.norm, tr.photon_probability, tr.atom_probability, tr.second_moment, tr.energy))
    e_drift = float(np.max(np.abs(tr.energy - tr.energy[0])) / max(abs(tr.energy[0]), 1.0))
    summ = {"norm_drift": tr.norm_drift, "energy_drift": e_drift, "method": tr.method}
    viol = []
    if tr.norm_drift > 1e-10:
        viol.append(f"norm drift {tr.norm_drift:.3e} exceeds 1e-10")
    if e_drift > 1e-8:
        viol.append(f"energy drift {e_drift:.3e} exceeds 1e-8")
    return ExperimentResult({"evolution": t}, summ, viol)


def run_diagnostics(cfg: ExperimentConfig) -> ExperimentResult:
    params, _, _, bc = _band_setup(cfg)
    half = bc.K * params.coupling
    window = (params.Omega - half, params.Omega + half)
    t = Table(["L", "n_states", "r_mean", "n_ratios", "ipr_mean", "fit_fraction", "r2_median", "xi_median"])
    res = {}
    for L in (cfg.L // 2, cfg.L):
        bd = band_diagnostics(cfg.lattice_spec(L), params, window, cfg.n_realizations, cfg.master_seed,
                              cfg.variant)
        res[L] = bd
        t.rows.append((L, bd.n_states, bd.r_mean, bd.n_ratios, bd.ipr_mean, bd.fit_fraction, bd.r2_median,
                       bd.xi_median))
    big, small = res[cfg.L], res[cfg.L // 2]
    ratio = max(big.ipr_mean, small.ipr_mean) / min(big.ipr_mean, small.ipr_mean)
    summ = {"window_low": window[0], "window_high": window[1], "r_mean": big.r_mean,
            "r_poisson_offset": big.r_mean - (2.0 * np.log(2.0) - 1.0), "ipr_ratio": ratio,
            "fit_fraction": big.fit_fraction}
    return ExperimentResult({"diagnostics": t}, summ, [], 0, 2 * cfg.n_realizations)


# ---------------------------------------------------------------- two-photon


def _tp_operator(cfg: ExperimentConfig, index: int):
    spec = cfg.lattice_spec()
    return tp.build_two_photon_H(build_kernel(spec, cfg.variant), sample_field(spec, cfg.master_seed, index),
                                 cfg.model_params())


def _tp_spectrum_job(index, *, cfg):
    H = _tp_operator(cfg, index)
    w = np.linalg.eigvals(H.matrix)
    order = np.lexsort((w.imag, w.real))
    return w[order], float(np.linalg.norm(H.matrix, 2))


def run_two_photon_spectrum(cfg: ExperimentConfig) -> ExperimentResult:
    out = ordered_map(partial(_tp_spectrum_job, cfg=cfg), range(cfg.n_realizations))
    t = Table(["realization", "index", "eigenvalue_re", "eigenvalue_im", "nonreal"])
    n_nonreal = 0
    for r, (w, nrm) in enumerate(out):
        nr = np.abs(w.imag) > 1e-8 * nrm
        n_nonreal += int(nr.sum())
        t.rows += [(r, i, w[i].real, w[i].imag, int(nr[i])) for i in range(w.size)]
    total = sum(w.size for w, _ in out)
    return ExperimentResult({"two_photon_spectrum": t},
                            {"n_nonreal": n_nonreal, "nonreal_fraction": n_nonreal / total}, [], 0,
                            cfg.n_realizations)


def _tp_lemma_job(index, *, cfg):
    return tp.lemma3_sweep(_tp_operator(cfg, index), cfg.reduction)


def run_two_photon_lemma(cfg: ExperimentConfig) -> ExperimentResult:
    out = ordered_map(partial(_tp_lemma_job, cfg=cfg), range(cfg.n_realizations))
    t = Table(["realization", "E", "sigma_min_relative", "reconstruction_residual"])
    for r, sw in enumerate(out):
        t.rows += [(r, c.E, c.relative, c.reconstruction_residual) for c in sw.checks]
    worst = max(sw.worst_relative for sw in out)
    n_nonreal = sum(sw.n_nonreal for sw in out)
    n_all = sum(sw.n_real + sw.n_nonreal + sw.n_skipped_resonant for sw in out)
    summ = {"worst_sigma_min_relative": worst, "n_nonreal": n_nonreal, "nonreal_fraction": n_nonreal / n_all,
            "reduction": cfg.reduction}
    viol = [f"sigma_min(H_E - E) = {worst:.3e} ||H_E|| exceeds 1e-6"] if worst >= 1e-6 else []
    return ExperimentResult({"two_photon_lemma": t}, summ, viol, 0, cfg.n_realizations)


def run_two_photon_band(cfg: ExperimentConfig) -> ExperimentResult:
    kernel = build_kernel(cfg.lattice_spec(), cfg.variant)
    kc = tp.kmu_constants(kernel, cfg.s)
    base = cfg.model_params()
    K = tp.two_photon_band(base, cfg.s, kc.C1, kc.C2).K_threshold
    couplings = cfg.couplings or (1.1 * K, 2.0 * K, 4.0 * K)
    t = Table(["coupling", "K_threshold", "R", "band_low", "band_high"])
    for c in couplings:
        p = ModelParams.from_coupling(c, base.Omega, base.rho0)
        b = tp.two_photon_band(p, cfg.s, kc.C1, kc.C2, reduction=cfg.reduction)
        lo, hi = b.band if b.exists else (float("nan"), float("nan"))
        t.rows.append((c, b.K_threshold, b.R, lo, hi))
    summ = {"C1": kc.C1, "C2": kc.C2, "C1_tail_bound": kc.c1_tail_bound, "K_threshold": K}
    return ExperimentResult({"two_photon_band": t}, summ)


RUNNERS: dict[str, Callable[[ExperimentConfig], ExperimentResult]] = {
    "spectrum": run_spectrum,
    "lemma-equivalence": run_lemma_equivalence,
    "moments": run_moments,
    "theta": run_theta,
    "band": run_band,
    "sw-sum": run_sw_sum,
    "evolve": run_evolve,
    "diagnostics": run_diagnostics,
    "two-photon-spectrum": run_two_photon_spectrum,
    "two-photon-lemma": run_two_photon_lemma,
    "two-photon-band": run_two_photon_band,
}


def realizations_used(cfg: ExperimentConfig) -> int:
    """Number of disorder realizations a kind draws (for the manifest seed list)."""
    if cfg.kind in ("theta", "band", "two-photon-band"):
        return 0
    if cfg.kind == "evolve":
        return 1
    return cfg.n_realizations


__all__ = ["ExperimentResult", "Table", "RUNNERS", "realizations_used"]
