"""Fractional-moment machinery: Green's functions, decoupling, criteria and ensembles."""

from .criteria import (
    BandConstants,
    OverlapCheck,
    XiVerdict,
    apriori_A,
    apriori_Ds,
    band_constants_one_photon,
    band_K,
    corollary_C,
    corollary_overlap_check,
    criterion_one_photon,
    Ds_from_A,
    find_E0,
    predicted_localized,
    resonance_window,
    xi_bound_check,
)
from .decoupling import (
    ThetaEstimate,
    ThetaTable,
    decoupling_ratio,
    default_eta_grid,
    kappa_s_estimate,
    theta_s_estimate,
    theta_s_search,
    theta_table,
)
from .ensemble import (
    DecayFit,
    MomentReport,
    SimonWolffStudy,
    default_epsilon,
    fit_log_decay,
    median_of_means,
    moment_ensemble,
    simon_wolff_study,
)
from .greens import (
    GreensVector,
    KreinFit,
    SimonWolffResult,
    WegnerCheck,
    greens,
    greens_relation_residual,
    krein_dependence_check,
    simon_wolff_sum,
    wegner_bound,
    wegner_tail_check,
)
