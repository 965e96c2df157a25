"""Comparison of differential-privacy mechanisms beyond a single
(epsilon, delta) calibration point.

Mechanisms are represented losslessly as trade-off curves, Bayes error
curves or privacy profiles; divergences between them quantify worst-case
excess privacy vulnerability, and a PLD accountant handles composed
subsampled Gaussian mechanisms.
"""

from .accountant import (
    CalibrationResult,
    DiscretePLD,
    PldPair,
    SweepConfig,
    calibrate_sigma,
    compose_pair,
    composed_bayes_curve,
    composed_tradeoff,
    delta_at,
    profile_from_pld,
    run_sweep,
    self_compose,
    sgm_pld,
)
from .curves import (
    DEFAULT_GRID_SIZE,
    BayesErrorCurve,
    PrivacyProfile,
    TradeoffCurve,
    bayes_error_at,
    bayes_error_curve,
    profile_from_tradeoff,
    tradeoff_from_bayes,
    tradeoff_from_plrv_cdfs,
    tradeoff_from_profile,
    tv_and_advantage,
)
from .divergence import (
    ClauseCheck,
    DominanceVerdict,
    HyperPrior,
    check_approx_dominance,
    delta_divergence,
    divergence_from_perfect_privacy,
    divergence_to_blatant_nonprivacy,
    dominance_verdict,
    levy_distance,
    symmetrised_delta,
    weighted_delta_divergence,
)
from .mechanisms import (
    Family,
    MechanismSpec,
    extremal_tradeoff,
    gaussian_tradeoff,
    laplace_tradeoff,
    parse_mechanism,
    tradeoff_curve,
)
from .moments import (
    BoundReport,
    MomentSet,
    clt_gaussian_approx,
    composition_bound,
    compute_moments,
    empirical_vs_bound,
)

__version__ = "0.1.0"

__all__ = [
    "BayesErrorCurve",
    "BoundReport",
    "CalibrationResult",
    "ClauseCheck",
    "DEFAULT_GRID_SIZE",
    "DiscretePLD",
    "DominanceVerdict",
    "Family",
    "HyperPrior",
    "MechanismSpec",
    "MomentSet",
    "PldPair",
    "PrivacyProfile",
    "SweepConfig",
    "TradeoffCurve",
    "bayes_error_at",
    "bayes_error_curve",
    "calibrate_sigma",
    "check_approx_dominance",
    "clt_gaussian_approx",
    "compose_pair",
    "composed_bayes_curve",
    "composed_tradeoff",
    "composition_bound",
    "compute_moments",
    "delta_at",
    "delta_divergence",
    "divergence_from_perfect_privacy",
    "divergence_to_blatant_nonprivacy",
    "dominance_verdict",
    "empirical_vs_bound",
    "extremal_tradeoff",
    "gaussian_tradeoff",
    "laplace_tradeoff",
    "levy_distance",
    "parse_mechanism",
    "profile_from_pld",
    "profile_from_tradeoff",
    "run_sweep",
    "self_compose",
    "sgm_pld",
    "symmetrised_delta",
    "tradeoff_curve",
    "tradeoff_from_bayes",
    "tradeoff_from_plrv_cdfs",
    "tradeoff_from_profile",
    "tv_and_advantage",
    "weighted_delta_divergence",
]
