"""Simulation and analysis of multipass interferometric phase estimation."""
from .bounds import (
    BoundReport,
    chernoff_tail,
    f_of,
    fejer_kernel,
    heisenberg_limit,
    hybrid_variance_bound,
    nonadaptive_vmax,
    proven_schedule_overhead,
    sql,
)
from .engine import PhiPolicy
from .harness import CampaignSummary, holevo_stats, holevo_std, run_campaign
from .measurement import MeasurementSetting, likelihood, sample_outcome
from .oracle import exact_oracle
from .posterior import (
    DegenerateEstimate,
    PhasePosterior,
    bayes_update,
    point_estimate,
    uniform_prior,
)
from .schemes import (
    EstimateSample,
    HybridMode,
    SchemeConfig,
    SchemeKind,
    ThetaPolicy,
    run_fixed_m,
    run_hybrid,
    run_nonadaptive,
    run_qpea,
    run_standard,
    total_resources,
)

__version__ = "0.1.0"
