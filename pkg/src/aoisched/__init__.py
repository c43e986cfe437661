"""Scheduling engine and simulator for age-of-information-driven remote
inference under per-source computation budgets and a shared channel pool."""

from .model import (
    AoIState,
    ConfigIOError,
    Exponential,
    Linear,
    Logarithmic,
    PenaltyFunction,
    SourceConfig,
    SystemConfig,
    Tabulated,
    TaskConfig,
    TaskId,
    effective_penalty_bounds,
    load_config,
    penalty_eval,
    validate_config,
)
from .dp import (
    GainVector,
    MultiplierSet,
    TableCache,
    ValueTable,
    backward_induction,
    gain_index,
    q_value,
    relaxed_rollout,
)
from .dual import DualResult, SubgradientSettings, evaluate_dual, subgradient_ascent
from .policies import (
    ActionMatrix,
    Maf,
    Mgf,
    PolicyKind,
    Random,
    maf_decide,
    mgf_decide,
    random_decide,
)
from .sim import SimResult, run, step
from .bounds import (
    DivergenceReport,
    GapCertificate,
    brute_force_optimal,
    divergence_report,
    dual_lower_bound,
    gap_certificate,
    optimality_gap_bound,
    replicate_tasks,
    scale_instance,
)

__version__ = "0.1.0"
