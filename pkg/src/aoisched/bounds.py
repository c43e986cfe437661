"""Optimality certification.

Three independent yardsticks for a scheduling run:

  * the dual lower bound: any nonnegative price point under-estimates every
    feasible policy's truncated cost, so the best ascent iterate certifies
    how far a policy can possibly be from optimal;
  * a closed-form cap on the MGF-vs-optimal gap that shrinks like
    1/sum_m sqrt(r*k_m) when the instance is replicated r-fold with
    proportionally scaled budgets;
  * for tiny instances, exhaustive enumeration of all feasible schedules.

A divergence report additionally measures how often the greedy MGF schedule
departs from the unconstrained price-relaxed optimum; its closed-form bound
sum_m sqrt(k_m) + sqrt(sum_m k_m) is derived for unit channel widths, so the
report flags whether that premise holds.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from typing import Optional

from .dual import SubgradientSettings, subgradient_ascent
from .model import (
    AoIState,
    SourceConfig,
    SystemConfig,
    effective_penalty_bounds,
    num_tasks,
)
from .policies import ActionMatrix, action_violations
from .sim import SimResult, slot_cost

__all__ = [
    "GapCertificate",
    "DivergenceReport",
    "dual_lower_bound",
    "optimality_gap_bound",
    "scale_instance",
    "replicate_tasks",
    "brute_force_optimal",
    "divergence_report",
    "gap_certificate",
]

# Hard ceiling on |feasible schedules|^horizon for the exhaustive oracle.
ORACLE_GUARD = 10**7


@dataclass(frozen=True)
class GapCertificate:
    """MGF cost vs dual lower bound on an r-scaled instance, against the
    closed-form gap cap ``gap_bound`` (valid when ``horizon_ok``)."""

    scale_r: int
    mgf_cost: float
    dual_bound: float
    gap: float
    gap_bound: float
    horizon_ok: bool


@dataclass(frozen=True)
class DivergenceReport:
    """Measured MGF-vs-relaxed disagreement against its closed-form cap.

    ``bound_applicable`` is False when some channel width exceeds one; the
    cap's derivation assumes unit widths, so then it is reported but should
    not be asserted.
    """

    mean_divergence: float
    divergence_bound: float
    slots_measured: int
    bound_applicable: bool


def dual_lower_bound(config: SystemConfig, settings: Optional[SubgradientSettings] = None) -> float:
    """Best dual value reached by ascent from the initial ages over the full
    horizon; a lower bound on the truncated cost of every feasible policy."""
    settings = settings if settings is not None else SubgradientSettings()
    state = AoIState.initial(config)
    return subgradient_ascent(config, state, config.horizon, settings).dual_value


def scale_instance(config_base: SystemConfig, r: int) -> SystemConfig:
    """Replicate every task r times within its source and multiply every
    compute budget and the channel pool by r; r=1 is the identity.

    This is the proportional scaling the gap certificates are stated for.
    For growing the task load against *fixed* resources (the task-count
    sweep of the synthetic benchmark), use ``replicate_tasks``.
    """
    if r < 1:
        raise ValueError("r must be >= 1")
    sources = []
    for src in config_base.sources:
        tasks = []
        for tc in src.tasks:
            tasks.extend([tc] * r)
        sources.append(SourceConfig(compute_budget=src.compute_budget * r, tasks=tasks))
    return SystemConfig(
        num_sources=config_base.num_sources,
        num_channels=config_base.num_channels * r,
        discount=config_base.discount,
        horizon=config_base.horizon,
        aoi_cap=config_base.aoi_cap,
        initial_aoi=config_base.initial_aoi,
        sources=sources,
    )


def replicate_tasks(config_base: SystemConfig, r: int) -> SystemConfig:
    """Replicate every task r times within its source, keeping all budgets
    fixed; the contention grows with r. r=1 is the identity."""
    if r < 1:
        raise ValueError("r must be >= 1")
    sources = []
    for src in config_base.sources:
        tasks = []
        for tc in src.tasks:
            tasks.extend([tc] * r)
        sources.append(SourceConfig(compute_budget=src.compute_budget, tasks=tasks))
    return SystemConfig(
        num_sources=config_base.num_sources,
        num_channels=config_base.num_channels,
        discount=config_base.discount,
        horizon=config_base.horizon,
        aoi_cap=config_base.aoi_cap,
        initial_aoi=config_base.initial_aoi,
        sources=sources,
    )


def optimality_gap_bound(config_base: SystemConfig, r: int) -> tuple[float, bool]:
    """Closed-form cap on (MGF cost - optimal cost) for the r-scaled instance.

    With (p_low, p_high) bounding every weighted penalty the tables evaluate,

        cap = (1 / sum_m sqrt(r*k_m))
              * ( 2*M*(p_high-p_low)*gamma/(1-gamma)^3
                  + (p_high-p_low)*gamma/(1-gamma) )

    valid once the horizon satisfies T >= log_{1/gamma}(sum_m sqrt(r*k_m));
    the returned flag reports that premise.
    """
    if r < 1:
        raise ValueError("r must be >= 1")
    scaled = scale_instance(config_base, r)
    p_low, p_high = effective_penalty_bounds(scaled)
    gamma = config_base.discount
    m = config_base.num_sources
    sqrt_sum = sum(math.sqrt(r * len(src.tasks)) for src in config_base.sources)
    spread = p_high - p_low
    rhs = (1.0 / sqrt_sum) * (
        2.0 * m * spread * gamma / (1.0 - gamma) ** 3 + spread * gamma / (1.0 - gamma)
    )
    horizon_ok = config_base.horizon >= math.log(sqrt_sum) / math.log(1.0 / gamma)
    return rhs, horizon_ok


def brute_force_optimal(config: SystemConfig) -> tuple[float, list[ActionMatrix]]:
    """Exact truncated optimum by exhaustive search over feasible schedules.

    Enumerates every feasible per-slot action vector, then searches all
    horizon-length sequences, memoizing on (slot, ages clamped at aoi_cap);
    deterministic dynamics make distinct prefixes collide on the same state.
    The clamped memo key is exact whenever initial age + horizon stays within
    aoi_cap (the intended regime for oracle-sized instances). Guarded to
    |feasible|^horizon <= 10^7.
    """
    k = num_tasks(config)
    if 2**k > 2**22:
        raise ValueError(f"too many tasks for exhaustive enumeration: {k}")
    feasible = [
        vec
        for vec in itertools.product((0, 1), repeat=k)
        if not action_violations(config, ActionMatrix(vec, 0))
    ]
    if len(feasible) ** config.horizon > ORACLE_GUARD:
        raise ValueError(
            f"{len(feasible)} feasible schedules over horizon {config.horizon} "
            f"exceeds the enumeration guard {ORACLE_GUARD}"
        )
    gamma = config.discount
    cap = config.aoi_cap
    t_max = config.horizon
    memo: dict = {}

    def solve(slot: int, ages: tuple[int, ...]) -> tuple[float, Optional[tuple[int, ...]]]:
        if slot == t_max:
            return 0.0, None
        key = (slot, ages)
        hit = memo.get(key)
        if hit is not None:
            return hit
        cost_now = slot_cost(config, AoIState(ages))
        best_val = math.inf
        best_act: Optional[tuple[int, ...]] = None
        for vec in feasible:
            nxt = tuple(1 if a else min(d + 1, cap) for d, a in zip(ages, vec))
            val, _ = solve(slot + 1, nxt)
            if val < best_val:
                best_val = val
                best_act = vec
        result = (cost_now + gamma * best_val, best_act)
        memo[key] = result
        return result

    start = tuple(min(a, cap) for a in AoIState.initial(config).aoi)
    total, _ = solve(0, start)

    sequence: list[ActionMatrix] = []
    ages = start
    for t in range(t_max):
        _, act = memo[(t, ages)]
        assert act is not None
        sequence.append(ActionMatrix(act, t))
        ages = tuple(1 if a else min(d + 1, cap) for d, a in zip(ages, act))
    return total, sequence


def divergence_report(config: SystemConfig, mgf_run: SimResult) -> DivergenceReport:
    """Summarize an MGF run's per-slot disagreement with the relaxed optimum."""
    if mgf_run.divergence_trace is None:
        raise ValueError("run carries no divergence trace; only MGF runs record one")
    trace = mgf_run.divergence_trace
    mean = sum(trace) / len(trace)
    k_per_source = [len(src.tasks) for src in config.sources]
    bound = sum(math.sqrt(km) for km in k_per_source) + math.sqrt(sum(k_per_source))
    unit_widths = all(
        tc.channel_width == 1 for src in config.sources for tc in src.tasks
    )
    return DivergenceReport(
        mean_divergence=mean,
        divergence_bound=bound,
        slots_measured=len(trace),
        bound_applicable=unit_widths,
    )


def gap_certificate(
    config_base: SystemConfig,
    r: int,
    settings: Optional[SubgradientSettings] = None,
    reoptimize_every: int = 1,
) -> GapCertificate:
    """Run MGF and the dual ascent on the r-scaled instance and assemble the
    gap certificate against the closed-form cap."""
    from .policies import Mgf
    from .sim import run

    settings = settings if settings is not None else SubgradientSettings()
    scaled = scale_instance(config_base, r)
    mgf_cost = run(
        scaled, Mgf(settings=settings, reoptimize_every=reoptimize_every)
    ).discounted_cost
    bound = dual_lower_bound(scaled, settings)
    rhs, horizon_ok = optimality_gap_bound(config_base, r)
    return GapCertificate(
        scale_r=r,
        mgf_cost=mgf_cost,
        dual_bound=bound,
        gap=mgf_cost - bound,
        gap_bound=rhs,
        horizon_ok=horizon_ok,
    )
