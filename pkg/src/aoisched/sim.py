"""Discrete-time simulation loop.

Each slot charges the weighted penalty of every task at its current age,
normalized by the task count K and discounted by gamma^t, then applies the
slot's schedule: a scheduled task's age resets to 1, every other age grows
by one. Cost is charged on the pre-transition state, so the slot-0 cost is
policy-independent. Runs are deterministic given (config, policy, seed).
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

from .dp import MultiplierSet
from .model import (
    AoIState,
    SystemConfig,
    effective_penalty_bounds,
    num_tasks,
    penalty_eval,
    task_ids,
)
from .policies import (
    ActionMatrix,
    Maf,
    Mgf,
    PolicyKind,
    Random,
    action_violations,
    maf_decide,
    mgf_decide,
    random_decide,
)

__all__ = ["SimResult", "step", "run", "slot_cost"]


@dataclass(frozen=True)
class SimResult:
    """Everything observable about one run.

    ``discounted_cost`` is the truncated objective sum_t gamma^t/K * sum w*p;
    ``raw_cost`` drops the 1/K normalization. ``per_slot_cost[t]`` is the
    discounted normalized slot cost, ``aoi_trace[t]`` the pre-transition ages,
    ``resource_usage[t]`` the (per-source computations, channels) consumed.
    For MGF runs ``divergence_trace[t]`` counts tasks whose action differs
    from the price-relaxed optimum at the same multipliers. ``tail_bound``
    bounds what truncating the infinite horizon at T can hide:
    gamma^T * (p_high - p_low) / (1 - gamma).
    """

    discounted_cost: float
    raw_cost: float
    per_slot_cost: tuple[float, ...]
    aoi_trace: tuple[tuple[int, ...], ...]
    action_trace: tuple[ActionMatrix, ...]
    resource_usage: tuple[tuple[tuple[int, ...], int], ...]
    tail_bound: float
    divergence_trace: Optional[tuple[int, ...]] = None


def slot_cost(config: SystemConfig, state: AoIState) -> float:
    """Normalized instantaneous cost (1/K) * sum_tasks w * p(age)."""
    total = 0.0
    flat = 0
    for src in config.sources:
        for tc in src.tasks:
            total += tc.weight * penalty_eval(tc.penalty, state.aoi[flat])
            flat += 1
    return total / flat


def step(
    config: SystemConfig, state: AoIState, actions: ActionMatrix
) -> tuple[AoIState, float]:
    """Charge the current state's cost, then advance the ages.

    Rejects infeasible schedules outright; policies already guarantee
    feasibility, this is defense in depth.
    """
    violations = action_violations(config, actions)
    if violations:
        raise ValueError("infeasible schedule: " + "; ".join(violations))
    cost = slot_cost(config, state)
    nxt = [1 if a else age + 1 for age, a in zip(state.aoi, actions.actions)]
    return AoIState(nxt), cost


def _usage(config: SystemConfig, actions: ActionMatrix) -> tuple[tuple[int, ...], int]:
    compute = [0] * config.num_sources
    channels = 0
    for tid, a in zip(task_ids(config), actions.actions):
        if a:
            compute[tid.source_index] += 1
            channels += config.sources[tid.source_index].tasks[tid.task_index].channel_width
    return tuple(compute), channels


def run(config: SystemConfig, policy: PolicyKind, seed: int = 0) -> SimResult:
    """Drive ``policy`` from the configured initial ages over the full horizon."""
    from .model import validate_config

    violations = validate_config(config)
    if violations:
        raise ValueError("invalid config: " + "; ".join(violations))

    gamma = config.discount
    t_max = config.horizon
    state = AoIState.initial(config)
    rng = None
    if isinstance(policy, Random):
        rng = np.random.default_rng(policy.seed if policy.seed is not None else seed)

    cached: Optional[MultiplierSet] = None
    per_slot: list[float] = []
    aoi_trace: list[tuple[int, ...]] = []
    action_trace: list[ActionMatrix] = []
    usage: list[tuple[tuple[int, ...], int]] = []
    divergence: list[int] = []

    discounted = 0.0
    g = 1.0
    for t in range(t_max):
        if isinstance(policy, Mgf):
            actions, dual_result, gain_vector = mgf_decide(
                config,
                state,
                t,
                cached_multipliers=cached,
                settings=policy.settings,
                reoptimize_every=policy.reoptimize_every,
            )
            cached = dual_result.multipliers
            relaxed = [1 if x > 0.0 else 0 for x in gain_vector.gains]
            divergence.append(
                sum(1 for r, a in zip(relaxed, actions.actions) if r != a)
            )
        elif isinstance(policy, Maf):
            actions = maf_decide(config, state, t)
        elif isinstance(policy, Random):
            actions = random_decide(config, state, t, rng)
        else:
            raise TypeError(f"unknown policy {policy!r}")

        aoi_trace.append(state.aoi)
        action_trace.append(actions)
        usage.append(_usage(config, actions))
        state, cost = step(config, state, actions)
        per_slot.append(g * cost)
        discounted += g * cost
        g *= gamma

    p_low, p_high = effective_penalty_bounds(config)
    tail = gamma**t_max * (p_high - p_low) / (1.0 - gamma)
    return SimResult(
        discounted_cost=discounted,
        raw_cost=discounted * num_tasks(config),
        per_slot_cost=tuple(per_slot),
        aoi_trace=tuple(aoi_trace),
        action_trace=tuple(action_trace),
        resource_usage=tuple(usage),
        tail_bound=tail,
        divergence_trace=tuple(divergence) if isinstance(policy, Mgf) else None,
    )
