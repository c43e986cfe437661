"""Per-slot schedulers.

All three policies fill one slot's action matrix greedily in some priority
order, accepting a task only if both its source's computation budget and the
shared channel pool still fit it, and continuing past rejections so that a
narrower task later in the order can still use leftover channels.

  * maximum-gain-first (MGF): reoptimizes the dual prices from the current
    state, ranks tasks by gain index, and only ever schedules positive gains;
  * maximum-age-first (MAF): ranks all tasks by current AoI;
  * random: uniform random order over all tasks, deterministic per seed.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import Optional, Union

import numpy as np

from .dp import (
    GainVector,
    MultiplierSet,
    batch_gains,
    build_batch,
    get_task_classes,
)
from .dual import DualResult, SubgradientSettings, evaluate_dual, subgradient_ascent
from .model import AoIState, SystemConfig, task_ids

__all__ = [
    "ActionMatrix",
    "Mgf",
    "Maf",
    "Random",
    "PolicyKind",
    "action_violations",
    "mgf_decide",
    "maf_decide",
    "random_decide",
]


@dataclass(frozen=True)
class ActionMatrix:
    """Binary schedule for one slot, flat source-major task order."""

    actions: tuple[int, ...]
    slot: int

    def __init__(self, actions, slot: int) -> None:
        object.__setattr__(self, "actions", tuple(int(a) for a in actions))
        object.__setattr__(self, "slot", int(slot))


def action_violations(config: SystemConfig, actions: ActionMatrix) -> list[str]:
    """Resource-constraint violations of a slot schedule (empty if feasible)."""
    out: list[str] = []
    flat = actions.actions
    if len(flat) != sum(len(s.tasks) for s in config.sources):
        return [f"action vector has length {len(flat)}, expected task count"]
    pos = 0
    channel_used = 0
    for m, src in enumerate(config.sources):
        k_m = len(src.tasks)
        used = sum(flat[pos : pos + k_m])
        if used > src.compute_budget:
            out.append(
                f"source {m} computes {used} features, budget is {src.compute_budget}"
            )
        for j, tc in enumerate(src.tasks):
            if flat[pos + j]:
                channel_used += tc.channel_width
        pos += k_m
    if channel_used > config.num_channels:
        out.append(
            f"schedule occupies {channel_used} channels, only {config.num_channels} exist"
        )
    return out


# --- policy selection types -------------------------------------------------


@dataclass(frozen=True)
class Mgf:
    """Reoptimized maximum-gain-first; prices refreshed every
    ``reoptimize_every`` slots and warm-started in between."""

    settings: SubgradientSettings = field(default_factory=SubgradientSettings)
    reoptimize_every: int = 1

    def __post_init__(self) -> None:
        if self.reoptimize_every < 1:
            raise ValueError("reoptimize_every must be >= 1")


@dataclass(frozen=True)
class Maf:
    """Maximum-age-first baseline."""


@dataclass(frozen=True)
class Random:
    """Uniform random order baseline; ``seed`` defaults to the run seed."""

    seed: Optional[int] = None


PolicyKind = Union[Mgf, Maf, Random]


# --- greedy fill ------------------------------------------------------------


def _greedy_fill(config: SystemConfig, order: list[int], slot: int) -> ActionMatrix:
    """Accept candidates in the given flat-index order while both budgets fit;
    rejected candidates are dropped and the scan continues."""
    k = sum(len(s.tasks) for s in config.sources)
    actions = [0] * k
    compute_used = [0] * config.num_sources
    channel_used = 0
    ids = task_ids(config)
    for flat in order:
        m = ids[flat].source_index
        width = config.sources[m].tasks[ids[flat].task_index].channel_width
        if compute_used[m] + 1 <= config.sources[m].compute_budget and (
            channel_used + width <= config.num_channels
        ):
            actions[flat] = 1
            compute_used[m] += 1
            channel_used += width
    return ActionMatrix(actions, slot)


# --- deciders ----------------------------------------------------------------


def mgf_decide(
    config: SystemConfig,
    state: AoIState,
    slot: int,
    cached_multipliers: Optional[MultiplierSet] = None,
    settings: Optional[SubgradientSettings] = None,
    reoptimize_every: int = 1,
) -> tuple[ActionMatrix, DualResult, GainVector]:
    """One MGF slot decision.

    Reoptimizes the prices by subgradient ascent at the remaining horizon
    (warm-started from ``cached_multipliers``), or reuses them unchanged on
    slots where ``slot % reoptimize_every != 0``. Tasks with positive gain
    are then scheduled greedily in decreasing gain order, ties to the
    lexicographically smallest (source, task).
    """
    if not (0 <= slot < config.horizon):
        raise ValueError(f"slot {slot} outside horizon {config.horizon}")
    settings = settings if settings is not None else SubgradientSettings()
    horizon_to_go = config.horizon - slot

    if cached_multipliers is None or slot % reoptimize_every == 0:
        ascent_settings = replace(settings, warm_start=cached_multipliers)
        dual_result = subgradient_ascent(config, state, horizon_to_go, ascent_settings)
    else:
        value, occ, _ = evaluate_dual(config, state, cached_multipliers, horizon_to_go)
        dual_result = DualResult(
            multipliers=cached_multipliers,
            dual_value=value,
            per_task_occupancy=tuple(float(x) for x in occ),
            iterations_run=0,
        )

    classes = get_task_classes(config)
    tables = build_batch(config, dual_result.multipliers, horizon_to_go, classes)
    gains = batch_gains(tables, classes, config, state.as_array())
    gain_vector = GainVector(tuple(float(g) for g in gains), slot, state)

    ids = task_ids(config)
    candidates = [flat for flat in range(len(ids)) if gains[flat] > 0.0]
    candidates.sort(key=lambda flat: (-gains[flat], ids[flat]))
    actions = _greedy_fill(config, candidates, slot)
    return actions, dual_result, gain_vector


def maf_decide(config: SystemConfig, state: AoIState, slot: int) -> ActionMatrix:
    """Schedule in decreasing-AoI order (all tasks eligible; AoI is always
    >= 1), ties to the lexicographically smallest (source, task)."""
    ids = task_ids(config)
    order = sorted(range(len(ids)), key=lambda flat: (-state.aoi[flat], ids[flat]))
    return _greedy_fill(config, order, slot)


def random_decide(
    config: SystemConfig, state: AoIState, slot: int, rng: np.random.Generator
) -> ActionMatrix:
    """Schedule in a uniform random order (drawing tasks one at a time
    without replacement); deterministic given the generator state."""
    k = sum(len(s.tasks) for s in config.sources)
    order = [int(x) for x in rng.permutation(k)]
    return _greedy_fill(config, order, slot)
