"""Per-task finite-horizon dynamic programming for the price-relaxed subproblem.

With nonnegative prices (one per source for computation, one shared for
channels), the relaxed problem splits into one tiny MDP per task whose state
is its AoI. Backward induction over time-to-go s and ages delta = 1..aoi_cap:

    V[s][delta] = w*p(delta) + min( gamma*V[s-1][min(delta+1, cap)],
                                    lambda_m + mu*n + gamma*V[s-1][1] )

with V[0][.] = 0. Ages beyond the cap reuse the cap row (V(delta) ~ V(cap)
for delta > cap), which is exact whenever live ages stay within the cap.

The gain index of a task is Q(delta, passive) - Q(delta, active): the
discounted error reduction bought by scheduling it now. The instantaneous
penalty cancels in the difference.

Tasks sharing (source, weight, channel width, penalty) solve identical
subproblems; they are pooled into classes and all class tables are built in
one vectorized sweep. Cost per sweep is O(aoi_cap * horizon) per class.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache
from typing import Optional

import numpy as np

from .model import (
    AoIState,
    SystemConfig,
    TaskId,
    _penalty_key,
    penalty_curve,
    penalty_eval,
    task_config,
    task_ids,
)

__all__ = [
    "MultiplierSet",
    "ValueTable",
    "GainVector",
    "TableCache",
    "TaskClasses",
    "BatchTables",
    "backward_induction",
    "q_value",
    "gain_index",
    "relaxed_rollout",
    "build_batch",
    "batch_gains",
    "batch_occupancies",
]

# Multipliers closer than this are considered the same table (cache key grain).
_PRICE_QUANTUM = 1e-9


@dataclass(frozen=True)
class MultiplierSet:
    """Nonnegative prices: one per-source computation price and one shared
    channel price."""

    source_price: tuple[float, ...]
    channel_price: float

    def __init__(self, source_price, channel_price: float) -> None:
        prices = tuple(float(x) for x in source_price)
        if any(x < 0 for x in prices) or channel_price < 0:
            raise ValueError("multipliers must be nonnegative")
        object.__setattr__(self, "source_price", prices)
        object.__setattr__(self, "channel_price", float(channel_price))

    @classmethod
    def zeros(cls, num_sources: int) -> "MultiplierSet":
        return cls((0.0,) * num_sources, 0.0)


@dataclass(frozen=True)
class ValueTable:
    """Value table of one task's relaxed subproblem.

    ``values[s][d]`` is the optimal cost-to-go with s slots remaining at AoI
    d+1 (row 0 is the all-zero terminal row). ``active[s][d]`` is the optimal
    action there, with ties resolved to passive.
    """

    task: TaskId
    horizon: int
    multipliers: MultiplierSet
    values: np.ndarray
    active: np.ndarray

    @property
    def aoi_cap(self) -> int:
        return self.values.shape[1]


@dataclass(frozen=True)
class GainVector:
    """Gain index of every task, evaluated at one slot's AoI state."""

    gains: tuple[float, ...]
    slot: int
    state: AoIState


class TableCache:
    """Value tables keyed by (task class, horizon, quantized multipliers).

    Tasks of the same class share one entry, so replicated instances reuse
    tables across replicas. Purely an evaluation-count optimization; results
    are identical with or without it.
    """

    def __init__(self) -> None:
        self._entries: dict = {}
        self.hits = 0
        self.misses = 0

    @staticmethod
    def _quantize(price: float) -> int:
        return int(round(price / _PRICE_QUANTUM))

    def key(self, class_key, horizon: int, source_price: float, channel_price: float):
        return (class_key, horizon, self._quantize(source_price), self._quantize(channel_price))

    def get(self, key):
        entry = self._entries.get(key)
        if entry is None:
            self.misses += 1
        else:
            self.hits += 1
        return entry

    def put(self, key, value) -> None:
        self._entries[key] = value

    def clear(self) -> None:
        self._entries.clear()
        self.hits = 0
        self.misses = 0


# ---------------------------------------------------------------------------
# Class pooling
# ---------------------------------------------------------------------------


class TaskClasses:
    """Flat task/class layout of one instance, precomputed for array code.

    A class pools tasks with identical (source, weight, channel width,
    penalty); its members share one value table per (horizon, multipliers).
    """

    def __init__(self, config: SystemConfig) -> None:
        keys: list = []
        key_to_idx: dict = {}
        wp_rows: list[np.ndarray] = []
        class_source: list[int] = []
        class_width: list[int] = []
        ids = task_ids(config)
        k = len(ids)
        self.task_class = np.empty(k, dtype=np.intp)
        self.task_source = np.empty(k, dtype=np.intp)
        self.task_width = np.empty(k, dtype=np.float64)
        for flat, tid in enumerate(ids):
            tc = task_config(config, tid)
            key = (tid.source_index, tc.weight, tc.channel_width, _penalty_key(tc.penalty))
            idx = key_to_idx.get(key)
            if idx is None:
                idx = len(keys)
                key_to_idx[key] = idx
                keys.append(key)
                wp_rows.append(tc.weight * penalty_curve(tc.penalty, config.aoi_cap))
                class_source.append(tid.source_index)
                class_width.append(tc.channel_width)
            self.task_class[flat] = idx
            self.task_source[flat] = tid.source_index
            self.task_width[flat] = tc.channel_width
        self.keys = keys
        self.key_to_idx = key_to_idx
        self.weighted_penalty = np.vstack(wp_rows)  # (num_classes, aoi_cap)
        self.class_source = np.asarray(class_source, dtype=np.intp)
        self.class_width = np.asarray(class_width, dtype=np.float64)
        self.num_classes = len(keys)
        self.num_tasks = k
        self.aoi_cap = config.aoi_cap
        # lookup column for the aged state min(delta+1, cap), 0-based
        self.next_col = np.minimum(np.arange(1, config.aoi_cap + 1), config.aoi_cap - 1)

    def class_of(self, config: SystemConfig, task: TaskId) -> int:
        tc = task_config(config, task)
        key = (task.source_index, tc.weight, tc.channel_width, _penalty_key(tc.penalty))
        return self.key_to_idx[key]


@lru_cache(maxsize=32)
def _classes_cached(config: SystemConfig) -> TaskClasses:
    return TaskClasses(config)


def get_task_classes(config: SystemConfig) -> TaskClasses:
    return _classes_cached(config)


@dataclass
class BatchTables:
    """Stacked per-class tables at one (horizon, multipliers) point.

    ``v_top``/``v_prev`` are the rows at time-to-go h and h-1; ``active``
    holds the optimal action grid for every time-to-go (index 0 unused).
    """

    horizon: int
    price: np.ndarray  # (num_classes,) lambda_m + mu*n per class
    v_top: np.ndarray  # (num_classes, aoi_cap)
    v_prev: np.ndarray  # (num_classes, aoi_cap)
    active: np.ndarray  # (horizon+1, num_classes, aoi_cap) bool


def build_batch(
    config: SystemConfig,
    multipliers: MultiplierSet,
    horizon_to_go: int,
    classes: Optional[TaskClasses] = None,
) -> BatchTables:
    """One backward-induction sweep for every task class simultaneously."""
    if horizon_to_go < 1:
        raise ValueError("horizon_to_go must be >= 1")
    cls = classes if classes is not None else get_task_classes(config)
    gamma = config.discount
    lam = np.asarray(multipliers.source_price, dtype=np.float64)
    price = lam[cls.class_source] + multipliers.channel_price * cls.class_width
    wp = cls.weighted_penalty
    nxt = cls.next_col
    v = np.zeros_like(wp)
    v_prev = v
    active = np.empty((horizon_to_go + 1, cls.num_classes, cls.aoi_cap), dtype=bool)
    active[0] = False
    for s in range(1, horizon_to_go + 1):
        stay = gamma * v[:, nxt]
        act = (price + gamma * v[:, 0])[:, None]
        a = act < stay  # tie keeps the passive action
        active[s] = a
        v_prev = v
        v = wp + np.where(a, act, stay)
    return BatchTables(horizon=horizon_to_go, price=price, v_top=v, v_prev=v_prev, active=active)


# ---------------------------------------------------------------------------
# Public per-task surface
# ---------------------------------------------------------------------------


def backward_induction(
    config: SystemConfig,
    task: TaskId,
    multipliers: MultiplierSet,
    horizon_to_go: int,
    cache: Optional[TableCache] = None,
) -> ValueTable:
    """Solve one task's relaxed subproblem over ``horizon_to_go`` slots.

    Returns the full (horizon+1, aoi_cap) table; row s is the cost-to-go with
    s slots remaining. O(aoi_cap * horizon_to_go).
    """
    if horizon_to_go < 1:
        raise ValueError("horizon_to_go must be >= 1")
    if not (0 <= task.source_index < len(config.sources)):
        raise ValueError(f"invalid task id {task}")
    if not (0 <= task.task_index < len(config.sources[task.source_index].tasks)):
        raise ValueError(f"invalid task id {task}")

    cls = get_task_classes(config)
    c = cls.class_of(config, task)
    key = None
    if cache is not None:
        key = cache.key(
            cls.keys[c],
            horizon_to_go,
            multipliers.source_price[task.source_index],
            multipliers.channel_price,
        )
        hit = cache.get(key)
        if hit is not None:
            values, active = hit
            return ValueTable(task, horizon_to_go, multipliers, values, active)

    gamma = config.discount
    wp = cls.weighted_penalty[c]
    price = multipliers.source_price[task.source_index] + (
        multipliers.channel_price * cls.class_width[c]
    )
    nxt = cls.next_col
    cap = cls.aoi_cap
    values = np.zeros((horizon_to_go + 1, cap))
    active = np.zeros((horizon_to_go + 1, cap), dtype=bool)
    for s in range(1, horizon_to_go + 1):
        stay = gamma * values[s - 1][nxt]
        act = price + gamma * values[s - 1][0]
        a = act < stay
        active[s] = a
        values[s] = wp + np.where(a, act, stay)
    values.setflags(write=False)
    active.setflags(write=False)
    if cache is not None:
        cache.put(key, (values, active))
    return ValueTable(task, horizon_to_go, multipliers, values, active)


def q_value(table: ValueTable, config: SystemConfig, aoi: int, action: int) -> float:
    """Action value at the table's top row: instantaneous weighted penalty
    plus the discounted continuation after aging (passive) or refresh (active,
    paying the prices)."""
    if action not in (0, 1):
        raise ValueError("action must be 0 or 1")
    tc = task_config(config, table.task)
    gamma = config.discount
    cap = table.aoi_cap
    prev = table.values[table.horizon - 1]
    wp = tc.weight * penalty_eval(tc.penalty, aoi)
    if action == 0:
        return wp + gamma * prev[min(aoi + 1, cap) - 1]
    price = table.multipliers.source_price[table.task.source_index] + (
        table.multipliers.channel_price * tc.channel_width
    )
    return wp + price + gamma * prev[0]


def gain_index(table: ValueTable, config: SystemConfig, aoi: int) -> float:
    """Q(aoi, passive) - Q(aoi, active): the discounted error reduction from
    scheduling now. The weighted penalty cancels, leaving
    gamma*(V_prev(aged) - V_prev(1)) minus the prices; computed as the
    literal Q difference so the identity with q_value is exact."""
    return q_value(table, config, aoi, 0) - q_value(table, config, aoi, 1)


def relaxed_rollout(
    config: SystemConfig,
    task: TaskId,
    table: ValueTable,
    start_aoi: int,
) -> tuple[list[int], float, float]:
    """Forward-simulate the table's optimal per-task policy from ``start_aoi``.

    Returns (action sequence, discounted occupancy sum_t gamma^t a_t,
    discounted subproblem cost). The live age is unbounded; the table (and
    the penalty charged here, to stay consistent with the table's values)
    is read at the clamped age.
    """
    if start_aoi < 1:
        raise ValueError("start_aoi must be >= 1")
    tc = task_config(config, task)
    gamma = config.discount
    cap = table.aoi_cap
    price = table.multipliers.source_price[task.source_index] + (
        table.multipliers.channel_price * tc.channel_width
    )
    wp = tc.weight * penalty_curve(tc.penalty, cap)
    actions: list[int] = []
    occupancy = 0.0
    cost = 0.0
    g = 1.0
    delta = start_aoi
    for s in range(table.horizon, 0, -1):
        col = min(delta, cap) - 1
        a = bool(table.active[s][col])
        actions.append(int(a))
        cost += g * wp[col]
        if a:
            occupancy += g
            cost += g * price
            delta = 1
        else:
            delta += 1
        g *= gamma
    return actions, occupancy, cost


# ---------------------------------------------------------------------------
# Batched evaluation over all tasks
# ---------------------------------------------------------------------------


def batch_gains(
    tables: BatchTables, classes: TaskClasses, config: SystemConfig, aoi: np.ndarray
) -> np.ndarray:
    """Gain index of every task at its live age.

    Replicates q_value's arithmetic exactly (same operand order, live-age
    penalty), so entries match gain_index bit for bit.
    """
    gamma = config.discount
    wp = np.empty(classes.num_tasks)
    flat = 0
    for src in config.sources:
        for tc in src.tasks:
            wp[flat] = tc.weight * penalty_eval(tc.penalty, int(aoi[flat]))
            flat += 1
    col_aged = np.minimum(aoi, classes.aoi_cap - 1)  # 0-based column of min(aoi+1, cap)
    c = classes.task_class
    q_passive = wp + gamma * tables.v_prev[c, col_aged]
    q_active = wp + tables.price[c] + gamma * tables.v_prev[c, 0]
    return q_passive - q_active


def batch_occupancies(
    tables: BatchTables, classes: TaskClasses, gamma: float, aoi: np.ndarray
) -> np.ndarray:
    """Discounted occupancy of every task under its relaxed optimal policy,
    rolled out from the given live ages over the batch horizon."""
    col = np.minimum(aoi, classes.aoi_cap) - 1
    c = classes.task_class
    occ = np.zeros(classes.num_tasks)
    g = 1.0
    for s in range(tables.horizon, 0, -1):
        a = tables.active[s][c, col]
        occ += g * a
        col = np.where(a, 0, np.minimum(col + 1, classes.aoi_cap - 1))
        g *= gamma
    return occ
