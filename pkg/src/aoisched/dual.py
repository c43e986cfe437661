"""Lagrangian dual of the truncated scheduling problem, and its maximization.

With time-invariant prices (lambda_1..lambda_M for the per-source compute
budgets, mu for the shared channel pool) the relaxed problem decouples per
task, so the dual value at a state with h slots to go is

    (1/K) * [ sum_tasks V[h][age] - sum_m lambda_m * C_m * G - mu * N * G ]

where G = (1-gamma^h)/(1-gamma) prices the budgets over the h remaining
slots. The dual is concave in the prices and is maximized by projected
subgradient ascent with diminishing steps; the subgradients are the exact
discounted constraint violations of the relaxed optimal policy (transitions
are deterministic, so no sampling is involved). Any price point yields a
valid lower bound on every feasible policy's truncated cost.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Sequence, Union

import numpy as np

from .dp import (
    BatchTables,
    MultiplierSet,
    TaskClasses,
    batch_occupancies,
    build_batch,
    get_task_classes,
)
from .model import AoIState, SystemConfig

__all__ = [
    "SubgradientSettings",
    "DualResult",
    "evaluate_dual",
    "subgradient_ascent",
    "discounted_budget_factor",
]


@dataclass(frozen=True)
class SubgradientSettings:
    """Ascent controls: iteration budget, base step sizes (per source and for
    the channel price), and an optional warm start."""

    iterations: int = 100
    base_step_source: Union[float, Sequence[float]] = 1.0
    base_step_channel: float = 1.0
    warm_start: Optional[MultiplierSet] = None

    def __post_init__(self) -> None:
        if self.iterations < 1:
            raise ValueError("iterations must be >= 1")
        steps = np.atleast_1d(np.asarray(self.base_step_source, dtype=np.float64))
        if np.any(steps <= 0) or self.base_step_channel <= 0:
            raise ValueError("step sizes must be positive")

    def source_steps(self, num_sources: int) -> np.ndarray:
        steps = np.atleast_1d(np.asarray(self.base_step_source, dtype=np.float64))
        if steps.size == 1:
            return np.full(num_sources, steps[0])
        if steps.size != num_sources:
            raise ValueError("base_step_source length must equal the number of sources")
        return steps.copy()


@dataclass(frozen=True)
class DualResult:
    """Best price point seen during an ascent run and its dual value."""

    multipliers: MultiplierSet
    dual_value: float
    per_task_occupancy: tuple[float, ...]
    iterations_run: int


def discounted_budget_factor(gamma: float, horizon_to_go: int) -> float:
    """G = sum_{s=0}^{h-1} gamma^s."""
    return (1.0 - gamma**horizon_to_go) / (1.0 - gamma)


def _budget_arrays(config: SystemConfig) -> np.ndarray:
    return np.asarray([src.compute_budget for src in config.sources], dtype=np.float64)


def _dual_point(
    config: SystemConfig,
    classes: TaskClasses,
    tables: BatchTables,
    multipliers: MultiplierSet,
    aoi: np.ndarray,
) -> tuple[float, np.ndarray, float]:
    """Dual value, per-task occupancies, and discounted channel usage at one
    price point whose tables are already built."""
    gamma = config.discount
    k = classes.num_tasks
    g_budget = discounted_budget_factor(gamma, tables.horizon)
    col0 = np.minimum(aoi, classes.aoi_cap) - 1
    relaxed_cost = float(tables.v_top[classes.task_class, col0].sum())
    lam = np.asarray(multipliers.source_price)
    budget_term = float(lam @ _budget_arrays(config)) * g_budget
    channel_term = multipliers.channel_price * config.num_channels * g_budget
    value = (relaxed_cost - budget_term - channel_term) / k
    occ = batch_occupancies(tables, classes, gamma, aoi)
    channel_usage = float(occ @ classes.task_width)
    return value, occ, channel_usage


def evaluate_dual(
    config: SystemConfig,
    state: AoIState,
    multipliers: MultiplierSet,
    horizon_to_go: int,
) -> tuple[float, np.ndarray, float]:
    """Dual value at fixed prices, with the relaxed policy's per-task
    discounted occupancies and total discounted channel usage."""
    classes = get_task_classes(config)
    tables = build_batch(config, multipliers, horizon_to_go, classes)
    return _dual_point(config, classes, tables, multipliers, state.as_array())


def subgradient_ascent(
    config: SystemConfig,
    state: AoIState,
    horizon_to_go: int,
    settings: SubgradientSettings,
) -> DualResult:
    """Maximize the dual by projected subgradient ascent.

    Iteration i evaluates the current prices, then moves each price along its
    discounted constraint violation with step base/(K*i) and projects back to
    the nonnegative orthant. Subgradient ascent is not monotone, so the best
    evaluated iterate is returned. A fixed point (no price moved) ends the
    run early since every later iterate would be identical.
    """
    classes = get_task_classes(config)
    gamma = config.discount
    k = classes.num_tasks
    m = config.num_sources
    budgets = _budget_arrays(config)
    g_budget = discounted_budget_factor(gamma, horizon_to_go)
    beta_src = settings.source_steps(m)
    beta_ch = settings.base_step_channel

    if settings.warm_start is not None:
        lam = np.asarray(settings.warm_start.source_price, dtype=np.float64).copy()
        mu = settings.warm_start.channel_price
    else:
        lam = np.zeros(m)
        mu = 0.0

    aoi = state.as_array()
    best_value = -np.inf
    best_lam = lam.copy()
    best_mu = mu
    best_occ: Optional[np.ndarray] = None
    iterations_run = 0

    for i in range(1, settings.iterations + 1):
        multipliers = MultiplierSet(lam, mu)
        tables = build_batch(config, multipliers, horizon_to_go, classes)
        value, occ, channel_usage = _dual_point(config, classes, tables, multipliers, aoi)
        iterations_run = i
        if value > best_value:
            best_value = value
            best_lam = lam.copy()
            best_mu = mu
            best_occ = occ

        occ_per_source = np.bincount(classes.task_source, weights=occ, minlength=m)
        grad_lam = occ_per_source - budgets * g_budget
        grad_mu = channel_usage - config.num_channels * g_budget
        new_lam = np.maximum(lam + (beta_src / (k * i)) * grad_lam, 0.0)
        new_mu = max(mu + (beta_ch / (k * i)) * grad_mu, 0.0)
        if np.array_equal(new_lam, lam) and new_mu == mu:
            break
        lam = new_lam
        mu = new_mu

    assert best_occ is not None
    return DualResult(
        multipliers=MultiplierSet(best_lam, best_mu),
        dual_value=best_value,
        per_task_occupancy=tuple(float(x) for x in best_occ),
        iterations_run=iterations_run,
    )
