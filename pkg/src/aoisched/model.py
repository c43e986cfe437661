"""Problem-instance data model.

A system instance consists of M sources sharing N channels. Source m can run
at most C_m feature computations per slot, and task (m, j) occupies n_{m,j}
channels when it transmits. Each task carries a weight and a penalty curve
mapping the age of its freshest delivered feature (AoI, in slots) to an
inference-error value. All types here are immutable after construction and
safe to share across workers.

Validation is data, not failure: malformed instances construct fine and
``validate_config`` reports every violated invariant with a readable path.
"""

from __future__ import annotations

import csv
import json
import math
import os
from dataclasses import dataclass, field
from typing import NamedTuple, Optional, Union

import numpy as np

__all__ = [
    "Linear",
    "Exponential",
    "Logarithmic",
    "Tabulated",
    "PenaltyFunction",
    "TaskConfig",
    "SourceConfig",
    "SystemConfig",
    "TaskId",
    "AoIState",
    "ConfigIOError",
    "penalty_eval",
    "penalty_curve",
    "validate_config",
    "effective_penalty_bounds",
    "task_ids",
    "num_tasks",
    "task_config",
    "load_config",
    "load_penalty_csv",
]


class ConfigIOError(Exception):
    """File-level ingestion failure (missing file, unreadable CSV, bad syntax)."""


# ---------------------------------------------------------------------------
# Penalty curves
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Linear:
    """p(delta) = slope * delta."""

    slope: float


@dataclass(frozen=True)
class Exponential:
    """p(delta) = exp(rate * delta)."""

    rate: float


@dataclass(frozen=True)
class Logarithmic:
    """p(delta) = scale * ln(delta).

    Natural log; a base-10 curve is the same shape with scale / ln(10).
    """

    scale: float


@dataclass(frozen=True)
class Tabulated:
    """Measured error-vs-AoI curve for delta = 1..L; clamps to the last value
    beyond the table (measured curves flatten out at large AoI)."""

    values: tuple[float, ...]

    def __init__(self, values) -> None:
        object.__setattr__(self, "values", tuple(float(v) for v in values))


PenaltyFunction = Union[Linear, Exponential, Logarithmic, Tabulated]


def penalty_eval(penalty: PenaltyFunction, aoi: int) -> float:
    """Evaluate a penalty curve at integer AoI >= 1.

    Total over all valid inputs and never clamped here: value-table lookups
    own the AoI-cap truncation, the curve itself is defined for every age.
    """
    if aoi < 1:
        raise ValueError(f"AoI must be >= 1, got {aoi}")
    if isinstance(penalty, Linear):
        return penalty.slope * aoi
    if isinstance(penalty, Exponential):
        return math.exp(penalty.rate * aoi)
    if isinstance(penalty, Logarithmic):
        return penalty.scale * math.log(aoi)
    if isinstance(penalty, Tabulated):
        return penalty.values[min(aoi, len(penalty.values)) - 1]
    raise TypeError(f"unknown penalty variant: {penalty!r}")


def penalty_curve(penalty: PenaltyFunction, aoi_cap: int) -> np.ndarray:
    """Vector of p(delta) for delta = 1..aoi_cap (index 0 is delta=1)."""
    delta = np.arange(1, aoi_cap + 1, dtype=np.float64)
    if isinstance(penalty, Linear):
        return penalty.slope * delta
    if isinstance(penalty, Exponential):
        return np.exp(penalty.rate * delta)
    if isinstance(penalty, Logarithmic):
        return penalty.scale * np.log(delta)
    if isinstance(penalty, Tabulated):
        vals = np.asarray(penalty.values, dtype=np.float64)
        idx = np.minimum(delta.astype(np.intp), len(vals)) - 1
        return vals[idx]
    raise TypeError(f"unknown penalty variant: {penalty!r}")


def _penalty_key(penalty: PenaltyFunction):
    """Hashable identity used to pool tasks into shared subproblem classes."""
    if isinstance(penalty, Linear):
        return ("linear", penalty.slope)
    if isinstance(penalty, Exponential):
        return ("exponential", penalty.rate)
    if isinstance(penalty, Logarithmic):
        return ("logarithmic", penalty.scale)
    return ("tabulated", penalty.values)


# ---------------------------------------------------------------------------
# Instance configuration
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class TaskConfig:
    """One inference task: channel footprint, priority weight, penalty curve.

    ``initial_aoi`` overrides the instance-wide starting age for this task.
    """

    channel_width: int
    weight: float
    penalty: PenaltyFunction
    initial_aoi: Optional[int] = None


@dataclass(frozen=True)
class SourceConfig:
    """One source: per-slot computation budget and its task list."""

    compute_budget: int
    tasks: tuple[TaskConfig, ...]

    def __init__(self, compute_budget: int, tasks) -> None:
        object.__setattr__(self, "compute_budget", compute_budget)
        object.__setattr__(self, "tasks", tuple(tasks))


@dataclass(frozen=True)
class SystemConfig:
    """Full problem instance.

    ``horizon`` is the number of simulated slots (t = 0..horizon-1) and the
    depth of the truncated planning problem; ``aoi_cap`` bounds the AoI range
    of value tables (live ages are never capped, only table lookups clamp).
    """

    num_sources: int
    num_channels: int
    discount: float
    horizon: int
    aoi_cap: int
    initial_aoi: int = 1
    sources: tuple[SourceConfig, ...] = field(default=())

    def __init__(
        self,
        num_sources: int,
        num_channels: int,
        discount: float,
        horizon: int,
        aoi_cap: int,
        initial_aoi: int = 1,
        sources=(),
    ) -> None:
        object.__setattr__(self, "num_sources", num_sources)
        object.__setattr__(self, "num_channels", num_channels)
        object.__setattr__(self, "discount", discount)
        object.__setattr__(self, "horizon", horizon)
        object.__setattr__(self, "aoi_cap", aoi_cap)
        object.__setattr__(self, "initial_aoi", initial_aoi)
        object.__setattr__(self, "sources", tuple(sources))


class TaskId(NamedTuple):
    """0-based (source, task-within-source) pair identifying one task."""

    source_index: int
    task_index: int


def task_ids(config: SystemConfig) -> list[TaskId]:
    """All task ids in flat source-major order; the canonical task order."""
    return [
        TaskId(m, j)
        for m, src in enumerate(config.sources)
        for j in range(len(src.tasks))
    ]


def num_tasks(config: SystemConfig) -> int:
    return sum(len(src.tasks) for src in config.sources)


def task_config(config: SystemConfig, task: TaskId) -> TaskConfig:
    return config.sources[task.source_index].tasks[task.task_index]


# ---------------------------------------------------------------------------
# AoI state
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class AoIState:
    """Per-task ages in flat source-major task order.

    Entries are unbounded positive integers; clamping to the table range
    happens only where a value table is consulted.
    """

    aoi: tuple[int, ...]

    def __init__(self, aoi) -> None:
        values = tuple(int(a) for a in aoi)
        if any(a < 1 for a in values):
            raise ValueError("every AoI entry must be >= 1")
        object.__setattr__(self, "aoi", values)

    @classmethod
    def initial(cls, config: SystemConfig) -> "AoIState":
        ages = []
        for m, src in enumerate(config.sources):
            for tc in src.tasks:
                ages.append(
                    tc.initial_aoi if tc.initial_aoi is not None else config.initial_aoi
                )
        return cls(ages)

    def as_array(self) -> np.ndarray:
        return np.asarray(self.aoi, dtype=np.int64)

    def get(self, config: SystemConfig, task: TaskId) -> int:
        flat = sum(len(s.tasks) for s in config.sources[: task.source_index])
        return self.aoi[flat + task.task_index]


# ---------------------------------------------------------------------------
# Validation
# ---------------------------------------------------------------------------


def _check_penalty(penalty, path: str, out: list[str]) -> None:
    if isinstance(penalty, Linear):
        if not (penalty.slope > 0 and math.isfinite(penalty.slope)):
            out.append(f"{path}: linear slope must be a positive finite real")
    elif isinstance(penalty, Exponential):
        if not (penalty.rate > 0 and math.isfinite(penalty.rate)):
            out.append(f"{path}: exponential rate must be a positive finite real")
    elif isinstance(penalty, Logarithmic):
        if not (penalty.scale > 0 and math.isfinite(penalty.scale)):
            out.append(f"{path}: logarithmic scale must be a positive finite real")
    elif isinstance(penalty, Tabulated):
        if len(penalty.values) < 1:
            out.append(f"{path}: tabulated curve needs at least one value")
        if any(not math.isfinite(v) or v < 0 for v in penalty.values):
            out.append(f"{path}: tabulated values must be finite and nonnegative")
    else:
        out.append(f"{path}: unknown penalty variant {type(penalty).__name__}")


def validate_config(config: SystemConfig) -> list[str]:
    """Return every violated invariant as a human-readable message.

    Empty list means the instance is well formed. Violations are reported,
    never raised, so callers can surface all of them at once.
    """
    v: list[str] = []
    if config.num_sources < 1:
        v.append("num_sources must be a positive integer")
    if config.num_channels < 0:
        v.append("num_channels must be nonnegative")
    if not (0.0 < config.discount < 1.0):
        v.append("discount must lie in (0,1)")
    if config.horizon < 1:
        v.append("horizon must be >= 1")
    if config.aoi_cap < 2:
        v.append("aoi_cap must be >= 2")
    if config.initial_aoi < 1:
        v.append("initial_aoi must be >= 1")
    if len(config.sources) != config.num_sources:
        v.append(
            f"len(sources)={len(config.sources)} must equal num_sources={config.num_sources}"
        )
    for m, src in enumerate(config.sources):
        if src.compute_budget < 0:
            v.append(f"sources[{m}].compute_budget must be >= 0")
        if len(src.tasks) < 1:
            v.append(f"sources[{m}] must have at least one task")
        for j, tc in enumerate(src.tasks):
            path = f"sources[{m}].tasks[{j}]"
            if tc.channel_width < 1:
                v.append(f"{path}.channel_width must be >= 1")
            if not (tc.weight >= 0 and math.isfinite(tc.weight)):
                v.append(f"{path}.weight must be a nonnegative finite real")
            if tc.initial_aoi is not None and tc.initial_aoi < 1:
                v.append(f"{path}.initial_aoi must be >= 1")
            _check_penalty(tc.penalty, f"{path}.penalty", v)
    return v


def effective_penalty_bounds(config: SystemConfig) -> tuple[float, float]:
    """(p_low, p_high): extremes of w * p(delta) over all tasks and the
    table range delta = 1..aoi_cap.

    Table lookups clamp at aoi_cap, so these bound every weighted penalty a
    value table can ever contain.
    """
    lo = math.inf
    hi = -math.inf
    for src in config.sources:
        for tc in src.tasks:
            curve = tc.weight * penalty_curve(tc.penalty, config.aoi_cap)
            lo = min(lo, float(curve.min()))
            hi = max(hi, float(curve.max()))
    return lo, hi


# ---------------------------------------------------------------------------
# File ingestion
# ---------------------------------------------------------------------------


def load_penalty_csv(path: str) -> Tabulated:
    """Read a two-column curve file (header ``aoi,error``, rows delta=1..L)."""
    if not os.path.exists(path):
        raise ConfigIOError(f"penalty curve file not found: {path}")
    try:
        with open(path, newline="") as fh:
            reader = csv.reader(fh)
            rows = list(reader)
    except OSError as exc:
        raise ConfigIOError(f"cannot read penalty curve file {path}: {exc}") from exc
    if not rows or [c.strip() for c in rows[0]] != ["aoi", "error"]:
        raise ConfigIOError(f"penalty curve file {path} must start with header 'aoi,error'")
    values = []
    for lineno, row in enumerate(rows[1:], start=2):
        if len(row) != 2:
            raise ConfigIOError(f"{path}:{lineno}: expected two columns")
        try:
            delta, err = int(row[0]), float(row[1])
        except ValueError as exc:
            raise ConfigIOError(f"{path}:{lineno}: {exc}") from exc
        if delta != lineno - 1:
            raise ConfigIOError(
                f"{path}:{lineno}: aoi column must run 1..L consecutively, got {delta}"
            )
        values.append(err)
    if not values:
        raise ConfigIOError(f"penalty curve file {path} has no data rows")
    return Tabulated(values)


def _penalty_from_json(obj, base_dir: str, path: str) -> PenaltyFunction:
    if not isinstance(obj, dict) or "kind" not in obj:
        raise ValueError(f"{path}: penalty must be an object with a 'kind' field")
    kind = obj["kind"]
    if kind == "linear":
        return Linear(slope=float(obj["slope"]))
    if kind == "exponential":
        return Exponential(rate=float(obj["rate"]))
    if kind == "logarithmic":
        return Logarithmic(scale=float(obj["scale"]))
    if kind == "tabulated":
        csv_path = obj["path"]
        if not os.path.isabs(csv_path):
            csv_path = os.path.join(base_dir, csv_path)
        return load_penalty_csv(csv_path)
    raise ValueError(f"{path}: unknown penalty kind {kind!r}")


def config_from_dict(data: dict, base_dir: str = ".") -> SystemConfig:
    """Build a SystemConfig from parsed JSON; tabulated curves load from CSV
    paths resolved relative to ``base_dir``."""
    try:
        sources = []
        for m, src in enumerate(data["sources"]):
            tasks = []
            for j, t in enumerate(src["tasks"]):
                tasks.append(
                    TaskConfig(
                        channel_width=int(t["channel_width"]),
                        weight=float(t["weight"]),
                        penalty=_penalty_from_json(
                            t["penalty"], base_dir, f"sources[{m}].tasks[{j}]"
                        ),
                        initial_aoi=(
                            int(t["initial_aoi"]) if "initial_aoi" in t else None
                        ),
                    )
                )
            sources.append(SourceConfig(compute_budget=int(src["compute_budget"]), tasks=tasks))
        return SystemConfig(
            num_sources=int(data["num_sources"]),
            num_channels=int(data["num_channels"]),
            discount=float(data["discount"]),
            horizon=int(data["horizon"]),
            aoi_cap=int(data["aoi_cap"]),
            initial_aoi=int(data.get("initial_aoi", 1)),
            sources=sources,
        )
    except (KeyError, TypeError, ValueError) as exc:
        raise ValueError(f"malformed instance file: {exc}") from exc


def load_config(path: str) -> SystemConfig:
    """Load an instance file (JSON mirroring SystemConfig field-for-field).

    Raises ConfigIOError for file-level problems (missing files, unreadable
    CSV) and ValueError for structurally malformed content.
    """
    if not os.path.exists(path):
        raise ConfigIOError(f"instance file not found: {path}")
    try:
        with open(path) as fh:
            try:
                data = json.load(fh)
            except json.JSONDecodeError as exc:
                raise ConfigIOError(f"instance file {path} is not valid JSON: {exc}") from exc
    except OSError as exc:
        raise ConfigIOError(f"cannot read instance file {path}: {exc}") from exc
    return config_from_dict(data, base_dir=os.path.dirname(os.path.abspath(path)))
