"""Shared fixtures: golden instances and memoized heavy benchmark runs."""

from __future__ import annotations

import functools
import os

import numpy as np
import pytest

import aoisched as a

CONFIG_DIR = os.path.join(os.path.dirname(__file__), "..", "configs")


def config_path(name: str) -> str:
    return os.path.join(CONFIG_DIR, name)


@pytest.fixture(scope="session")
def tiny_oracle_config() -> a.SystemConfig:
    return a.load_config(config_path("tiny_oracle.json"))


@pytest.fixture(scope="session")
def benchmark_base() -> a.SystemConfig:
    return a.load_config(config_path("synthetic_benchmark.json"))


@pytest.fixture(scope="session")
def certificate_base() -> a.SystemConfig:
    return a.load_config(config_path("certificate_base.json"))


def random_instance(
    rng: np.random.Generator,
    max_sources: int = 5,
    max_tasks: int = 4,
    horizon: int = 50,
    max_width: int = 3,
    monotone_only: bool = False,
) -> a.SystemConfig:
    """Small random but always-valid instance for property tests."""
    m = int(rng.integers(1, max_sources + 1))
    cap = int(rng.integers(8, 30))
    sources = []
    for _ in range(m):
        k = int(rng.integers(1, max_tasks + 1))
        tasks = []
        for _ in range(k):
            kind = rng.integers(0, 4)
            if kind == 0:
                pen = a.Linear(float(rng.uniform(0.1, 3.0)))
            elif kind == 1:
                pen = a.Exponential(float(rng.uniform(0.05, 0.5)))
            elif kind == 2:
                pen = a.Logarithmic(float(rng.uniform(0.5, 10.0)))
            else:
                n_vals = int(rng.integers(1, 12))
                vals = rng.uniform(0.0, 5.0, size=n_vals)
                if monotone_only:
                    vals = np.sort(vals)
                pen = a.Tabulated(vals)
            weight = float(rng.choice([0.0, 0.01, 0.5, 1.0, 2.0]))
            if monotone_only and weight == 0.0:
                weight = 1.0
            tasks.append(
                a.TaskConfig(
                    channel_width=int(rng.integers(1, max_width + 1)),
                    weight=weight,
                    penalty=pen,
                )
            )
        sources.append(a.SourceConfig(compute_budget=int(rng.integers(0, k + 2)), tasks=tasks))
    total_width = sum(tc.channel_width for s in sources for tc in s.tasks)
    return a.SystemConfig(
        num_sources=m,
        num_channels=int(rng.integers(0, total_width + 2)),
        discount=float(rng.uniform(0.5, 0.98)),
        horizon=horizon,
        aoi_cap=cap,
        sources=sources,
    )


class BenchRuns:
    """Memoized heavy runs on the synthetic benchmark, shared across the
    acceptance criteria so each expensive simulation happens once."""

    def __init__(self, base: a.SystemConfig) -> None:
        self.base = base

    @functools.lru_cache(maxsize=None)
    def replicated(self, r: int, channels: int | None = None, aoi_cap: int | None = None):
        cfg = a.replicate_tasks(self.base, r)
        if channels is not None or aoi_cap is not None:
            cfg = a.SystemConfig(
                num_sources=cfg.num_sources,
                num_channels=cfg.num_channels if channels is None else channels,
                discount=cfg.discount,
                horizon=cfg.horizon,
                aoi_cap=cfg.aoi_cap if aoi_cap is None else aoi_cap,
                initial_aoi=cfg.initial_aoi,
                sources=cfg.sources,
            )
        return cfg

    @functools.lru_cache(maxsize=None)
    def mgf(self, r: int, channels: int | None = None, aoi_cap: int | None = None):
        return a.run(self.replicated(r, channels, aoi_cap), a.Mgf())

    @functools.lru_cache(maxsize=None)
    def maf(self, r: int, channels: int | None = None):
        return a.run(self.replicated(r, channels), a.Maf())

    @functools.lru_cache(maxsize=None)
    def random(self, r: int, seed: int, channels: int | None = None):
        return a.run(self.replicated(r, channels), a.Random(), seed=seed)

    @functools.lru_cache(maxsize=None)
    def dual_bound(self, r: int, channels: int | None = None):
        return a.dual_lower_bound(self.replicated(r, channels))


@pytest.fixture(scope="session")
def bench(benchmark_base) -> BenchRuns:
    return BenchRuns(benchmark_base)
