import numpy as np
import pytest

import aoisched as a
from aoisched.dp import TableCache, batch_gains, build_batch, get_task_classes
from aoisched.model import AoIState, TaskId, task_ids

from conftest import random_instance
from oracles import subproblem_brute_force


def single_task_config(penalty=None, weight=1.0, width=1, gamma=0.9, cap=10, horizon=20):
    penalty = penalty if penalty is not None else a.Linear(1.0)
    return a.SystemConfig(
        num_sources=1,
        num_channels=1,
        discount=gamma,
        horizon=horizon,
        aoi_cap=cap,
        sources=[a.SourceConfig(1, [a.TaskConfig(width, weight, penalty)])],
    )


class TestBackwardInduction:
    def test_hand_unrolled_two_step(self):
        # w=1, linear slope 1, gamma=.9, lambda=.5, mu=.3, n=1:
        # V[1][d] = d; V[2][3] = 3 + min(.9*4, .8 + .9*1) = 4.7
        cfg = single_task_config()
        mult = a.MultiplierSet((0.5,), 0.3)
        table = a.backward_induction(cfg, TaskId(0, 0), mult, 2)
        assert table.values[1][2] == pytest.approx(3.0, abs=1e-12)
        assert table.values[2][2] == pytest.approx(4.7, abs=1e-12)
        # cross-check with the exhaustive oracle over the 2^2 sequences
        oracle = subproblem_brute_force(cfg, TaskId(0, 0), mult, 2, 3)
        assert table.values[2][2] == pytest.approx(oracle, abs=1e-12)

    def test_horizon_one_passive_wins_at_nonnegative_prices(self):
        cfg = single_task_config()
        mult = a.MultiplierSet((0.7,), 0.2)
        table = a.backward_induction(cfg, TaskId(0, 0), mult, 1)
        for d in range(1, cfg.aoi_cap + 1):
            assert table.values[1][d - 1] == pytest.approx(float(d), abs=1e-12)

    def test_terminal_row_zero_and_finite(self):
        rng = np.random.default_rng(3)
        for _ in range(25):
            cfg = random_instance(rng, horizon=8)
            tid = task_ids(cfg)[int(rng.integers(0, len(task_ids(cfg))))]
            mult = a.MultiplierSet(
                rng.uniform(0, 3, size=cfg.num_sources), float(rng.uniform(0, 3))
            )
            table = a.backward_induction(cfg, tid, mult, int(rng.integers(1, 8)))
            assert np.all(table.values[0] == 0.0)
            assert np.all(np.isfinite(table.values))

    def test_matches_brute_force_on_random_triples(self):
        rng = np.random.default_rng(11)
        for _ in range(30):
            cfg = random_instance(rng, horizon=10)
            ids = task_ids(cfg)
            tid = ids[int(rng.integers(0, len(ids)))]
            mult = a.MultiplierSet(
                rng.uniform(0, 4, size=cfg.num_sources), float(rng.uniform(0, 2))
            )
            h = int(rng.integers(1, 8))
            start = int(rng.integers(1, cfg.aoi_cap + 3))
            table = a.backward_induction(cfg, tid, mult, h)
            dp_value = table.values[h][min(start, cfg.aoi_cap) - 1]
            oracle = subproblem_brute_force(cfg, tid, mult, h, start)
            assert dp_value == pytest.approx(oracle, abs=1e-9)

    def test_monotone_rows_for_nondecreasing_penalty(self):
        rng = np.random.default_rng(5)
        for _ in range(20):
            cfg = random_instance(rng, horizon=8, monotone_only=True)
            ids = task_ids(cfg)
            tid = ids[int(rng.integers(0, len(ids)))]
            mult = a.MultiplierSet(
                rng.uniform(0, 2, size=cfg.num_sources), float(rng.uniform(0, 2))
            )
            table = a.backward_induction(cfg, tid, mult, 6)
            diffs = np.diff(table.values, axis=1)
            assert np.all(diffs >= -1e-12)

    def test_rejects_zero_horizon_and_bad_task(self):
        cfg = single_task_config()
        with pytest.raises(ValueError):
            a.backward_induction(cfg, TaskId(0, 0), a.MultiplierSet.zeros(1), 0)
        with pytest.raises(ValueError):
            a.backward_induction(cfg, TaskId(0, 5), a.MultiplierSet.zeros(1), 3)
        with pytest.raises(ValueError):
            a.backward_induction(cfg, TaskId(2, 0), a.MultiplierSet.zeros(1), 3)


class TestQValueAndGain:
    def test_terminal_next_row(self):
        cfg = single_task_config()
        mult = a.MultiplierSet((0.5,), 0.3)
        table = a.backward_induction(cfg, TaskId(0, 0), mult, 1)
        for d in (1, 4, 9):
            assert a.q_value(table, cfg, d, 0) == pytest.approx(float(d), abs=1e-12)
            assert a.q_value(table, cfg, d, 1) == pytest.approx(d + 0.8, abs=1e-12)

    def test_two_step_q_values_and_gain(self):
        cfg = single_task_config()
        mult = a.MultiplierSet((0.5,), 0.3)
        table = a.backward_induction(cfg, TaskId(0, 0), mult, 2)
        assert a.q_value(table, cfg, 3, 0) == pytest.approx(6.6, abs=1e-12)
        assert a.q_value(table, cfg, 3, 1) == pytest.approx(4.7, abs=1e-12)
        assert a.gain_index(table, cfg, 3) == pytest.approx(1.9, abs=1e-12)

    def test_gain_identity_randomized(self):
        rng = np.random.default_rng(17)
        for _ in range(25):
            cfg = random_instance(rng, horizon=8)
            ids = task_ids(cfg)
            tid = ids[int(rng.integers(0, len(ids)))]
            mult = a.MultiplierSet(
                rng.uniform(0, 3, size=cfg.num_sources), float(rng.uniform(0, 3))
            )
            table = a.backward_induction(cfg, tid, mult, int(rng.integers(1, 7)))
            for d in range(1, cfg.aoi_cap + 2):
                lhs = a.gain_index(table, cfg, d)
                rhs = a.q_value(table, cfg, d, 0) - a.q_value(table, cfg, d, 1)
                assert lhs == pytest.approx(rhs, abs=1e-12)

    def test_gain_nonnegative_at_zero_prices_smallest_age(self):
        cfg = single_task_config()
        table = a.backward_induction(cfg, TaskId(0, 0), a.MultiplierSet.zeros(1), 5)
        assert a.gain_index(table, cfg, 1) >= 0.0

    def test_zero_prices_gain_sign_from_monotone_rows(self):
        cfg = single_task_config()
        table = a.backward_induction(cfg, TaskId(0, 0), a.MultiplierSet.zeros(1), 6)
        for d in range(1, cfg.aoi_cap + 1):
            assert a.q_value(table, cfg, d, 1) - a.q_value(table, cfg, d, 0) <= 1e-12

    def test_large_source_price_kills_every_gain(self):
        # any table row's spread is at most (p_high - p_low) * G, so a price
        # above gamma times that ceiling makes every gain negative
        cfg = single_task_config(cap=12)
        lo, hi = a.effective_penalty_bounds(cfg)
        big = cfg.discount * (hi - lo) / (1.0 - cfg.discount) + 1.0
        table = a.backward_induction(cfg, TaskId(0, 0), a.MultiplierSet((big,), 0.0), 6)
        for d in range(1, cfg.aoi_cap + 1):
            assert a.gain_index(table, cfg, d) < 0.0

    def test_penalty_constant_shift_cancels_in_gain(self):
        base_vals = [0.3, 0.7, 1.2, 1.4, 2.0, 2.2]
        shift = 7.5
        mult = a.MultiplierSet((0.4,), 0.1)
        gains = []
        for vals in (base_vals, [v + shift for v in base_vals]):
            cfg = single_task_config(penalty=a.Tabulated(vals), cap=8)
            table = a.backward_induction(cfg, TaskId(0, 0), mult, 7)
            gains.append([a.gain_index(table, cfg, d) for d in range(1, 9)])
        assert gains[0] == pytest.approx(gains[1], abs=1e-9)

    def test_price_slopes_in_closed_form(self):
        # holding the V rows fixed, the gain moves by -d(lambda) and -n*d(mu)
        cfg = single_task_config(width=3)
        mult = a.MultiplierSet((0.5,), 0.2)
        table = a.backward_induction(cfg, TaskId(0, 0), mult, 5)
        gamma = cfg.discount
        prev = table.values[4]
        for d in (1, 3, 9):
            col = min(d + 1, cfg.aoi_cap) - 1
            for dlam, dmu in ((0.3, 0.0), (0.0, 0.25), (0.1, 0.1)):
                shifted = (
                    gamma * prev[col]
                    - ((0.5 + dlam) + (0.2 + dmu) * 3)
                    - gamma * prev[0]
                )
                assert shifted == pytest.approx(
                    a.gain_index(table, cfg, d) - dlam - 3 * dmu, abs=1e-12
                )


class TestRelaxedRollout:
    def test_zero_prices_schedule_every_slot_but_terminal(self):
        # at zero prices the active action strictly dominates wherever the
        # next value row strictly increases; at the terminal step both
        # actions tie (next row is zero) and the tie resolves passive
        cfg = single_task_config()
        h = 6
        table = a.backward_induction(cfg, TaskId(0, 0), a.MultiplierSet.zeros(1), h)
        actions, occ, _ = a.relaxed_rollout(cfg, TaskId(0, 0), table, 4)
        assert actions == [1] * (h - 1) + [0]
        expected_occ = sum(cfg.discount**t for t in range(h - 1))
        assert occ == pytest.approx(expected_occ, abs=1e-12)

    def test_prices_above_ceiling_stay_passive(self):
        cfg = single_task_config(cap=12)
        table0 = a.backward_induction(cfg, TaskId(0, 0), a.MultiplierSet.zeros(1), 6)
        big = cfg.discount * float(table0.values[5].max()) + 1.0
        table = a.backward_induction(cfg, TaskId(0, 0), a.MultiplierSet((big,), 0.0), 6)
        actions, occ, _ = a.relaxed_rollout(cfg, TaskId(0, 0), table, 3)
        assert actions == [0] * 6
        assert occ == 0.0

    def test_rollout_cost_equals_dp_value(self):
        rng = np.random.default_rng(23)
        for _ in range(25):
            cfg = random_instance(rng, horizon=10)
            ids = task_ids(cfg)
            tid = ids[int(rng.integers(0, len(ids)))]
            mult = a.MultiplierSet(
                rng.uniform(0, 3, size=cfg.num_sources), float(rng.uniform(0, 2))
            )
            h = int(rng.integers(1, 10))
            start = int(rng.integers(1, cfg.aoi_cap + 1))
            table = a.backward_induction(cfg, tid, mult, h)
            _, _, cost = a.relaxed_rollout(cfg, tid, table, start)
            assert cost == pytest.approx(table.values[h][start - 1], abs=1e-9)


class TestBatchConsistency:
    def test_batch_rows_match_per_task_tables(self):
        rng = np.random.default_rng(31)
        for _ in range(10):
            cfg = random_instance(rng, horizon=8)
            mult = a.MultiplierSet(
                rng.uniform(0, 2, size=cfg.num_sources), float(rng.uniform(0, 1))
            )
            h = int(rng.integers(1, 8))
            classes = get_task_classes(cfg)
            batch = build_batch(cfg, mult, h, classes)
            state = AoIState([int(x) for x in rng.integers(1, cfg.aoi_cap + 4, classes.num_tasks)])
            gains = batch_gains(batch, classes, cfg, state.as_array())
            for flat, tid in enumerate(task_ids(cfg)):
                table = a.backward_induction(cfg, tid, mult, h)
                c = classes.task_class[flat]
                assert np.array_equal(batch.v_top[c], table.values[h])
                assert gains[flat] == a.gain_index(table, cfg, state.aoi[flat])


class TestTableCache:
    def test_replicated_instance_hits_once_per_extra_replica(self):
        cfg = single_task_config()
        cfg2 = a.SystemConfig(
            num_sources=2,
            num_channels=2,
            discount=0.9,
            horizon=10,
            aoi_cap=10,
            sources=[
                a.SourceConfig(1, [a.TaskConfig(1, 1.0, a.Linear(1.0)), a.TaskConfig(1, 1.0, a.Logarithmic(3.0))]),
                a.SourceConfig(1, [a.TaskConfig(1, 1.0, a.Linear(1.0))]),
            ],
        )
        r = 4
        scaled = a.scale_instance(cfg2, r)
        cache = TableCache()
        mult = a.MultiplierSet((0.2, 0.1), 0.05)
        n_classes = get_task_classes(scaled).num_classes
        for tid in task_ids(scaled):
            a.backward_induction(scaled, tid, mult, 5, cache=cache)
        assert cache.misses == n_classes
        assert cache.hits == (r - 1) * n_classes

    def test_cached_table_identical_to_fresh(self):
        cfg = single_task_config()
        cache = TableCache()
        mult = a.MultiplierSet((0.3,), 0.2)
        t1 = a.backward_induction(cfg, TaskId(0, 0), mult, 4, cache=cache)
        t2 = a.backward_induction(cfg, TaskId(0, 0), mult, 4, cache=cache)
        assert np.array_equal(t1.values, t2.values)
        assert cache.hits == 1
