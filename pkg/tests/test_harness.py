"""Simulation harness: trial mechanics, aggregation, CSV output, benchmarks."""

import numpy as np
import pytest

from prefelicit.belief import ParticleBelief, ResponseModel
from prefelicit.catalog import Catalog, save_catalog
from prefelicit.errors import InvalidArgumentError
from prefelicit.evoi import QuerySlate, evoi
from prefelicit.harness import (AGG_HEADER, TRACE_HEADER, ElicitationTrace,
                                ExperimentConfig, TraceRow, TrialState,
                                aggregate, aggregate_csv, benchmark,
                                build_trial_state, make_strategy, run_experiment,
                                run_trial, trace_csv)

from conftest import random_instance


def small_config(strategy="greedy", **overrides):
    base = dict(
        catalog={"kind": "synth", "n": 40, "d": 4},
        strategy=strategy, m=20, k=2, n_queries=4, n_trials=3,
        tau_eval=0.1, seed=0,
    )
    base.update(overrides)
    return ExperimentConfig(**base)


class TestExperimentConfig:
    def test_rejects_unknown_strategy(self):
        with pytest.raises(InvalidArgumentError):
            small_config(strategy="oracle")

    def test_rejects_zero_trials(self):
        with pytest.raises(InvalidArgumentError):
            small_config(n_trials=0)

    def test_preset_fills_defaults_without_overriding(self):
        cfg = ExperimentConfig.from_json(
            '{"catalog": {"kind": "synth", "n": 10, "d": 3},'
            ' "strategy": "cont_alter", "tau_eval": 0.5}',
            preset="synthetic",
        )
        assert cfg.tau_eval == 0.5  # explicit value wins
        assert cfg.strategy_config["lr"] == 5e-4
        assert cfg.strategy_config["tau_opt"] == 0.02

    def test_unknown_preset(self):
        with pytest.raises(InvalidArgumentError):
            ExperimentConfig.from_json(
                '{"catalog": {"kind": "synth", "n": 10, "d": 3},'
                ' "strategy": "greedy"}', preset="netflix")


class TestMakeStrategy:
    def test_every_name_dispatches(self):
        rng = np.random.default_rng(0)
        catalog, belief = random_instance(rng, 15, 8, 3)
        model = ResponseModel("logistic", 0.1)
        names = ("random", "exhaustive", "top5_exhaustive", "greedy",
                 "rand_user_top_item", "query_iteration", "cont_free",
                 "cont_alter")
        for name in names:
            cfg = {"restarts": 2, "steps": 5} if name.startswith("cont") \
                else {"restarts": 2}
            select = make_strategy(name, cfg, 2, model)
            slate = select(belief, catalog, np.random.default_rng(1))
            assert isinstance(slate, QuerySlate)
            assert len(set(slate.item_indices)) == 2

    def test_unknown_name(self):
        with pytest.raises(InvalidArgumentError):
            make_strategy("nope", {}, 2, ResponseModel("logistic", 0.1))

    def test_sampled_slates_keep_only_evoi_best(self):
        """The sampling strategy returns the retrieval-polished slate with the
        highest exact EVOI among its restarts."""
        rng = np.random.default_rng(1)
        catalog, belief = random_instance(rng, 30, 10, 4)
        model = ResponseModel("logistic", 0.1)
        few = make_strategy("rand_user_top_item", {"restarts": 1}, 2, model)
        many = make_strategy("rand_user_top_item", {"restarts": 20}, 2, model)
        vals_few = [
            evoi(few(belief, catalog, np.random.default_rng(s)), belief,
                 catalog, model) for s in range(5)
        ]
        val_many = evoi(many(belief, catalog, np.random.default_rng(0)),
                        belief, catalog, model)
        assert val_many >= max(vals_few) - 1e-9


class TestTrialState:
    def test_answer_without_slate_rejected(self):
        rng = np.random.default_rng(2)
        catalog, belief = random_instance(rng, 15, 8, 3)
        state = TrialState(catalog, belief, "greedy", {}, 2, 0.1, 0)
        with pytest.raises(InvalidArgumentError):
            state.answer(0)

    def test_regret_recorded_before_update(self):
        """The row for query q carries the recommendation regret computed
        before q's response is absorbed."""
        rng = np.random.default_rng(3)
        catalog, belief = random_instance(rng, 15, 8, 3)
        true_user = belief.particles[0]
        state = TrialState(catalog, belief, "greedy", {}, 2, 0.1, 0,
                           true_user=true_user)
        from prefelicit.belief import best_item, regret
        rec, _ = best_item(belief, catalog)
        want = regret(true_user, rec, catalog)
        state.next_slate()
        row = state.answer(0)
        assert row.regret == pytest.approx(want)
        assert row.query_idx == 0

    def test_turn_counter_and_slate_reset(self):
        rng = np.random.default_rng(4)
        catalog, belief = random_instance(rng, 15, 8, 3)
        state = TrialState(catalog, belief, "random", {}, 2, 0.1, 0)
        state.next_slate()
        state.answer(1)
        assert state.turn == 1
        assert state.current_slate is None

    def test_resample_restores_ess(self):
        rng = np.random.default_rng(5)
        catalog, belief = random_instance(rng, 30, 50, 4)
        state = TrialState(catalog, belief, "greedy", {}, 2, 0.01, 0,
                           resample_enabled=True)
        from prefelicit.belief import effective_sample_size
        for _ in range(6):
            state.next_slate()
            state.answer(0)
        assert effective_sample_size(state.belief) >= state.belief.m / 2 - 1e-9


class TestRunTrial:
    def test_single_particle_prior_gives_zero_regret(self, tmp_path):
        """With m = 1 the true user equals the only particle, so the
        recommendation is exact and regret is zero in every row."""
        rng = np.random.default_rng(6)
        pool = Catalog(items=rng.standard_normal((1, 4)), ids=("u0",))
        path = tmp_path / "users.csv"
        save_catalog(pool, path)
        cfg = small_config(m=1, prior={"kind": "empirical_file",
                                       "path": str(path)})
        trace = run_trial(cfg, 0, 123)
        assert len(trace.rows) == cfg.n_queries
        for row in trace.rows:
            assert row.regret == pytest.approx(0.0, abs=1e-12)

    def test_rows_record_catalog_ids(self):
        trace = run_trial(small_config(), 0, 7)
        for row in trace.rows:
            assert len(row.slate_ids) == 2
            assert all(isinstance(i, str) for i in row.slate_ids)

    def test_true_user_is_a_prior_particle(self):
        state, _ = build_trial_state(small_config(), 99)
        assert any(np.array_equal(state.true_user, p)
                   for p in state.belief.particles)

    def test_seeded_determinism(self):
        a = run_trial(small_config(), 0, 11)
        b = run_trial(small_config(), 0, 11)
        assert trace_csv([a]) == trace_csv([b])

    def test_different_seeds_differ(self):
        a = run_trial(small_config(), 0, 11)
        b = run_trial(small_config(), 0, 12)
        assert trace_csv([a]) != trace_csv([b])


class TestRunExperiment:
    def test_shapes_and_determinism(self):
        cfg = small_config()
        traces, agg = run_experiment(cfg)
        assert len(traces) == cfg.n_trials
        assert len(agg) == cfg.n_queries
        traces2, agg2 = run_experiment(cfg)
        assert trace_csv(traces) == trace_csv(traces2)
        assert aggregate_csv(agg) == aggregate_csv(agg2)

    def test_regret_trend_with_informative_strategy(self):
        cfg = small_config(strategy="exhaustive", n_trials=8, n_queries=6)
        _, agg = run_experiment(cfg)
        assert agg[-1]["mean_regret"] < agg[0]["mean_regret"]


class TestAggregate:
    def make_trace(self, trial, regrets, evois):
        rows = [
            TraceRow(query_idx=q, slate_ids=("a", "b"), response_idx=0,
                     evoi=e, regret=r, wall_ms=0.0)
            for q, (r, e) in enumerate(zip(regrets, evois))
        ]
        return ElicitationTrace(trial=trial, strategy="greedy", trial_seed=0,
                                rows=rows)

    def test_hand_means_and_ses(self):
        traces = [
            self.make_trace(0, [4.0, 2.0], [1.0, 0.5]),
            self.make_trace(1, [2.0, 0.0], [3.0, 0.5]),
        ]
        agg = aggregate(traces, 2)
        assert agg[0]["mean_regret"] == pytest.approx(3.0)
        assert agg[0]["mean_evoi"] == pytest.approx(2.0)
        # SE with ddof=1: std([4,2]) = sqrt(2), / sqrt(2) = 1
        assert agg[0]["se_regret"] == pytest.approx(1.0)
        assert agg[1]["se_evoi"] == pytest.approx(0.0)

    def test_short_traces_drop_out_of_later_rows(self):
        traces = [
            self.make_trace(0, [4.0, 2.0], [1.0, 1.0]),
            self.make_trace(1, [2.0], [1.0]),
        ]
        agg = aggregate(traces, 2)
        assert agg[0]["mean_regret"] == pytest.approx(3.0)
        assert agg[1]["mean_regret"] == pytest.approx(2.0)
        assert agg[1]["se_regret"] == 0.0

    def test_single_trial_se_is_zero(self):
        agg = aggregate([self.make_trace(0, [1.0], [1.0])], 1)
        assert agg[0]["se_regret"] == 0.0


class TestCsvOutput:
    def test_trace_header_and_zeroed_wall(self):
        traces, _ = run_experiment(small_config(n_trials=1, n_queries=2))
        text = trace_csv(traces)
        lines = text.strip().split("\n")
        assert lines[0] == TRACE_HEADER
        assert len(lines) == 3
        for line in lines[1:]:
            assert line.split(",")[5] == "0.000"

    def test_trace_wall_recorded_when_asked(self):
        traces, _ = run_experiment(small_config(n_trials=1, n_queries=2))
        text = trace_csv(traces, record_timings=True)
        walls = [line.split(",")[5] for line in text.strip().split("\n")[1:]]
        assert any(w != "0.000" for w in walls)

    def test_aggregate_header_and_columns(self):
        _, agg = run_experiment(small_config(n_trials=2, n_queries=2))
        lines = aggregate_csv(agg).strip().split("\n")
        assert lines[0] == AGG_HEADER
        assert len(lines) == 3
        first = lines[1].split(",")
        assert first[0] == "0" and first[1] == "greedy"
        float(first[2]), float(first[3]), float(first[4]), float(first[5])

    def test_byte_identical_across_runs(self):
        cfg = small_config(strategy="rand_user_top_item", n_trials=2)
        a = trace_csv(run_experiment(cfg)[0])
        b = trace_csv(run_experiment(cfg)[0])
        assert a.encode() == b.encode()


class TestBenchmark:
    def test_shape_and_positivity(self):
        cells = [
            {"n": 30, "m": 10, "k": 2, "d": 4, "strategy": "greedy"},
            {"n": 30, "m": 10, "k": 2, "d": 4, "strategy": "random"},
        ]
        results = benchmark(cells, n_trials=2, n_queries=2, seed=0)
        assert len(results) == 2
        for cell, row in zip(cells, results):
            assert row["strategy"] == cell["strategy"]
            assert row["n"] == 30 and row["m"] == 10 and row["k"] == 2
            assert row["mean_s"] > 0.0
            assert row["std_s"] >= 0.0
