"""Simulated elicitation harness: trials, aggregation, timing benchmarks.

One trial = sample a true user, then loop: strategy picks a slate, record its
exact EVOI and the regret of the current best recommendation, simulate a
logistic response, update the belief. Row q therefore carries the regret
after q answered queries, so row 0 is the no-query (prior) regret.

The true user is a uniformly drawn particle of the trial's belief: a draw
from the prior via its empirical particle representation. Averaged trial
regret is then an unbiased estimate of the belief's expected loss.
"""

from __future__ import annotations

import dataclasses
import io
import json
import time
from dataclasses import dataclass, field

import numpy as np

from . import discrete
from .belief import (ParticleBelief, PriorSpec, ResponseModel, bayes_update,
                     best_item, effective_sample_size, regret, resample,
                     sample_prior, sample_response)
from .catalog import Catalog, SynthSpec, load_catalog, synth_catalog
from .continuous import ContinuousConfig, optimize
from .errors import DegeneratePosteriorError, InvalidArgumentError
from .evoi import QuerySlate, deep_retr_uniq, evoi

TRACE_HEADER = "trial,query_idx,strategy,evoi,regret,wall_ms,response_idx"
AGG_HEADER = "query_idx,strategy,mean_regret,se_regret,mean_evoi,se_evoi"

DISCRETE_STRATEGIES = (
    "random", "exhaustive", "top5_exhaustive", "greedy",
    "rand_user_top_item", "query_iteration",
)
CONTINUOUS_STRATEGIES = ("cont_free", "cont_reg", "cont_alter", "cont_deep_retr")

PRESETS = {
    "synthetic": {"lr": 5e-4, "tau_opt": 0.02, "tau_eval": 0.1},
    "movielens": {"lr": 1e-3, "tau_opt": 0.03, "tau_eval": 0.01},
    "goodreads": {"lr": 5e-4, "tau_opt": 0.02, "tau_eval": 0.1},
}


@dataclass(frozen=True)
class ExperimentConfig:
    catalog: dict
    strategy: str
    m: int = 100
    k: int = 2
    n_queries: int = 10
    n_trials: int = 20
    tau_eval: float = 0.1
    seed: int = 0
    prior: dict = field(default_factory=lambda: {"kind": "standard_normal"})
    strategy_config: dict = field(default_factory=dict)
    resample: bool = False
    resample_jitter_frac: float = 0.01
    record_timings: bool = False

    def __post_init__(self):
        if self.n_queries < 1 or self.n_trials < 1:
            raise InvalidArgumentError("n_queries and n_trials must be >= 1")
        if self.strategy not in DISCRETE_STRATEGIES + CONTINUOUS_STRATEGIES:
            raise InvalidArgumentError(f"unknown strategy {self.strategy!r}")

    @classmethod
    def from_json(cls, text, preset=None):
        data = json.loads(text)
        if preset is not None:
            if preset not in PRESETS:
                raise InvalidArgumentError(f"unknown preset {preset!r}")
            p = PRESETS[preset]
            data.setdefault("tau_eval", p["tau_eval"])
            sc = dict(data.get("strategy_config", {}))
            sc.setdefault("lr", p["lr"])
            sc.setdefault("tau_opt", p["tau_opt"])
            data["strategy_config"] = sc
        return cls(**data)


@dataclass
class TraceRow:
    query_idx: int
    slate_ids: tuple
    response_idx: int
    evoi: float
    regret: float
    wall_ms: float


@dataclass
class ElicitationTrace:
    trial: int
    strategy: str
    trial_seed: int
    rows: list
    aborted: str | None = None  # degeneracy marker


def _build_catalog(config: ExperimentConfig, trial_rng_seed):
    spec = config.catalog
    kind = spec.get("kind", "synth")
    if kind == "synth":
        # synthetic catalogs are resampled per trial (one draw of items each)
        return synth_catalog(SynthSpec(
            n_items=int(spec["n"]), dim=int(spec["d"]), seed=trial_rng_seed,
        ))
    if kind == "file":
        return load_catalog(spec["path"])
    raise InvalidArgumentError(f"unknown catalog kind {kind!r}")


def _prior_spec(config: ExperimentConfig, dim):
    p = config.prior
    kind = p.get("kind", "standard_normal")
    return PriorSpec(kind=kind, dim=dim, source=p.get("path"))


def make_strategy(name: str, strategy_config: dict, k: int,
                  eval_model: ResponseModel):
    """Returns select(belief, catalog, rng) -> QuerySlate for a strategy name."""
    if name == "random":
        return lambda belief, catalog, rng: discrete.random_query(catalog, k, rng)
    if name == "exhaustive":
        budget = int(strategy_config.get("budget", discrete.DEFAULT_ENUM_BUDGET))
        return lambda belief, catalog, rng: discrete.exhaustive_search(
            catalog, belief, k, eval_model, budget=budget)
    if name == "top5_exhaustive":
        pool = int(strategy_config.get("top_pool", 5))
        return lambda belief, catalog, rng: discrete.top5_exhaustive(
            catalog, belief, k, eval_model, top_pool=pool)
    if name == "greedy":
        return lambda belief, catalog, rng: discrete.greedy(
            catalog, belief, k, eval_model)
    if name == "rand_user_top_item":
        restarts = int(strategy_config.get("restarts", 10))

        def select_ruti(belief, catalog, rng):
            # each sampled slate is polished by one feasible retrieval step,
            # then the best of the restarts is kept by exact EVOI
            best, best_val = None, -np.inf
            for _ in range(restarts):
                drawn = discrete.rand_user_top_item(catalog, belief, k, rng)
                slate = deep_retr_uniq(drawn.vectors, belief, catalog, eval_model)
                val = evoi(slate, belief, catalog, eval_model)
                if val > best_val + 1e-15:
                    best, best_val = slate, val
            return best

        return select_ruti
    if name == "query_iteration":
        restarts = int(strategy_config.get("restarts", 10))
        max_iter = int(strategy_config.get("max_iterations", 20))

        def select(belief, catalog, rng):
            best, best_val = None, -np.inf
            for _ in range(restarts):
                init = discrete.rand_user_top_item(catalog, belief, k, rng)
                slate = discrete.query_iteration(
                    init, belief, catalog, eval_model, max_iterations=max_iter)
                val = evoi(slate, belief, catalog, eval_model)
                if val > best_val + 1e-15:
                    best, best_val = slate, val
            return best

        return select
    if name in CONTINUOUS_STRATEGIES:
        variant = name.removeprefix("cont_")
        base = ContinuousConfig.from_json_dict(
            {k2: v for k2, v in strategy_config.items() if k2 != "budget"}
        )
        base = dataclasses.replace(base, variant=variant)
        if variant == "alter" and "steps" not in strategy_config:
            base = dataclasses.replace(base, steps=50)

        def select(belief, catalog, rng, base=base):
            cfg = dataclasses.replace(base, seed=int(rng.integers(2 ** 62)))
            return optimize(cfg, belief, catalog, k, eval_model)

        return select
    raise InvalidArgumentError(f"unknown strategy {name!r}")


class TrialState:
    """One elicitation session: the same stepper backs simulated trials and
    live service sessions."""

    def __init__(self, catalog: Catalog, belief: ParticleBelief, strategy_name: str,
                 strategy_config: dict, k: int, tau_eval: float, strategy_seed,
                 true_user=None, resample_enabled=False, resample_jitter_frac=0.01):
        self.catalog = catalog
        self.belief = belief
        self.eval_model = ResponseModel(kind="logistic", temperature=tau_eval)
        self.strategy_name = strategy_name
        self._select = make_strategy(strategy_name, strategy_config, k,
                                     self.eval_model)
        self.k = k
        self.strategy_rng = np.random.default_rng(strategy_seed)
        self.true_user = true_user
        self.resample_enabled = resample_enabled
        self.resample_jitter_frac = resample_jitter_frac
        self.turn = 0
        self.current_slate = None
        self.last_wall_ms = 0.0
        self.last_evoi = 0.0
        self.last_regret = float("nan")
        self.rows = []

    def next_slate(self) -> QuerySlate:
        t0 = time.perf_counter()
        slate = self._select(self.belief, self.catalog, self.strategy_rng)
        self.set_slate(slate, wall_ms=(time.perf_counter() - t0) * 1000.0)
        return slate

    def set_slate(self, slate: QuerySlate, wall_ms=0.0):
        """Install an externally chosen slate as the pending query."""
        self.last_wall_ms = wall_ms
        self.last_evoi = evoi(slate, self.belief, self.catalog, self.eval_model)
        if self.true_user is not None:
            rec_idx, _ = best_item(self.belief, self.catalog)
            self.last_regret = regret(self.true_user, rec_idx, self.catalog)
        self.current_slate = slate

    def answer(self, response_idx: int) -> TraceRow:
        if self.current_slate is None:
            raise InvalidArgumentError("no pending slate; call next_slate first")
        slate = self.current_slate
        self.belief = bayes_update(self.belief, slate.vectors, response_idx,
                                   self.eval_model)
        if (self.resample_enabled
                and effective_sample_size(self.belief) < self.belief.m / 2):
            jitter = self.resample_jitter_frac * float(
                np.sqrt((self.belief.particles ** 2).sum(axis=1)).mean())
            self.belief = resample(self.belief, jitter, self.strategy_rng)
        ids = tuple(self.catalog.ids[i] for i in slate.item_indices) \
            if slate.item_indices is not None else ()
        row = TraceRow(query_idx=self.turn, slate_ids=ids,
                       response_idx=int(response_idx), evoi=self.last_evoi,
                       regret=self.last_regret, wall_ms=self.last_wall_ms)
        self.rows.append(row)
        self.turn += 1
        self.current_slate = None
        return row


def build_trial_state(config: ExperimentConfig, trial_seed):
    """(TrialState, response rng) with all streams derived from the trial seed.

    The service demo mode reuses this so that a session answered with the
    harness's sampled responses reproduces the harness trace exactly.
    """
    streams = np.random.SeedSequence(trial_seed).spawn(5)
    catalog = _build_catalog(config, streams[0])
    belief = sample_prior(_prior_spec(config, catalog.dim), config.m, streams[1])
    user_rng = np.random.default_rng(streams[2])
    # a uniformly drawn particle is a prior draw via the belief's own
    # empirical representation; averaged regret then estimates expected loss
    true_user = belief.particles[int(user_rng.integers(config.m))].copy()
    state = TrialState(
        catalog=catalog, belief=belief, strategy_name=config.strategy,
        strategy_config=config.strategy_config, k=config.k,
        tau_eval=config.tau_eval, strategy_seed=streams[3], true_user=true_user,
        resample_enabled=config.resample,
        resample_jitter_frac=config.resample_jitter_frac,
    )
    return state, np.random.default_rng(streams[4])


def run_trial(config: ExperimentConfig, trial_index: int, trial_seed: int) -> ElicitationTrace:
    state, response_rng = build_trial_state(config, trial_seed)
    true_user = state.true_user
    trace = ElicitationTrace(trial=trial_index, strategy=config.strategy,
                             trial_seed=trial_seed, rows=state.rows)
    for _ in range(config.n_queries):
        slate = state.next_slate()
        resp = sample_response(slate.vectors, true_user, state.eval_model,
                               response_rng)
        try:
            state.answer(resp)
        except DegeneratePosteriorError:
            trace.aborted = "degenerate_posterior"
            break
    return trace


def run_experiment(config: ExperimentConfig):
    seeds = np.random.SeedSequence(config.seed).spawn(config.n_trials)
    traces = [
        run_trial(config, t, int(seeds[t].generate_state(1)[0]))
        for t in range(config.n_trials)
    ]
    return traces, aggregate(traces, config.n_queries)


def aggregate(traces, n_queries):
    """Per-query means and standard errors of regret and EVOI across trials."""
    out = []
    strategy = traces[0].strategy if traces else ""
    for q in range(n_queries):
        regs = [t.rows[q].regret for t in traces if len(t.rows) > q]
        evs = [t.rows[q].evoi for t in traces if len(t.rows) > q]
        if not regs:
            continue
        regs, evs = np.array(regs), np.array(evs)
        n = len(regs)
        se_r = float(regs.std(ddof=1) / np.sqrt(n)) if n > 1 else 0.0
        se_e = float(evs.std(ddof=1) / np.sqrt(n)) if n > 1 else 0.0
        out.append({
            "query_idx": q, "strategy": strategy,
            "mean_regret": float(regs.mean()), "se_regret": se_r,
            "mean_evoi": float(evs.mean()), "se_evoi": se_e,
        })
    return out


def trace_csv(traces, record_timings=False) -> str:
    buf = io.StringIO()
    buf.write(TRACE_HEADER + "\n")
    for trace in traces:
        for row in trace.rows:
            wall = f"{row.wall_ms:.3f}" if record_timings else "0.000"
            buf.write(
                f"{trace.trial},{row.query_idx},{trace.strategy},"
                f"{row.evoi:.12g},{row.regret:.12g},{wall},{row.response_idx}\n"
            )
    return buf.getvalue()


def aggregate_csv(agg) -> str:
    buf = io.StringIO()
    buf.write(AGG_HEADER + "\n")
    for row in agg:
        buf.write(
            f"{row['query_idx']},{row['strategy']},{row['mean_regret']:.12g},"
            f"{row['se_regret']:.12g},{row['mean_evoi']:.12g},{row['se_evoi']:.12g}\n"
        )
    return buf.getvalue()


def benchmark(cells, n_trials=10, n_queries=10, seed=0):
    """Per-cell mean/std of per-query strategy wall time.

    Each cell: {"n": N, "m": m, "k": k, "d": d, "strategy": name,
    "strategy_config": {...}, "tau_eval": t}.
    """
    results = []
    for cell in cells:
        config = ExperimentConfig(
            catalog={"kind": "synth", "n": cell["n"], "d": cell.get("d", 10)},
            strategy=cell["strategy"],
            strategy_config=cell.get("strategy_config", {}),
            m=cell["m"], k=cell["k"], n_queries=n_queries, n_trials=n_trials,
            tau_eval=cell.get("tau_eval", 0.1), seed=seed,
        )
        seeds = np.random.SeedSequence(seed).spawn(n_trials)
        times = []
        for t in range(n_trials):
            trace = run_trial(config, t, int(seeds[t].generate_state(1)[0]))
            times.extend(row.wall_ms / 1000.0 for row in trace.rows)
        times = np.array(times)
        results.append({
            **{k2: cell[k2] for k2 in ("n", "m", "k", "strategy")},
            "d": cell.get("d", 10),
            "mean_s": float(times.mean()),
            "std_s": float(times.std(ddof=1)) if len(times) > 1 else 0.0,
        })
    return results
