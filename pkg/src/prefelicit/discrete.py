"""Discrete baseline query-selection strategies over the feasible item set."""

from __future__ import annotations

import itertools
from dataclasses import dataclass

import numpy as np

from .belief import ParticleBelief, ResponseModel, response_prob_matrix
from .catalog import Catalog, top_k_indices
from .errors import BudgetExceededError, InvalidArgumentError
from .evoi import QuerySlate, deep_retr_uniq, evoi

DEFAULT_ENUM_BUDGET = 250_000


@dataclass(frozen=True)
class StrategyConfig:
    slate_size: int = 2
    restarts: int = 10
    max_iterations: int = 20
    top_pool: int = 5
    seed: int | None = None

    def __post_init__(self):
        if self.slate_size < 2:
            raise InvalidArgumentError("slate_size must be >= 2")
        if self.restarts < 1:
            raise InvalidArgumentError("restarts must be >= 1")


def _slate_from_indices(catalog: Catalog, indices) -> QuerySlate:
    idx = tuple(int(i) for i in indices)
    return QuerySlate(vectors=catalog.items[list(idx)].copy(), item_indices=idx)


def random_query(catalog: Catalog, k: int, rng) -> QuerySlate:
    if k > catalog.n_items:
        raise InvalidArgumentError("k exceeds catalog size")
    idx = rng.choice(catalog.n_items, size=k, replace=False)
    return _slate_from_indices(catalog, idx)


def exhaustive_search(catalog: Catalog, belief: ParticleBelief, k: int,
                      model: ResponseModel, budget: int = DEFAULT_ENUM_BUDGET) -> QuerySlate:
    """EVOI-argmax over all k-subsets; refuses (never truncates) past the budget."""
    n = catalog.n_items
    if k > n:
        raise InvalidArgumentError("k exceeds catalog size")
    n_combos = 1
    for i in range(k):
        n_combos = n_combos * (n - i) // (i + 1)
    if n_combos > budget:
        raise BudgetExceededError(
            f"C({n},{k}) = {n_combos} slates exceeds enumeration budget {budget}"
        )
    best_idx, best_val = None, -np.inf
    for combo in itertools.combinations(range(n), k):
        val = evoi(_slate_from_indices(catalog, combo), belief, catalog, model)
        if val > best_val + 1e-15:
            best_idx, best_val = combo, val
    return _slate_from_indices(catalog, best_idx)


def top5_exhaustive(catalog: Catalog, belief: ParticleBelief, k: int,
                    model: ResponseModel, top_pool: int = 5,
                    budget: int = DEFAULT_ENUM_BUDGET) -> QuerySlate:
    """Exhaustive EVOI search restricted to the highest prior-EU items."""
    if top_pool < k:
        raise InvalidArgumentError("top_pool must be >= k")
    top_pool = min(top_pool, catalog.n_items)
    mean = belief.weights @ belief.particles
    pool = top_k_indices(catalog.items @ mean, top_pool)
    pool = sorted(int(i) for i in pool)
    best_idx, best_val = None, -np.inf
    for combo in itertools.combinations(pool, k):
        val = evoi(_slate_from_indices(catalog, combo), belief, catalog, model)
        if val > best_val + 1e-15:
            best_idx, best_val = combo, val
    return _slate_from_indices(catalog, best_idx)


def _slate_utility_scores(slate_items, catalog: Catalog, belief: ParticleBelief,
                          model: ResponseModel, chunk: int = 20_000):
    """Score of appending each catalog item to the current slate.

    Slate utility equates the recommendation slate with the query slate
    (the greedy of the prior-work algorithm), so no per-candidate catalog
    max is needed and the whole pass is a few matrix products.
    """
    U, w = belief.particles, belief.weights
    t = slate_items.shape[0]
    A = U @ slate_items.T if t else np.zeros((U.shape[0], 0))
    scores = np.empty(catalog.n_items)
    for start in range(0, catalog.n_items, chunk):
        block = catalog.items[start:start + chunk]
        B = U @ block.T
        if model.kind == "noiseless":
            cur = A.max(axis=1)[:, None] if t else np.full((U.shape[0], 1), -np.inf)
            scores[start:start + chunk] = w @ np.maximum(cur, B)
            continue
        tau = model.temperature
        rm = np.maximum(A.max(axis=1)[:, None], B) if t else B
        eb = np.exp((B - rm) / tau)
        denom = eb.copy()
        num = B * eb
        for j in range(t):
            ea = np.exp((A[:, j][:, None] - rm) / tau)
            denom += ea
            num += A[:, j][:, None] * ea
        scores[start:start + chunk] = w @ (num / denom)
    return scores


def greedy(catalog: Catalog, belief: ParticleBelief, k: int,
           model: ResponseModel) -> QuerySlate:
    """Incrementally append the item maximizing slate utility; seeded with the
    prior-EU argmax."""
    if k > catalog.n_items:
        raise InvalidArgumentError("k exceeds catalog size")
    mean = belief.weights @ belief.particles
    chosen = [int(np.argmax(catalog.items @ mean))]
    while len(chosen) < k:
        scores = _slate_utility_scores(catalog.items[chosen], catalog, belief, model)
        scores[chosen] = -np.inf
        chosen.append(int(np.argmax(scores)))
    return _slate_from_indices(catalog, chosen)


def rand_user_top_item(catalog: Catalog, belief: ParticleBelief, k: int, rng) -> QuerySlate:
    """Slate of the top-EU item of k weight-sampled particles; collisions fall
    back to each particle's next-best item."""
    if k > catalog.n_items:
        raise InvalidArgumentError("k exceeds catalog size")
    m = belief.m
    if m >= k:
        picks = rng.choice(m, size=k, replace=False, p=belief.weights)
    else:
        picks = rng.choice(m, size=k, replace=True, p=belief.weights)
    chosen = []
    taken = set()
    for p in picks:
        scores = catalog.items @ belief.particles[int(p)]
        depth = len(taken) + 1
        for j in top_k_indices(scores, min(depth, catalog.n_items)):
            if int(j) not in taken:
                taken.add(int(j))
                chosen.append(int(j))
                break
        else:
            for j in top_k_indices(scores, catalog.n_items):
                if int(j) not in taken:
                    taken.add(int(j))
                    chosen.append(int(j))
                    break
    return _slate_from_indices(catalog, chosen)


def query_iteration(init: QuerySlate, belief: ParticleBelief, catalog: Catalog,
                    model: ResponseModel, max_iterations: int = 20) -> QuerySlate:
    """Repeatedly replace the slate with its distinct recommendation slate until
    the index set repeats; returns the visited slate with highest EVOI."""
    current = init
    seen = set()
    best, best_val = current, evoi(current, belief, catalog, model)
    for _ in range(max_iterations):
        key = frozenset(current.item_indices) if current.item_indices else None
        if key is not None:
            if key in seen:
                break
            seen.add(key)
        current = deep_retr_uniq(current.vectors, belief, catalog, model)
        val = evoi(current, belief, catalog, model)
        if val > best_val + 1e-15:
            best, best_val = current, val
        if current.item_indices is not None and frozenset(current.item_indices) in seen:
            break
    return best
