"""Partial (attribute-subset) comparison queries under ceteris-paribus semantics.

A partial item is a point in [0,1]^d; unset attributes are zero and cancel in
the softmax, so the response model is the plain restricted dot product.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass

import numpy as np

from .belief import ParticleBelief, ResponseModel, softmax_rows
from .catalog import Catalog
from .continuous import Adam
from .errors import BudgetExceededError, InvalidArgumentError
from .evoi import QuerySlate, deep_retrieval, evoi

DEFAULT_PARTIAL_BUDGET = 200_000


@dataclass(frozen=True)
class PartialSlate:
    """k partial item rows; relaxed rows live in [0,1]^d, projected rows are
    binary with exactly p ones."""

    raw: np.ndarray
    attrs_per_item: int
    attribute_names: tuple | None = None

    def __post_init__(self):
        raw = np.ascontiguousarray(np.asarray(self.raw, dtype=np.float64))
        object.__setattr__(self, "raw", raw)
        if raw.ndim != 2 or raw.shape[0] < 2:
            raise InvalidArgumentError("partial slate needs a k x d matrix, k >= 2")
        if raw.min() < 0.0 or raw.max() > 1.0:
            raise InvalidArgumentError("partial slate entries must lie in [0,1]")
        if not 1 <= self.attrs_per_item <= raw.shape[1]:
            raise InvalidArgumentError("attrs_per_item must be in [1, d]")

    @property
    def k(self):
        return self.raw.shape[0]

    def is_projected(self):
        binary = np.all((self.raw == 0.0) | (self.raw == 1.0))
        return bool(binary and np.all(self.raw.sum(axis=1) == self.attrs_per_item))

    def selected_attributes(self):
        """Per-item lists of selected attribute names (projected slates)."""
        names = self.attribute_names or tuple(
            f"a{j}" for j in range(self.raw.shape[1])
        )
        return [
            [names[j] for j in np.flatnonzero(row)] for row in self.raw
        ]


def partial_response_probs(slate: PartialSlate, u, tau: float):
    """Ceteris-paribus logistic choice distribution for one utility vector."""
    logits = slate.raw @ np.asarray(u, dtype=np.float64)
    return softmax_rows(logits[None, :], tau)[0]


def sorted_l1_penalty(x, p: int):
    """(value, subgradient) of the sorted-L1 distance to a binary vector with
    exactly p ones: small entries pay their value, the p largest pay 1 - value."""
    x = np.asarray(x, dtype=np.float64)
    d = x.shape[0]
    if not 1 <= p <= d:
        raise InvalidArgumentError("p must be in [1, d]")
    # p largest coordinates (ties -> smallest index, matching project_top_p)
    order = np.lexsort((np.arange(d), -x))
    top = order[:p]
    grad = np.ones(d)
    grad[top] = -1.0
    value = float(x.sum() - 2.0 * x[top].sum() + p)
    return value, grad


def project_top_p(x, p: int):
    """Binary vector with ones at the p largest coordinates (ties -> smallest index)."""
    x = np.asarray(x, dtype=np.float64)
    d = x.shape[0]
    order = np.lexsort((np.arange(d), -x))
    out = np.zeros(d)
    out[order[:p]] = 1.0
    return out


def _next_best_projection(x, p: int, used: set):
    """Best binary vector with p ones whose pattern is not in `used`, by
    selected-coordinate sum; tries single swaps first, then enumerates."""
    x = np.asarray(x, dtype=np.float64)
    d = x.shape[0]
    order = np.lexsort((np.arange(d), -x))
    top, rest = list(order[:p]), list(order[p:])
    best, best_val = None, -np.inf
    for i in top:
        for j in rest:
            sel = [t for t in top if t != i] + [j]
            out = np.zeros(d)
            out[sel] = 1.0
            if tuple(out) in used:
                continue
            val = float(x[sel].sum())
            if val > best_val:
                best, best_val = out, val
    if best is not None:
        return best
    for combo in itertools.combinations(range(d), p):
        out = np.zeros(d)
        out[list(combo)] = 1.0
        if tuple(out) in used:
            continue
        val = float(x[list(combo)].sum())
        if val > best_val:
            best, best_val = out, val
    if best is None:
        raise InvalidArgumentError("cannot build k distinct partial items")
    return best


def _project_rows_distinct(X, p: int):
    """Row-wise top-p projection with repeated patterns bumped to their next
    best selection, so the slate never presents the same option twice."""
    used, rows = set(), []
    for row in X:
        proj = project_top_p(row, p)
        if tuple(proj) in used:
            proj = _next_best_projection(row, p, used)
        used.add(tuple(proj))
        rows.append(proj)
    return np.stack(rows)


def _as_query_slate(slate: PartialSlate) -> QuerySlate:
    return QuerySlate(vectors=slate.raw)


def partial_evoi(slate: PartialSlate, belief: ParticleBelief, catalog: Catalog,
                 tau_eval: float) -> float:
    """EVOI of the partial slate: responses reweight via the ceteris-paribus
    model, EU* is deep-retrieved over the full catalog."""
    model = ResponseModel(kind="logistic", temperature=tau_eval)
    return evoi(_as_query_slate(slate), belief, catalog, model)


def _partial_evoi_grad(X, belief, catalog, tau):
    """Gradient of the deep-retrieved partial EVOI w.r.t. relaxed rows,
    holding the retrieved items fixed for this step."""
    model = ResponseModel(kind="logistic", temperature=tau)
    rec = deep_retrieval(QuerySlate(vectors=X), belief, catalog, model)
    C = belief.particles @ rec.vectors.T
    A = belief.particles @ X.T
    S = softmax_rows(A, tau)
    b = (S * C).sum(axis=1, keepdims=True)
    G = belief.weights[:, None] * (S * (C - b) / tau)
    return G.T @ belief.particles


@dataclass(frozen=True)
class PartialConfig:
    learning_rate: float = 0.05
    steps: int = 100
    restarts: int = 100
    tau: float = 0.1
    lambda_init: float = 0.01
    lambda_growth: float = 1.1
    seed: int = 0


def cont_partial(config: PartialConfig, belief: ParticleBelief, catalog: Catalog,
                 k: int, p: int) -> PartialSlate:
    """Projected-gradient ascent on partial EVOI with a growing sorted-L1
    penalty; returns the best projected slate (distinct rows) by exact
    partial EVOI."""
    catalog.validate_partial_mode()
    d = catalog.dim
    if not 1 <= p <= d:
        raise InvalidArgumentError("p must be in [1, d]")
    seeds = np.random.SeedSequence(config.seed).spawn(config.restarts)
    best, best_val = None, -np.inf
    for r in range(config.restarts):
        rng = np.random.default_rng(seeds[r])
        X = rng.uniform(0.0, 1.0, size=(k, d))
        lam = config.lambda_init
        opt = Adam(X.shape, lr=config.learning_rate)
        for _ in range(config.steps):
            grad = _partial_evoi_grad(X, belief, catalog, config.tau)
            pen_grad = np.stack([sorted_l1_penalty(row, p)[1] for row in X])
            X = np.clip(opt.step(X, grad - lam * pen_grad), 0.0, 1.0)
            lam *= config.lambda_growth
        projected = PartialSlate(
            raw=_project_rows_distinct(X, p),
            attrs_per_item=p,
            attribute_names=catalog.attribute_names,
        )
        val = partial_evoi(projected, belief, catalog, config.tau)
        if val > best_val + 1e-15:
            best, best_val = projected, val
    return best


def _variance_by_attribute(belief: ParticleBelief):
    mean = belief.weights @ belief.particles
    return belief.weights @ (belief.particles - mean) ** 2


def greedy_partial(belief: ParticleBelief, catalog: Catalog, k: int, p: int,
                   tau_eval: float) -> PartialSlate:
    """Greedy partial slate: seed with the max-utility-variance attribute, grow
    each item to p attributes, then add items, always by exact partial EVOI."""
    catalog.validate_partial_mode()
    d = catalog.dim
    rows = []

    def make_slate(current_rows):
        return PartialSlate(
            raw=np.stack(current_rows), attrs_per_item=p,
            attribute_names=catalog.attribute_names,
        )

    def score(candidate_rows):
        # pad to k >= 2 with a zero row so single-item prefixes are scorable
        padded = list(candidate_rows)
        if len(padded) < 2:
            padded.append(np.zeros(d))
        model = ResponseModel(kind="logistic", temperature=tau_eval)
        return evoi(QuerySlate(vectors=np.stack(padded)), belief, catalog, model)

    def grow_item(base_row, taken_rows):
        row = base_row.copy()
        while int(row.sum()) < p:
            best_j, best_v = None, -np.inf
            for j in range(d):
                if row[j] == 1.0:
                    continue
                cand = row.copy()
                cand[j] = 1.0
                v = score(taken_rows + [cand])
                if v > best_v + 1e-15:
                    best_j, best_v = j, v
            row[best_j] = 1.0
        return row

    first = np.zeros(d)
    first[int(np.argmax(_variance_by_attribute(belief)))] = 1.0
    rows.append(grow_item(first, []))
    while len(rows) < k:
        best_row, best_v = None, -np.inf
        for j in range(d):
            seed_row = np.zeros(d)
            seed_row[j] = 1.0
            if p == 1 and any(np.array_equal(seed_row, r) for r in rows):
                continue
            cand = grow_item(seed_row, rows)
            if any(np.array_equal(cand, r) for r in rows):
                continue
            v = score(rows + [cand])
            if v > best_v + 1e-15:
                best_row, best_v = cand, v
        if best_row is None:
            raise InvalidArgumentError("cannot build k distinct partial items")
        rows.append(best_row)
    return make_slate(rows)


def exhaustive_partial(belief: ParticleBelief, catalog: Catalog, k: int, p: int,
                       tau_eval: float,
                       budget: int = DEFAULT_PARTIAL_BUDGET) -> PartialSlate:
    """EVOI-argmax over all slates of k distinct single-attribute items (p=1)."""
    catalog.validate_partial_mode()
    if p != 1:
        raise InvalidArgumentError("exhaustive_partial supports p=1 only")
    d = catalog.dim
    if k > d:
        raise InvalidArgumentError("k exceeds attribute count")
    n_combos = 1
    for i in range(k):
        n_combos = n_combos * (d - i) // (i + 1)
    if n_combos > budget:
        raise BudgetExceededError(
            f"C({d},{k}) = {n_combos} attribute slates exceeds budget {budget}"
        )
    eye = np.eye(d)
    best, best_val = None, -np.inf
    for combo in itertools.combinations(range(d), k):
        slate = PartialSlate(
            raw=eye[list(combo)].copy(), attrs_per_item=1,
            attribute_names=catalog.attribute_names,
        )
        val = partial_evoi(slate, belief, catalog, tau_eval)
        if val > best_val + 1e-15:
            best, best_val = slate, val
    return best
