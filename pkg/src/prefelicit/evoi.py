"""PEU / EVOI computation for slate queries.

The key quantity is the per-response *unnormalized* posterior mean
``v_i = sum_j w_j R(i|q;u_j) u_j``: the response mass times the posterior
expected utility of any item y is just ``y . v_i``, so PEU is a sum of k
catalog argmaxes over these directions and no division by small response
probabilities ever happens.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .belief import ParticleBelief, ResponseModel, response_prob_matrix, softmax_rows
from .catalog import Catalog, top_k_indices
from .errors import InvalidArgumentError


@dataclass(frozen=True)
class QuerySlate:
    """k item vectors presented as a choice query; feasible iff indices present."""

    vectors: np.ndarray
    item_indices: tuple | None = None

    def __post_init__(self):
        vectors = np.ascontiguousarray(np.asarray(self.vectors, dtype=np.float64))
        object.__setattr__(self, "vectors", vectors)
        if vectors.ndim != 2 or vectors.shape[0] < 2:
            raise InvalidArgumentError("slate needs a k x d matrix with k >= 2")
        if not np.all(np.isfinite(vectors)):
            raise InvalidArgumentError("slate vectors must be finite")
        if self.item_indices is not None:
            idx = tuple(int(i) for i in self.item_indices)
            object.__setattr__(self, "item_indices", idx)
            if len(idx) != vectors.shape[0]:
                raise InvalidArgumentError("item_indices length must equal k")
            if len(set(idx)) != len(idx):
                raise InvalidArgumentError("feasible slate indices must be distinct")

    @property
    def k(self):
        return self.vectors.shape[0]


@dataclass(frozen=True)
class RecSlate:
    """Per-response optimal feasible items (duplicates permitted)."""

    vectors: np.ndarray
    item_indices: tuple

    @property
    def k(self):
        return self.vectors.shape[0]


def response_mass_and_directions(slate_vectors, belief: ParticleBelief, model: ResponseModel):
    """(mass, V): response masses (k,) and unnormalized posterior means (k, d)."""
    probs = response_prob_matrix(slate_vectors, belief.particles, model)
    weighted = belief.weights[:, None] * probs
    mass = weighted.sum(axis=0)
    directions = weighted.T @ belief.particles
    return mass, directions


def deep_retrieval(slate: QuerySlate, belief: ParticleBelief, catalog: Catalog,
                   model: ResponseModel) -> RecSlate:
    """For each response, the feasible item maximizing posterior expected utility."""
    _, directions = response_mass_and_directions(slate.vectors, belief, model)
    scores = catalog.items @ directions.T
    idx = tuple(int(i) for i in np.argmax(scores, axis=0))
    return RecSlate(vectors=catalog.items[list(idx)].copy(), item_indices=idx)


def deep_retr_uniq(slate_vectors, belief: ParticleBelief, catalog: Catalog,
                   model: ResponseModel) -> QuerySlate:
    """Distinct-item deep retrieval: each response takes its highest-ranked
    posterior-EU item not already selected."""
    slate_vectors = np.asarray(slate_vectors, dtype=np.float64)
    k = slate_vectors.shape[0]
    if catalog.n_items < k:
        raise InvalidArgumentError(f"catalog has {catalog.n_items} items, need >= {k}")
    _, directions = response_mass_and_directions(slate_vectors, belief, model)
    scores = catalog.items @ directions.T
    chosen = []
    taken = set()
    for i in range(k):
        ranked = top_k_indices(scores[:, i], k)
        pick = None
        for j in ranked:
            if int(j) not in taken:
                pick = int(j)
                break
        if pick is None:
            # all top-k of this response already taken; fall back to the best
            # unselected item overall (keeps the distinctness contract)
            remaining = [j for j in top_k_indices(scores[:, i], catalog.n_items)
                         if int(j) not in taken]
            pick = int(remaining[0])
        taken.add(pick)
        chosen.append(pick)
    return QuerySlate(vectors=catalog.items[chosen].copy(), item_indices=tuple(chosen))


def peu(slate: QuerySlate, belief: ParticleBelief, catalog: Catalog,
        model: ResponseModel) -> float:
    """Posterior expected utility of the slate under the belief."""
    _, directions = response_mass_and_directions(slate.vectors, belief, model)
    scores = catalog.items @ directions.T
    return float(scores.max(axis=0).sum())


def eu_star(belief: ParticleBelief, catalog: Catalog) -> float:
    mean = belief.weights @ belief.particles
    return float((catalog.items @ mean).max())


def evoi(slate: QuerySlate, belief: ParticleBelief, catalog: Catalog,
         model: ResponseModel) -> float:
    return peu(slate, belief, catalog, model) - eu_star(belief, catalog)


def peu_matrix(X, Y, belief: ParticleBelief, tau: float) -> float:
    """Matrix-form PEU with query slate X and recommendation slate Y (k x d each),
    logistic response at temperature tau, weighted over particles."""
    A = belief.particles @ np.asarray(X, dtype=np.float64).T
    C = belief.particles @ np.asarray(Y, dtype=np.float64).T
    S = softmax_rows(A, tau)
    return float(belief.weights @ (S * C).sum(axis=1))


def delta_bound(slate: QuerySlate, belief: ParticleBelief, catalog: Catalog,
                tau: float) -> float:
    """Slack term of the logistic-response query-iteration guarantee."""
    model = ResponseModel(kind="logistic", temperature=tau)
    probs = response_prob_matrix(slate.vectors, belief.particles, model)
    weighted = belief.weights[:, None] * probs
    mass = weighted.sum(axis=0)
    directions = weighted.T @ belief.particles
    rec = deep_retrieval(slate, belief, catalog, model)
    total = 0.0
    for i in range(slate.k):
        if mass[i] <= 0.0:
            continue
        # posterior-i expectation of (1 - p_i), and EU of y*_i under posterior i
        dip = float((weighted[:, i] * (1.0 - probs[:, i])).sum()) / mass[i]
        eu_rec = float(rec.vectors[i] @ directions[i]) / mass[i]
        total += dip * eu_rec
    return total
