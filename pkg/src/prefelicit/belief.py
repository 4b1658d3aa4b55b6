"""Monte-Carlo posterior over user utility vectors.

The belief is a fixed set of utility particles with weights that get
re-normalized after every answered query; particles themselves only change
through explicit (opt-in) resampling.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .catalog import Catalog, load_catalog, top_k_indices
from .errors import DegeneratePosteriorError, InvalidArgumentError

WEIGHT_SUM_TOL = 1e-9


@dataclass(frozen=True)
class ResponseModel:
    """Slate choice model: noiseless argmax or logistic with temperature tau."""

    kind: str = "logistic"
    temperature: float = 1.0

    def __post_init__(self):
        if self.kind not in ("noiseless", "logistic"):
            raise InvalidArgumentError(f"unknown response model kind {self.kind!r}")
        if self.kind == "logistic" and not self.temperature > 0:
            raise InvalidArgumentError("logistic temperature must be > 0")


NOISELESS = ResponseModel(kind="noiseless")


@dataclass(frozen=True)
class PriorSpec:
    kind: str = "standard_normal"
    dim: int = 10
    source: str | None = None

    def __post_init__(self):
        if self.kind not in ("standard_normal", "empirical_file"):
            raise InvalidArgumentError(f"unknown prior kind {self.kind!r}")
        if self.kind == "empirical_file" and self.source is None:
            raise InvalidArgumentError("empirical_file prior requires a source path")


@dataclass(frozen=True)
class ParticleBelief:
    """m weighted utility vectors approximating the posterior."""

    particles: np.ndarray
    weights: np.ndarray
    rng_seed: int | None = None

    def __post_init__(self):
        particles = np.ascontiguousarray(np.asarray(self.particles, dtype=np.float64))
        weights = np.asarray(self.weights, dtype=np.float64)
        object.__setattr__(self, "particles", particles)
        object.__setattr__(self, "weights", weights)
        if particles.ndim != 2 or particles.shape[0] < 1:
            raise InvalidArgumentError("particles must be an m x d matrix, m >= 1")
        if not np.all(np.isfinite(particles)):
            raise InvalidArgumentError("particles contain non-finite entries")
        if weights.shape != (particles.shape[0],):
            raise InvalidArgumentError("weights must be a length-m vector")
        if np.any(weights < 0):
            raise InvalidArgumentError("weights must be non-negative")
        if abs(float(weights.sum()) - 1.0) > WEIGHT_SUM_TOL:
            raise InvalidArgumentError("weights must sum to 1")

    @property
    def m(self):
        return self.particles.shape[0]

    @property
    def dim(self):
        return self.particles.shape[1]


def sample_prior(spec: PriorSpec, m: int, seed) -> ParticleBelief:
    """Draw m i.i.d. particles from the prior with uniform weights."""
    if m < 1:
        raise InvalidArgumentError("m must be >= 1")
    rng = np.random.default_rng(seed)
    if spec.kind == "standard_normal":
        particles = rng.standard_normal((m, spec.dim))
    else:
        pool = load_catalog(spec.source).items
        if pool.shape[1] != spec.dim:
            raise InvalidArgumentError(
                f"empirical prior dim {pool.shape[1]} != requested dim {spec.dim}"
            )
        if m > pool.shape[0]:
            raise InvalidArgumentError(
                f"m={m} exceeds {pool.shape[0]} rows in empirical prior file"
            )
        idx = rng.choice(pool.shape[0], size=m, replace=False)
        particles = pool[np.sort(idx)]
    weights = np.full(m, 1.0 / m)
    return ParticleBelief(particles=particles, weights=weights, rng_seed=seed)


def _logits(slate_vectors, particles):
    return np.asarray(particles) @ np.asarray(slate_vectors, dtype=np.float64).T


def softmax_rows(logits, tau):
    z = logits / tau
    z = z - z.max(axis=-1, keepdims=True)
    e = np.exp(z)
    return e / e.sum(axis=-1, keepdims=True)


def _hardmax_rows(logits):
    out = np.zeros_like(logits)
    # argmax returns the first (smallest-index) maximiser
    idx = np.argmax(logits, axis=-1)
    out[np.arange(logits.shape[0]), idx] = 1.0
    return out


def response_prob_matrix(slate_vectors, particles, model: ResponseModel):
    """m x k matrix of response probabilities, one row per particle."""
    logits = _logits(slate_vectors, particles)
    if model.kind == "logistic":
        return softmax_rows(logits, model.temperature)
    return _hardmax_rows(logits)


def response_probs(slate_vectors, u, model: ResponseModel):
    """Choice distribution over the k slate items for a single utility vector."""
    slate_vectors = np.asarray(slate_vectors, dtype=np.float64)
    if slate_vectors.shape[0] < 2:
        raise InvalidArgumentError("slate must contain at least 2 items")
    return response_prob_matrix(slate_vectors, np.asarray(u)[None, :], model)[0]


def sample_response(slate_vectors, u, model: ResponseModel, rng) -> int:
    probs = response_probs(slate_vectors, u, model)
    if model.kind == "noiseless":
        return int(np.argmax(probs))
    return int(rng.choice(len(probs), p=probs))


def bayes_update(belief: ParticleBelief, slate_vectors, response: int, model: ResponseModel):
    """Reweight particles by the likelihood of the observed response."""
    slate_vectors = np.asarray(slate_vectors, dtype=np.float64)
    k = slate_vectors.shape[0]
    if not 0 <= response < k:
        raise InvalidArgumentError(f"response index {response} out of range for k={k}")
    lik = response_prob_matrix(slate_vectors, belief.particles, model)[:, response]
    new_w = belief.weights * lik
    total = float(new_w.sum())
    if total <= 0.0:
        raise DegeneratePosteriorError(
            "all posterior weights are zero after this response"
        )
    return ParticleBelief(
        particles=belief.particles, weights=new_w / total, rng_seed=belief.rng_seed
    )


def posterior_mean(belief: ParticleBelief):
    return belief.weights @ belief.particles


def best_item(belief: ParticleBelief, catalog: Catalog):
    """(index, EU*) of the catalog item with maximum expected utility."""
    scores = catalog.items @ posterior_mean(belief)
    idx = int(np.argmax(scores))
    return idx, float(scores[idx])


def regret(true_u, item_index: int, catalog: Catalog) -> float:
    """Utility gap to the true user's best item; always >= 0."""
    utilities = catalog.items @ np.asarray(true_u, dtype=np.float64)
    return float(utilities.max() - utilities[item_index])


def effective_sample_size(belief: ParticleBelief) -> float:
    return float(1.0 / np.square(belief.weights).sum())


def resample(belief: ParticleBelief, jitter_scale: float, rng) -> ParticleBelief:
    """Multinomial resampling with optional isotropic Gaussian rejuvenation."""
    if jitter_scale < 0:
        raise InvalidArgumentError("jitter_scale must be >= 0")
    m = belief.m
    idx = rng.choice(m, size=m, replace=True, p=belief.weights)
    particles = belief.particles[idx]
    if jitter_scale > 0:
        particles = particles + jitter_scale * rng.standard_normal(particles.shape)
    return ParticleBelief(
        particles=particles, weights=np.full(m, 1.0 / m), rng_seed=belief.rng_seed
    )
