"""Gradient-based EVOI optimization over relaxed (continuous) slates.

All gradients are closed forms validated against finite differences; no
autodiff dependency. Softmax terms always subtract the row max before
exponentiation.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np

from .belief import ParticleBelief, ResponseModel, softmax_rows
from .catalog import Catalog
from .discrete import rand_user_top_item
from .errors import InvalidArgumentError
from .evoi import QuerySlate, deep_retr_uniq, deep_retrieval, evoi

INIT_KINDS = ("random", "rand_user_top_item", "balanced")
VARIANTS = ("free", "reg", "alter", "deep_retr")


@dataclass(frozen=True)
class ContinuousConfig:
    variant: str = "alter"
    learning_rate: float = 5e-4
    steps: int = 100          # gradient steps (per inner run for 'alter')
    outer_iterations: int = 5  # 'alter' only
    restarts: int = 10
    init: str = "rand_user_top_item"
    tau_opt: float = 0.02
    norm_bound: float | None = None  # defaults to the catalog max item norm
    lambda_reg: float = 1.0          # 'reg' only
    adam_beta1: float = 0.9
    adam_beta2: float = 0.999
    adam_eps: float = 1e-8
    seed: int = 0

    def __post_init__(self):
        if self.variant not in VARIANTS:
            raise InvalidArgumentError(f"unknown variant {self.variant!r}")
        if self.init not in INIT_KINDS:
            raise InvalidArgumentError(f"unknown init {self.init!r}")
        if not self.learning_rate > 0:
            raise InvalidArgumentError("learning_rate must be > 0")
        if self.steps < 1:
            raise InvalidArgumentError("steps must be >= 1")
        if not self.tau_opt > 0:
            raise InvalidArgumentError("tau_opt must be > 0")
        if self.norm_bound is not None and not self.norm_bound > 0:
            raise InvalidArgumentError("norm_bound must be > 0")

    @classmethod
    def from_json_dict(cls, d):
        """Accepts the external JSON key spelling (lr, outer_iters, ...)."""
        mapping = {
            "variant": "variant", "lr": "learning_rate", "steps": "steps",
            "outer_iters": "outer_iterations", "restarts": "restarts",
            "init": "init", "tau_opt": "tau_opt", "norm_bound": "norm_bound",
            "lambda_reg": "lambda_reg", "seed": "seed",
        }
        kwargs = {}
        for key, val in d.items():
            if key not in mapping:
                raise InvalidArgumentError(f"unknown continuous config key {key!r}")
            kwargs[mapping[key]] = val
        return cls(**kwargs)


class Adam:
    """Standard Adam ascent state for one array of parameters."""

    def __init__(self, shape, lr, beta1=0.9, beta2=0.999, eps=1e-8):
        self.lr = lr
        self.beta1 = beta1
        self.beta2 = beta2
        self.eps = eps
        self.t = 0
        self.m = np.zeros(shape)
        self.v = np.zeros(shape)

    def step(self, x, grad):
        """One ascent step; returns the updated parameters."""
        self.t += 1
        self.m = self.beta1 * self.m + (1 - self.beta1) * grad
        self.v = self.beta2 * self.v + (1 - self.beta2) * grad ** 2
        m_hat = self.m / (1 - self.beta1 ** self.t)
        v_hat = self.v / (1 - self.beta2 ** self.t)
        return x + self.lr * m_hat / (np.sqrt(v_hat) + self.eps)


def objective_free(X, belief: ParticleBelief, tau: float) -> float:
    """PEU with the recommendation slate equated to the query slate."""
    A = belief.particles @ np.asarray(X, dtype=np.float64).T
    S = softmax_rows(A, tau)
    return float(belief.weights @ (S * A).sum(axis=1))


def grad_free(X, belief: ParticleBelief, tau: float):
    """Exact gradient of objective_free with respect to X (k x d)."""
    X = np.asarray(X, dtype=np.float64)
    U, w = belief.particles, belief.weights
    A = U @ X.T                         # (m, k)
    S = softmax_rows(A, tau)
    b = (S * A).sum(axis=1, keepdims=True)
    G = w[:, None] * (S + S * (A - b) / tau)
    return G.T @ U


def _grad_fixed_rec(X, C, belief: ParticleBelief, tau: float):
    """Gradient of peu_matrix(X, Y, ...) w.r.t. X with C = U Y^T held fixed."""
    U, w = belief.particles, belief.weights
    A = U @ np.asarray(X, dtype=np.float64).T
    S = softmax_rows(A, tau)
    b = (S * C).sum(axis=1, keepdims=True)
    G = w[:, None] * (S * (C - b) / tau)
    return G.T @ U


def objective_deep_retr(X, belief: ParticleBelief, catalog: Catalog, tau: float):
    """(value, gradient) of the deep-retrieved PEU at X.

    Value uses the feasible maximizer for each response at the current X;
    the gradient flows through the softmax response probabilities only,
    holding the retrieved items fixed (piecewise-smooth contract).
    """
    X = np.asarray(X, dtype=np.float64)
    model = ResponseModel(kind="logistic", temperature=tau)
    slate = QuerySlate(vectors=X)
    rec = deep_retrieval(slate, belief, catalog, model)
    C = belief.particles @ rec.vectors.T
    A = belief.particles @ X.T
    S = softmax_rows(A, tau)
    value = float(belief.weights @ (S * C).sum(axis=1))
    return value, _grad_fixed_rec(X, C, belief, tau)


def regularizer_nearest(X, catalog: Catalog):
    """(value, gradient) of the sum of squared distances to nearest items."""
    X = np.asarray(X, dtype=np.float64)
    d2 = ((X[:, None, :] - catalog.items[None, :, :]) ** 2).sum(axis=2)
    nearest = np.argmin(d2, axis=1)
    diff = X - catalog.items[nearest]
    return float((diff ** 2).sum()), 2.0 * diff


def _project_rows(X, bound):
    norms = np.sqrt((X ** 2).sum(axis=1, keepdims=True))
    scale = np.minimum(1.0, bound / np.maximum(norms, 1e-300))
    return X * scale


def _weighted_kmeans(points, weights, k, rng, iters=20):
    """k-means++ seeding plus a fixed number of weighted Lloyd iterations."""
    n = points.shape[0]
    p = weights / weights.sum()
    centers = np.empty((k, points.shape[1]))
    centers[0] = points[rng.choice(n, p=p)]
    d2 = ((points - centers[0]) ** 2).sum(axis=1)
    for i in range(1, k):
        probs = p * d2
        total = probs.sum()
        if total <= 0:
            centers[i] = points[rng.choice(n, p=p)]
        else:
            centers[i] = points[rng.choice(n, p=probs / total)]
        d2 = np.minimum(d2, ((points - centers[i]) ** 2).sum(axis=1))
    for _ in range(iters):
        dist = ((points[:, None, :] - centers[None, :, :]) ** 2).sum(axis=2)
        assign = np.argmin(dist, axis=1)
        for i in range(k):
            mask = assign == i
            wsum = weights[mask].sum()
            if wsum > 0:
                centers[i] = (weights[mask][:, None] * points[mask]).sum(axis=0) / wsum
            else:
                centers[i] = points[rng.choice(n, p=p)]
    return centers


def init_slate(kind: str, belief: ParticleBelief, catalog: Catalog, k: int,
               rng, norm_bound: float | None = None):
    """Initial k x d relaxed slate for the continuous optimizers."""
    bound = norm_bound if norm_bound is not None else catalog.max_norm
    if kind == "random":
        X = rng.standard_normal((k, belief.dim))
        norms = np.sqrt((X ** 2).sum(axis=1, keepdims=True))
        return X / np.maximum(norms, 1e-300) * (bound / 2.0)
    if kind == "rand_user_top_item":
        return rand_user_top_item(catalog, belief, k, rng).vectors.copy()
    if kind == "balanced":
        centers = _weighted_kmeans(belief.particles, belief.weights, k, rng)
        norms = np.sqrt((centers ** 2).sum(axis=1, keepdims=True))
        return centers / np.maximum(norms, 1e-300) * bound
    raise InvalidArgumentError(f"unknown init kind {kind!r}")


def _run_restart(config: ContinuousConfig, belief, catalog, k, rng, bound):
    X = init_slate(config.init, belief, catalog, k, rng, bound)
    tau = config.tau_opt
    adam_kwargs = dict(
        lr=config.learning_rate, beta1=config.adam_beta1,
        beta2=config.adam_beta2, eps=config.adam_eps,
    )
    if config.variant == "free":
        opt = Adam(X.shape, **adam_kwargs)
        for _ in range(config.steps):
            X = _project_rows(opt.step(X, grad_free(X, belief, tau)), bound)
    elif config.variant == "reg":
        opt = Adam(X.shape, **adam_kwargs)
        for _ in range(config.steps):
            _, reg_grad = regularizer_nearest(X, catalog)
            X = opt.step(X, grad_free(X, belief, tau) - config.lambda_reg * reg_grad)
    elif config.variant == "deep_retr":
        opt = Adam(X.shape, **adam_kwargs)
        for _ in range(config.steps):
            _, grad = objective_deep_retr(X, belief, catalog, tau)
            X = opt.step(X, grad)
    else:  # alter
        model = ResponseModel(kind="logistic", temperature=tau)
        Y = deep_retrieval(QuerySlate(vectors=X), belief, catalog, model).vectors
        for _ in range(config.outer_iterations):
            C = belief.particles @ Y.T
            opt = Adam(X.shape, **adam_kwargs)
            for _ in range(config.steps):
                X = _project_rows(opt.step(X, _grad_fixed_rec(X, C, belief, tau)), bound)
            Y = deep_retrieval(QuerySlate(vectors=X), belief, catalog, model).vectors
    if not np.all(np.isfinite(X)):
        raise FloatingPointError("non-finite slate during ascent")
    return deep_retr_uniq(X, belief, catalog,
                          ResponseModel(kind="logistic", temperature=tau))


def optimize(config: ContinuousConfig, belief: ParticleBelief, catalog: Catalog,
             k: int, eval_model: ResponseModel,
             selection_belief: ParticleBelief | None = None) -> QuerySlate:
    """Run the configured variant over restarts; return the feasible slate with
    highest exact EVOI under the evaluation response model.

    ``selection_belief`` optionally scores the finished restarts under a
    richer particle set than the one used for the gradients, which reduces
    overfitting to sampling noise in small beliefs.
    """
    if catalog.n_items < k:
        raise InvalidArgumentError("catalog smaller than slate size")
    bound = config.norm_bound if config.norm_bound is not None else catalog.max_norm
    seeds = np.random.SeedSequence(config.seed).spawn(config.restarts)
    scoring = selection_belief if selection_belief is not None else belief
    best, best_val, best_r = None, -np.inf, -1
    for r in range(config.restarts):
        rng = np.random.default_rng(seeds[r])
        try:
            slate = _run_restart(config, belief, catalog, k, rng, bound)
        except FloatingPointError:
            continue
        val = evoi(slate, scoring, catalog, eval_model)
        if val > best_val + 1e-15:
            best, best_val, best_r = slate, val, r
    if best is None:
        raise InvalidArgumentError("all restarts diverged to non-finite slates")
    return best
