"""Outer coordination across parallel inner runs.

Finished runs are ranked by best cost; the top slice is recombined into a
new shared mean, step-size, and merged path pool, and the next round mixes
elitist continuations with step-size-mutated and uniformly re-drawn
explorers around the recombined center.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from .lmcma import EngineParams, InnerConfig, InnerResult, PathPool
from .seeding import derive_seed

__all__ = [
    "EpochFailure",
    "OuterWeights",
    "OuterState",
    "make_outer_weights",
    "rank_inner",
    "recombine_means",
    "recombine_sigma",
    "recombine_paths",
    "mutate_sigma",
    "sample_sigma_uniform",
    "sample_ne",
    "plan_epoch",
    "absorb_epoch",
    "MUTATE_LOW",
    "MUTATE_HIGH",
]

# multiplicative window for step-size mutation around the recombined value
MUTATE_LOW = 0.3
MUTATE_HIGH = 3.3

# fraction of fresh slots that mutate the recombined step-size instead of
# re-drawing it uniformly
_MUTATED_SHARE = 5


class EpochFailure(RuntimeError):
    """Raised when an epoch produced no usable result."""


@dataclass(frozen=True)
class OuterWeights:
    """Rank weights of the outer recombination: positive, decreasing, sum 1."""

    lambda_prime: int
    mu_prime: int
    w: np.ndarray


def make_outer_weights(lambda_prime: int, mu_prime: Optional[int] = None) -> OuterWeights:
    """Log-rank weights over the top mu_prime of lambda_prime results."""
    lambda_prime = int(lambda_prime)
    if lambda_prime < 1:
        raise ValueError("lambda_prime must be at least 1")
    if mu_prime is None:
        mu_prime = max(1, math.ceil(lambda_prime / 5))
    mu_prime = int(mu_prime)
    if not 1 <= mu_prime <= lambda_prime:
        raise ValueError("need 1 <= mu_prime <= lambda_prime")
    raw = np.log(mu_prime + 1.0) - np.log(np.arange(1, mu_prime + 1))
    return OuterWeights(lambda_prime, mu_prime, raw / raw.sum())


@dataclass
class OuterState:
    """Everything the coordinator carries between epochs."""

    m_prime: np.ndarray
    sigma_prime: float
    pooled: PathPool
    weights: OuterWeights
    sigma_max: float
    ne_range: tuple[int, int]
    best_x: Optional[np.ndarray]
    best_f: float
    epoch: int = 0
    master_seed: int = 0
    init_lower: float = -5.0
    init_upper: float = 5.0
    normalizer: str = "literal"
    stagnation_replan: bool = False
    stagnation_epochs: int = 5
    stalled_epochs: int = 0
    engine_params: EngineParams = field(default_factory=EngineParams)


def rank_inner(results: Sequence[InnerResult]) -> list[int]:
    """Indices sorted ascending by best cost.

    Non-finite bests rank last; ties prefer fewer evaluations, then the
    lower index, so the order is content-based and deterministic.
    """
    if not results:
        raise ValueError("no results to rank")
    key = [r.f_star if math.isfinite(r.f_star) else math.inf for r in results]
    if all(k == math.inf for k in key):
        raise EpochFailure("every inner run failed")
    return sorted(range(len(results)), key=lambda i: (key[i], results[i].evals, i))


def recombine_means(means: Sequence[np.ndarray], weights: OuterWeights) -> np.ndarray:
    """Weighted recombination of the ranked means (best first)."""
    if len(means) != weights.mu_prime:
        raise ValueError("expected exactly mu_prime means")
    stacked = np.asarray(means, dtype=float)
    if stacked.ndim != 2:
        raise ValueError("means must share one dimension")
    return weights.w @ stacked


def _weight_scale(weights: OuterWeights, normalizer: str) -> float:
    if normalizer == "literal":
        return math.sqrt(float(np.sum(weights.w)))
    if normalizer == "variance":
        return math.sqrt(float(np.sum(weights.w ** 2)))
    raise ValueError(f"normalizer must be 'literal' or 'variance', got {normalizer!r}")


def recombine_sigma(sigmas: Sequence[float], weights: OuterWeights,
                    normalizer: str = "literal") -> float:
    """Weighted recombination of the ranked step-sizes (best first).

    The weighted sum is divided by sqrt of the weight mass; with weights
    summing to one the 'literal' normalizer is an exact no-op, while
    'variance' divides by sqrt(sum w^2) instead.
    """
    sig = np.asarray(sigmas, dtype=float)
    if sig.shape != (weights.mu_prime,):
        raise ValueError("expected exactly mu_prime step-sizes")
    if not np.all((sig > 0) & np.isfinite(sig)):
        raise ValueError("step-sizes must be positive and finite")
    return float(weights.w @ sig) / _weight_scale(weights, normalizer)


def recombine_paths(pools: Sequence[PathPool], ne_list: Sequence[int],
                    weights: OuterWeights, capacity: Optional[int] = None,
                    normalizer: str = "literal") -> PathPool:
    """Merge the ranked pools' newest paths into one aligned pool.

    Slot layout: max(ne_list) slots, newest last.  Each pool contributes
    its newest ne_i paths (all it has, if fewer), weighted and aligned so
    that every pool's newest path lands in the last slot.  Slots nobody
    reaches stay zero.  Stamps restart at 1..K.
    """
    if len(pools) != weights.mu_prime or len(ne_list) != weights.mu_prime:
        raise ValueError("expected exactly mu_prime pools with their ne counts")
    if any(ne < 1 for ne in ne_list):
        raise ValueError("ne counts must be at least 1")
    k_slots = max(ne_list)
    cap = int(capacity) if capacity is not None else k_slots
    if cap < k_slots:
        raise ValueError("merged pool capacity cannot be below max(ne)")
    if all(len(p) == 0 for p in pools):
        return PathPool(cap)
    n = next(p.paths[0].size for p in pools if len(p))
    slots = np.zeros((k_slots, n))
    scale = _weight_scale(weights, normalizer)
    for w_i, pool, ne in zip(weights.w, pools, ne_list):
        take = pool.newest(ne)
        if not take:
            continue
        slots[k_slots - len(take):] += (w_i / scale) * np.asarray(take)
    return PathPool(cap, paths=list(slots), stamps=range(1, k_slots + 1))


def mutate_sigma(sigma_prime: float, rng: np.random.Generator) -> float:
    """Step-size mutated multiplicatively around the recombined value."""
    if not (sigma_prime > 0 and math.isfinite(sigma_prime)):
        raise ValueError("sigma_prime must be positive and finite")
    return float(rng.uniform(MUTATE_LOW * sigma_prime, MUTATE_HIGH * sigma_prime))


def sample_sigma_uniform(sigma_max: float, rng: np.random.Generator) -> float:
    """Fresh step-size drawn uniformly from (0, sigma_max].

    A tiny positive floor keeps degenerate zero draws out.
    """
    if not (sigma_max > 0 and math.isfinite(sigma_max)):
        raise ValueError("sigma_max must be positive and finite")
    return float(rng.uniform(1e-12 * sigma_max, sigma_max))


def sample_ne(ne_range: tuple[int, int], rng: np.random.Generator) -> int:
    """Reconstruction depth drawn uniformly from the inclusive range."""
    lo, hi = int(ne_range[0]), int(ne_range[1])
    if not 1 <= lo <= hi:
        raise ValueError("ne range must satisfy 1 <= low <= high")
    return int(rng.integers(lo, hi + 1))


def plan_epoch(state: OuterState, rng: np.random.Generator,
               survivors: Sequence[InnerResult]) -> list[InnerConfig]:
    """Build the next round of inner configurations.

    Ranked survivors continue with their own state.  Of the fresh slots,
    the first ceil((lambda' - mu')/5) mutate the recombined step-size and
    the rest re-draw it uniformly; all fresh slots share the recombined
    mean and the merged pool and sample their own reconstruction depth.
    On the very first round (no survivors yet) every slot is a fresh
    uniform draw around the initial mean with an empty pool.
    """
    lam, mu = state.weights.lambda_prime, state.weights.mu_prime
    if lam <= mu:
        raise ValueError("lambda_prime must exceed mu_prime when planning")
    seed = lambda i: derive_seed(state.master_seed, state.epoch, i)

    if not survivors:
        return [
            InnerConfig(m=state.m_prime.copy(),
                        sigma=sample_sigma_uniform(state.sigma_max, rng),
                        pool=PathPool(state.ne_range[1]),
                        ne=sample_ne(state.ne_range, rng),
                        seed=seed(i), continuation=False, branch="uniform",
                        params=state.engine_params)
            for i in range(lam)
        ]

    if len(survivors) != mu:
        raise ValueError("expected exactly mu_prime survivors")

    replan = state.stagnation_replan and state.stalled_epochs >= state.stagnation_epochs

    def fresh_mean() -> np.ndarray:
        if replan:
            return rng.uniform(state.init_lower, state.init_upper,
                               size=state.m_prime.size)
        return state.m_prime.copy()

    configs = [
        InnerConfig(m=r.m, sigma=r.sigma, pool=r.pool, ne=r.ne, seed=seed(i),
                    continuation=True, branch="elitist", params=state.engine_params)
        for i, r in enumerate(survivors)
    ]
    n_mutated = math.ceil((lam - mu) / _MUTATED_SHARE)
    for i in range(mu, lam):
        if i < mu + n_mutated:
            sigma = mutate_sigma(state.sigma_prime, rng)
            branch = "mutated"
        else:
            sigma = sample_sigma_uniform(state.sigma_max, rng)
            branch = "uniform"
        configs.append(InnerConfig(m=fresh_mean(), sigma=sigma, pool=state.pooled,
                                   ne=sample_ne(state.ne_range, rng), seed=seed(i),
                                   continuation=False, branch=branch,
                                   params=state.engine_params))
    return configs


def absorb_epoch(state: OuterState, results: Sequence[InnerResult]):
    """Fold one epoch's results into the outer state.

    Returns (state, survivors) where survivors are the top mu_prime results
    in rank order.  The recombined step-size is capped at sigma_max.  If
    every result failed, EpochFailure propagates and the state is left
    untouched.
    """
    weights = state.weights
    if len(results) != weights.lambda_prime:
        raise ValueError("expected exactly lambda_prime results")
    order = rank_inner(results)
    top = [results[i] for i in order[:weights.mu_prime]]
    m_prime = recombine_means([r.m for r in top], weights)
    sigma_prime = min(recombine_sigma([r.sigma for r in top], weights, state.normalizer),
                      state.sigma_max)
    pooled = recombine_paths([r.pool for r in top], [r.ne for r in top], weights,
                             capacity=max(state.ne_range[1], max(r.ne for r in top)),
                             normalizer=state.normalizer)
    improved = False
    best_x, best_f = state.best_x, state.best_f
    for r in results:
        if math.isfinite(r.f_star) and r.f_star < best_f:
            best_x, best_f = r.x_star, float(r.f_star)
            improved = True
    state.m_prime = np.asarray(m_prime, dtype=float)
    state.sigma_prime = float(sigma_prime)
    state.pooled = pooled
    state.best_x = best_x
    state.best_f = best_f
    state.stalled_epochs = 0 if improved else state.stalled_epochs + 1
    state.epoch += 1
    return state, top
