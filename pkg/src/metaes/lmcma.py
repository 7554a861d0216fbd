"""Limited-memory CMA inner engine.

Candidates are sampled through a product of rank-one transforms rebuilt on
the fly from a small pool of stored evolution paths, so memory stays
O(ne * n) instead of O(n^2).  Step-size follows a population success rule:
the new population is ranked jointly with the previous one and the step
grows or shrinks with the normalized rank gain.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass
from typing import Callable, Optional, Sequence

import numpy as np

__all__ = [
    "PathPool",
    "EngineParams",
    "InnerConfig",
    "InnerResult",
    "IsolationBudget",
    "LmCma",
    "apply_reconstruction",
    "run_inner",
    "default_c1",
    "default_cc",
    "default_t_gap",
    "default_ne",
]


def default_c1(n: int) -> float:
    return 1.0 / (10.0 * math.log(n + 1.0))


def default_cc(n: int) -> float:
    return 1.0 / n


def default_t_gap(n: int, ne: int) -> int:
    # Stored paths must outlive the p_c memory (~n generations at the
    # default cc) or they arrive near-parallel and the reconstruction
    # product over-amplifies their shared direction.
    return 2 * n


def default_ne(n: int) -> int:
    return 4 + int(3.0 * math.log(n))


class PathPool:
    """Evolution paths ordered oldest to newest, with generation stamps.

    Holds at most ``capacity`` paths.  When full, eviction keeps the stamps
    spread out in time: if any adjacent pair sits closer than the caller's
    target gap, the newer member of the tightest pair is dropped; otherwise
    the spacing is already healthy and the oldest path goes.
    """

    def __init__(self, capacity: int, paths: Sequence = (), stamps: Sequence[int] = ()):
        capacity = int(capacity)
        if capacity < 1:
            raise ValueError("pool capacity must be at least 1")
        paths = [np.array(p, dtype=float) for p in paths]
        stamps = [int(s) for s in stamps]
        if len(paths) != len(stamps):
            raise ValueError("paths and stamps must pair up")
        if len(paths) > capacity:
            raise ValueError("more paths than capacity")
        if any(b <= a for a, b in zip(stamps, stamps[1:])):
            raise ValueError("stamps must be strictly increasing")
        self.capacity = capacity
        self.paths = paths
        self.stamps = stamps

    def __len__(self) -> int:
        return len(self.paths)

    @property
    def newest_stamp(self) -> Optional[int]:
        return self.stamps[-1] if self.stamps else None

    def newest(self, k: int) -> list:
        """The last min(k, count) paths, oldest of the selection first."""
        k = max(0, min(int(k), len(self.paths)))
        return self.paths[len(self.paths) - k:]

    def store(self, path, stamp: int, min_gap: Optional[int] = None) -> None:
        stamp = int(stamp)
        if self.stamps and stamp <= self.stamps[-1]:
            raise ValueError("stamp must exceed the newest stored stamp")
        if len(self.paths) >= self.capacity:
            self._evict(min_gap)
        self.paths.append(np.array(path, dtype=float))
        self.stamps.append(stamp)

    def _evict(self, min_gap: Optional[int]) -> None:
        drop = 0
        if len(self.paths) >= 2:
            gaps = [b - a for a, b in zip(self.stamps, self.stamps[1:])]
            if min_gap is None or min(gaps) < min_gap:
                # newer member of the tightest pair; first such pair on ties
                drop = int(np.argmin(gaps)) + 1
        del self.paths[drop]
        del self.stamps[drop]

    def copy(self) -> "PathPool":
        return PathPool(self.capacity, self.paths, self.stamps)


def apply_reconstruction(pool: PathPool, ne: int, c1: float, z) -> np.ndarray:
    """Apply the stored-path transform to one raw draw.

    Walks the newest ``ne`` paths from newest to oldest; each contributes a
    rank-one update v <- (1 - c1/2) v + (c1/2) (p . v) p.  An empty pool or
    ne = 0 returns z unchanged.  Cost is O(ne * n); no n x n matrix is ever
    formed.
    """
    v = np.array(z, dtype=float)
    if v.ndim != 1:
        raise ValueError("z must be a 1-d vector")
    if not np.all(np.isfinite(v)):
        raise ValueError("z must be finite")
    keep = 1.0 - 0.5 * c1
    gain = 0.5 * c1
    for p in reversed(pool.newest(ne)):
        v = keep * v + gain * (p @ v) * p
    return v


def _reconstruct_batch(pool: PathPool, ne: int, c1: float, draws: np.ndarray) -> np.ndarray:
    # Same recursion as apply_reconstruction, vectorized across rows.  A
    # runaway path pool may overflow; the caller treats non-finite
    # candidates as lost, so the warning is suppressed here.
    out = np.array(draws, dtype=float)
    keep = 1.0 - 0.5 * c1
    gain = 0.5 * c1
    with np.errstate(over="ignore", invalid="ignore"):
        for p in reversed(pool.newest(ne)):
            out = keep * out + gain * np.outer(out @ p, p)
    return out


def _average_ranks(values: np.ndarray) -> np.ndarray:
    # 0-based ranks; tied values share the average of their positions.
    order = np.argsort(values, kind="stable")
    ranks = np.empty(values.size, dtype=float)
    sorted_vals = values[order]
    i = 0
    while i < sorted_vals.size:
        j = i
        while j + 1 < sorted_vals.size and sorted_vals[j + 1] == sorted_vals[i]:
            j += 1
        ranks[order[i:j + 1]] = 0.5 * (i + j)
        i = j + 1
    return ranks


def _rank_gain(current: np.ndarray, previous: np.ndarray) -> float:
    """Normalized rank gain of the current population over the previous.

    Both populations are ranked jointly (ascending cost, ties averaged);
    the result lies in [-1, 1], 0 when neither generation dominates.
    """
    lam = current.size
    ranks = _average_ranks(np.concatenate([current, previous]))
    return float((ranks[lam:].sum() - ranks[:lam].sum()) / (lam * lam))


@dataclass(frozen=True)
class EngineParams:
    """Inner-engine tunables; ``None`` fields resolve from n and ne."""

    lambda_: int = 19
    mu: Optional[int] = None
    c1: Optional[float] = None
    cc: Optional[float] = None
    t_gap: Optional[int] = None
    z_star: float = 0.25
    d_sigma: float = 1.0


class LmCma:
    """One inner optimizer: ask for candidates, tell costs back.

    State lives on the instance; the caller owns the random generator and
    passes it into each ask, which keeps runs replayable from a seed.
    """

    def __init__(self, m, sigma: float, pool: PathPool, ne: int,
                 params: Optional[EngineParams] = None):
        params = params or EngineParams()
        self.m = np.array(m, dtype=float)
        if self.m.ndim != 1 or self.m.size < 2:
            raise ValueError("mean must be a vector with at least two components")
        n = self.m.size
        if not (sigma > 0 and math.isfinite(sigma)):
            raise ValueError("sigma must be positive and finite")
        self.sigma = float(sigma)
        ne = int(ne)
        if not 1 <= ne <= pool.capacity:
            raise ValueError("ne must satisfy 1 <= ne <= pool capacity")
        self.pool = pool
        self.ne = ne
        self.lam = int(params.lambda_)
        if self.lam < 2:
            raise ValueError("population size must be at least 2")
        self.mu = params.mu if params.mu is not None else self.lam // 2
        if not 1 <= self.mu <= self.lam:
            raise ValueError("mu must satisfy 1 <= mu <= lambda")
        raw = np.log(self.mu + 1.0) - np.log(np.arange(1, self.mu + 1))
        self.w = raw / raw.sum()
        self.mu_w = 1.0 / float(self.w @ self.w)
        self.c1 = params.c1 if params.c1 is not None else default_c1(n)
        if not 0.0 < self.c1 < 1.0:
            raise ValueError("c1 must lie in (0, 1)")
        self.cc = params.cc if params.cc is not None else default_cc(n)
        if not 0.0 < self.cc <= 1.0:
            raise ValueError("cc must lie in (0, 1]")
        self.t_gap = params.t_gap if params.t_gap is not None else default_t_gap(n, ne)
        if self.t_gap < 1:
            raise ValueError("t_gap must be at least 1")
        self.z_star = float(params.z_star)
        self.d_sigma = float(params.d_sigma)
        self.p_c = np.zeros(n)
        # continue counting from an inherited pool so stamps stay increasing
        self.t = self.pool.newest_stamp if len(self.pool) else 0
        self.stalled = False
        self._prev_costs: Optional[np.ndarray] = None

    def ask(self, rng: np.random.Generator):
        """Sample the population; returns (candidates, raw draws)."""
        draws = rng.standard_normal((self.lam, self.m.size))
        steps = _reconstruct_batch(self.pool, self.ne, self.c1, draws)
        return self.m + self.sigma * steps, draws

    def tell(self, candidates, draws, costs) -> None:
        """Rank the population and update mean, path, pool, and step-size.

        Non-finite costs rank last.  If every cost is non-finite the state
        is left untouched and ``stalled`` is set.
        """
        candidates = np.asarray(candidates, dtype=float)
        costs = np.asarray(costs, dtype=float)
        if candidates.shape != (self.lam, self.m.size) or costs.shape != (self.lam,):
            raise ValueError("candidates/costs do not match the population shape")
        key = np.where(np.isfinite(costs), costs, np.inf)
        if not np.isfinite(key).any():
            self.stalled = True
            return
        self.stalled = False
        order = np.argsort(key, kind="stable")
        elite = candidates[order[:self.mu]]
        m_old = self.m
        # degenerate elites (overflowed candidates) may poison the mean;
        # the run then loses selection upstream, so just keep going
        with np.errstate(over="ignore", invalid="ignore"):
            self.m = self.w @ elite
            step = (self.m - m_old) / self.sigma
            self.p_c = ((1.0 - self.cc) * self.p_c
                        + math.sqrt(self.cc * (2.0 - self.cc) * self.mu_w) * step)
        last = self.pool.newest_stamp
        due = last is None or self.t - last >= self.t_gap
        # never let an overflowed path into the pool; merged pools must
        # stay finite even when one run went degenerate
        if due and np.all(np.isfinite(self.p_c)):
            snap = self.p_c
            # cap the stored norm: reconstruction amplifies along each
            # stored path for that path's whole pool lifetime, so letting
            # inflated snapshots in feeds back into ever larger steps
            cap = 2.0 * math.sqrt(self.m.size)
            norm = float(np.linalg.norm(snap))
            if norm > cap:
                snap = snap * (cap / norm)
            self.pool.store(snap, self.t, min_gap=self.t_gap)
        if self._prev_costs is not None:
            gain = _rank_gain(key, self._prev_costs)
            self.sigma *= math.exp((gain - self.z_star) / self.d_sigma)
        self._prev_costs = key
        self.t += 1


_BUDGET_MODES = ("wall_clock_seconds", "max_evaluations", "max_generations")


@dataclass(frozen=True)
class IsolationBudget:
    """How long one isolated inner run may last."""

    mode: str
    amount: float

    def __post_init__(self):
        if self.mode not in _BUDGET_MODES:
            raise ValueError(f"budget mode must be one of {_BUDGET_MODES}")
        if not (math.isfinite(self.amount) and self.amount >= 0):
            raise ValueError("budget amount must be finite and non-negative")

    @property
    def deterministic(self) -> bool:
        """Whether runs under this budget are replayable from seeds alone."""
        return self.mode != "wall_clock_seconds"


@dataclass
class InnerConfig:
    """Everything one isolated inner run needs."""

    m: np.ndarray
    sigma: float
    pool: PathPool
    ne: int
    seed: int
    continuation: bool = False
    branch: str = "uniform"
    params: Optional[EngineParams] = None


@dataclass
class InnerResult:
    """Terminal state and best point of one inner run."""

    m: np.ndarray
    sigma: float
    pool: PathPool
    x_star: np.ndarray
    f_star: float
    evals: int
    generations: int
    ne: int
    failed: bool = False


def run_inner(cfg: InnerConfig, objective, budget: IsolationBudget,
              rng: np.random.Generator, *,
              on_generation: Optional[Callable[[int, int, float, float], None]] = None,
              stop_below: Optional[float] = None) -> InnerResult:
    """Run one isolated engine until its budget is exhausted.

    The initial mean is always evaluated (and counted), so even a zero
    budget yields a meaningful best.  Input state is copied up front:
    several configs may share one pool object and run concurrently.
    Candidates with non-finite components are not sent to the objective;
    they get +inf cost and lose the ranking.
    """
    engine = LmCma(np.array(cfg.m, dtype=float), cfg.sigma, cfg.pool.copy(),
                   cfg.ne, cfg.params)
    best_f = float(objective.evaluate(engine.m))
    best_x = engine.m.copy()
    evals = 1
    gens = 0
    start = time.monotonic()
    if on_generation is not None:
        on_generation(0, evals, best_f, engine.sigma)

    def exhausted() -> bool:
        if budget.mode == "max_evaluations":
            return evals >= budget.amount
        if budget.mode == "max_generations":
            return gens >= budget.amount
        return time.monotonic() - start >= budget.amount

    dead_generations = 0
    while not exhausted():
        if stop_below is not None and best_f <= stop_below:
            break
        candidates, draws = engine.ask(rng)
        usable = np.isfinite(candidates).all(axis=1)
        costs = np.full(engine.lam, np.inf)
        if usable.any():
            costs[usable] = objective.evaluate_many(candidates[usable])
            evals += int(usable.sum())
            dead_generations = 0
        else:
            # a state that cannot produce evaluable candidates will never
            # consume its evaluation budget; bail out instead of spinning
            dead_generations += 1
            if dead_generations >= 2:
                break
        engine.tell(candidates, draws, costs)
        gens += 1
        finite = np.isfinite(costs)
        if finite.any():
            i = int(np.argmin(np.where(finite, costs, np.inf)))
            if costs[i] < best_f:
                best_f = float(costs[i])
                best_x = candidates[i].copy()
        if on_generation is not None:
            on_generation(gens, evals, best_f, engine.sigma)
    return InnerResult(m=engine.m, sigma=engine.sigma, pool=engine.pool,
                       x_star=best_x, f_star=best_f, evals=evals,
                       generations=gens, ne=engine.ne)
