"""Epoch execution over a bounded worker pool, and the top-level run loops.

Every inner run draws its randomness from a seed derived from the
(master seed, epoch, slot) triple, so results are identical for any pool
size: worker scheduling decides only who computes, never what.
"""

from __future__ import annotations

import logging
import math
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

import numpy as np

from .benchfuncs import make_objective
from .config import RunConfig
from .lmcma import (EngineParams, InnerConfig, InnerResult, IsolationBudget,
                    PathPool, default_ne, run_inner)
from .meta import (EpochFailure, OuterState, absorb_epoch, make_outer_weights,
                   plan_epoch)
from .seeding import derive_seed

__all__ = [
    "EpochRecord",
    "RunReport",
    "run_epoch_parallel",
    "run_meta",
    "run_serial",
    "run_config",
]

log = logging.getLogger(__name__)

# reserved stream tags; planner slots never collide with worker indices
_PLAN_STREAM = 1 << 63
_INIT_STREAM = 1 << 63

FAILED_COST = math.inf

# consecutive fully-failed epochs with zero evaluations before giving up
_MAX_BARREN_EPOCHS = 10


@dataclass
class EpochRecord:
    """One trace row.  For serial runs, epoch is the generation index."""

    epoch: int
    evals: int
    wall_s: float
    best_f: float
    sigma_prime: float
    branch_best: Optional[dict] = None


@dataclass
class RunReport:
    """Everything one run produced."""

    rows: list[EpochRecord]
    x_star: Optional[np.ndarray]
    f_star: float
    total_evals: int
    total_wall_s: float
    failed_epochs: list[int] = field(default_factory=list)


def _failed_result(cfg: InnerConfig) -> InnerResult:
    # echo the config's state so recombination still has usable vectors
    return InnerResult(m=np.array(cfg.m, dtype=float), sigma=cfg.sigma,
                       pool=cfg.pool.copy(), x_star=np.array(cfg.m, dtype=float),
                       f_star=FAILED_COST, evals=0, generations=0, ne=cfg.ne,
                       failed=True)


def run_epoch_parallel(configs: Sequence[InnerConfig], objective,
                       pool_size: int, budget: IsolationBudget, *,
                       fault_hook: Optional[Callable[[int, InnerConfig], None]] = None
                       ) -> list[InnerResult]:
    """Run one epoch's configs over at most pool_size concurrent workers.

    Results come back indexed by config order.  A worker that raises is
    converted into a failed sentinel result; the other slots are unaffected.
    The optional fault_hook runs at worker start and exists so tests can
    inject failures deterministically.
    """
    if pool_size < 1:
        raise ValueError("pool_size must be at least 1")

    def task(index: int, cfg: InnerConfig) -> InnerResult:
        if fault_hook is not None:
            fault_hook(index, cfg)
        rng = np.random.default_rng(cfg.seed)
        return run_inner(cfg, objective, budget, rng)

    results: list[InnerResult] = []
    with ThreadPoolExecutor(max_workers=pool_size) as pool:
        futures = [pool.submit(task, i, c) for i, c in enumerate(configs)]
        for i, fut in enumerate(futures):
            try:
                results.append(fut.result())
            except Exception:
                log.warning("inner run %d failed", i, exc_info=True)
                results.append(_failed_result(configs[i]))
    return results


def _initial_state(cfg: RunConfig, objective) -> OuterState:
    rng_init = np.random.default_rng(derive_seed(cfg.seed, _INIT_STREAM, 0))
    m0 = rng_init.uniform(cfg.init_box[0], cfg.init_box[1], size=cfg.n)
    f0 = float(objective.evaluate(m0))
    return OuterState(
        m_prime=m0, sigma_prime=cfg.sigma0, pooled=PathPool(cfg.ne_range[1]),
        weights=make_outer_weights(cfg.lambda_prime, cfg.mu_prime),
        sigma_max=cfg.sigma_max, ne_range=cfg.ne_range,
        best_x=m0.copy(), best_f=f0, master_seed=cfg.seed,
        init_lower=cfg.init_box[0], init_upper=cfg.init_box[1],
        normalizer=cfg.normalizer, stagnation_replan=cfg.stagnation_replan,
        stagnation_epochs=cfg.stagnation_epochs,
        engine_params=EngineParams(lambda_=cfg.lambda_inner, z_star=cfg.z_star,
                                   d_sigma=cfg.d_sigma, c1=cfg.c1, cc=cfg.cc,
                                   t_gap=cfg.t_gap))


def run_meta(cfg: RunConfig, *,
             fault_hook: Optional[Callable[[int, int, InnerConfig], None]] = None
             ) -> RunReport:
    """Plan/run/absorb epochs until the total budget or threshold is hit.

    With evaluation-based budgets the full report is replayable from the
    config alone; wall-clock columns are then recorded as 0.0 so traces
    from identical configs are byte-identical (real timings stay in the
    summary).  A fully-failed epoch is recorded and skipped; the loop
    carries on with the previous state.
    """
    objective = make_objective(cfg.function, cfg.n, cfg.seed)
    state = _initial_state(cfg, objective)
    deterministic = cfg.tau.deterministic and cfg.total.deterministic
    lam = cfg.lambda_prime
    rows: list[EpochRecord] = []
    failed_epochs: list[int] = []
    survivors: list[InnerResult] = []
    barren = 0
    start = time.monotonic()

    while True:
        used = objective.eval_count
        if state.best_f <= cfg.threshold:
            break
        if cfg.total.mode == "max_evaluations" and used >= cfg.total.amount:
            break
        if (cfg.total.mode == "wall_clock_seconds"
                and time.monotonic() - start >= cfg.total.amount):
            break

        budget = cfg.tau
        if cfg.total.mode == "max_evaluations" and budget.mode == "max_evaluations":
            # keep the last epoch from blowing through the total budget
            per_worker = math.ceil((cfg.total.amount - used) / lam)
            budget = IsolationBudget("max_evaluations",
                                     min(budget.amount, max(1.0, per_worker)))

        epoch = state.epoch
        rng_epoch = np.random.default_rng(derive_seed(cfg.seed, epoch, _PLAN_STREAM))
        configs = plan_epoch(state, rng_epoch, survivors)
        hook = None
        if fault_hook is not None:
            hook = lambda i, c, _e=epoch: fault_hook(_e, i, c)
        results = run_epoch_parallel(configs, objective, cfg.pool_size, budget,
                                     fault_hook=hook)
        try:
            state, survivors = absorb_epoch(state, results)
        except EpochFailure:
            failed_epochs.append(epoch)
            # a failed epoch that consumed nothing leaves an eval-based
            # total budget untouched, so retries must be bounded or a
            # permanent fault would loop forever
            if objective.eval_count == used:
                barren += 1
                if barren >= _MAX_BARREN_EPOCHS:
                    raise RuntimeError(
                        f"{barren} consecutive epochs failed without consuming "
                        "evaluations; aborting") from None
            else:
                barren = 0
            # advance the epoch counter so the retry gets fresh seeds
            state.epoch += 1
            continue
        barren = 0

        branch_best: dict[str, float] = {}
        for name in ("elitist", "mutated", "uniform"):
            costs = [r.f_star for r, c in zip(results, configs)
                     if c.branch == name and math.isfinite(r.f_star)]
            branch_best[name] = min(costs) if costs else math.nan
        wall = 0.0 if deterministic else time.monotonic() - start
        rows.append(EpochRecord(epoch, objective.eval_count, wall,
                                state.best_f, state.sigma_prime, branch_best))

    return RunReport(rows=rows, x_star=state.best_x, f_star=state.best_f,
                     total_evals=objective.eval_count,
                     total_wall_s=time.monotonic() - start,
                     failed_epochs=failed_epochs)


def run_serial(cfg: RunConfig) -> RunReport:
    """Single uninterrupted inner run under the total budget.

    Shares the initial-mean draw with run_meta so both algorithms start
    from the same point for a given master seed.  Trace rows are written
    per generation with the inner step-size in the sigma column.
    """
    objective = make_objective(cfg.function, cfg.n, cfg.seed)
    rng_init = np.random.default_rng(derive_seed(cfg.seed, _INIT_STREAM, 0))
    m0 = rng_init.uniform(cfg.init_box[0], cfg.init_box[1], size=cfg.n)
    ne = cfg.ne if cfg.ne is not None else default_ne(cfg.n)
    params = EngineParams(lambda_=cfg.lambda_inner, z_star=cfg.z_star,
                          d_sigma=cfg.d_sigma, c1=cfg.c1, cc=cfg.cc,
                          t_gap=cfg.t_gap)
    inner_cfg = InnerConfig(m=m0, sigma=cfg.sigma0, pool=PathPool(ne), ne=ne,
                            seed=derive_seed(cfg.seed, 0, 0), branch="serial",
                            params=params)
    deterministic = cfg.total.deterministic
    rows: list[EpochRecord] = []
    start = time.monotonic()

    def on_generation(gen: int, evals: int, best_f: float, sigma: float) -> None:
        wall = 0.0 if deterministic else time.monotonic() - start
        rows.append(EpochRecord(gen, evals, wall, best_f, sigma))

    rng = np.random.default_rng(inner_cfg.seed)
    result = run_inner(inner_cfg, objective, cfg.total, rng,
                       on_generation=on_generation, stop_below=cfg.threshold)
    return RunReport(rows=rows, x_star=result.x_star, f_star=result.f_star,
                     total_evals=objective.eval_count,
                     total_wall_s=time.monotonic() - start)


def run_config(cfg: RunConfig, **kwargs) -> RunReport:
    """Dispatch a resolved config to its algorithm."""
    if cfg.algorithm == "lmcma_serial":
        return run_serial(cfg)
    return run_meta(cfg, **kwargs)
