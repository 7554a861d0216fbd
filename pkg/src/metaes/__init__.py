"""Island-parallel limited-memory CMA evolution strategy.

Parallel inner optimizers sample through products of rank-one transforms
rebuilt from small evolution-path pools; an outer layer ranks finished
runs, recombines their means, step-sizes, and pools, and replans the next
round with elitist continuations plus step-size explorers.
"""

from .benchfuncs import (FUNCTIONS, MULTIMODAL, UNIMODAL, BaseFunction,
                         ObjectiveSpec, eval_base, make_objective)
from .config import (ALGORITHMS, ConfigError, RunConfig, SuiteConfig,
                     build_run_config, config_hash, load_run_config,
                     load_suite_config)
from .lmcma import (EngineParams, InnerConfig, InnerResult, IsolationBudget,
                    LmCma, PathPool, apply_reconstruction, default_ne,
                    run_inner)
from .meta import (EpochFailure, OuterState, OuterWeights, absorb_epoch,
                   make_outer_weights, mutate_sigma, plan_epoch, rank_inner,
                   recombine_means, recombine_paths, recombine_sigma,
                   sample_ne, sample_sigma_uniform)
from .runner import (EpochRecord, RunReport, run_config, run_epoch_parallel,
                     run_meta, run_serial)
from .seeding import derive_seed

__version__ = "0.1.0"

__all__ = [
    "ALGORITHMS", "BaseFunction", "ConfigError", "EngineParams", "EpochFailure",
    "EpochRecord", "FUNCTIONS", "InnerConfig", "InnerResult", "IsolationBudget",
    "LmCma", "MULTIMODAL", "ObjectiveSpec", "OuterState", "OuterWeights",
    "PathPool", "RunConfig", "RunReport", "SuiteConfig", "UNIMODAL",
    "absorb_epoch", "apply_reconstruction", "build_run_config", "config_hash",
    "default_ne", "derive_seed", "eval_base", "load_run_config",
    "load_suite_config", "make_objective", "make_outer_weights", "mutate_sigma",
    "plan_epoch", "rank_inner", "recombine_means", "recombine_paths",
    "recombine_sigma", "run_config", "run_epoch_parallel", "run_inner",
    "run_meta", "run_serial", "sample_ne", "sample_sigma_uniform",
    "__version__",
]
