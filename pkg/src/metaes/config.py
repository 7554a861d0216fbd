"""Run and suite configuration: flat YAML documents with typed keys.

The accepted grammar is documented in the README.  Loading resolves every
default so downstream code only ever sees fully-populated configs.
"""

from __future__ import annotations

import hashlib
import json
import math
import os
from dataclasses import dataclass, asdict
from typing import Any, Optional

import yaml

from .benchfuncs import FUNCTIONS, UNIMODAL
from .lmcma import IsolationBudget, default_ne

__all__ = [
    "ConfigError",
    "RunConfig",
    "SuiteConfig",
    "ALGORITHMS",
    "PROFILES",
    "load_run_config",
    "load_suite_config",
    "build_run_config",
    "config_hash",
    "OUTDIR_ENV",
]

ALGORITHMS = ("lmcma_serial", "dlmcma")
OUTDIR_ENV = "METAES_OUTDIR"

# named presets merged underneath the file's explicit keys
PROFILES = {
    "paper": {
        "n": 2000,
        "tau": {"mode": "wall_clock_seconds", "amount": 150.0},
        "total": {"mode": "wall_clock_seconds", "amount": 3 * 3600.0},
        "reproducible": False,
    },
}


class ConfigError(ValueError):
    """Invalid configuration; the message names the offending key."""


@dataclass(frozen=True)
class RunConfig:
    """One fully-resolved optimizer run."""

    function: str
    n: int
    seed: int
    algorithm: str
    outdir: str
    lambda_prime: int
    mu_prime: int
    tau: IsolationBudget
    total: IsolationBudget
    threshold: float
    sigma0: float
    sigma_max: float
    ne_range: tuple[int, int]
    init_box: tuple[float, float]
    pool_size: int
    normalizer: str
    lambda_inner: int
    z_star: float
    d_sigma: float
    ne: Optional[int]
    c1: Optional[float]
    cc: Optional[float]
    t_gap: Optional[int]
    reproducible: bool
    stagnation_replan: bool
    stagnation_epochs: int
    figures: bool


@dataclass(frozen=True)
class SuiteConfig:
    """A benchmark suite: the cross product of functions x algorithms x seeds."""

    functions: tuple[str, ...]
    algorithms: tuple[str, ...]
    seeds: tuple[int, ...]
    outdir: str
    base: dict


def _require(mapping: dict, key: str, kind, *, default=None, required=False):
    if key not in mapping or mapping[key] is None:
        if required:
            raise ConfigError(f"key '{key}' is required")
        return default
    value = mapping[key]
    if kind is float and isinstance(value, int) and not isinstance(value, bool):
        value = float(value)
    if kind is int and isinstance(value, bool):
        raise ConfigError(f"key '{key}': expected {kind.__name__}, got bool")
    if not isinstance(value, kind):
        raise ConfigError(f"key '{key}': expected {kind.__name__}, got {type(value).__name__}")
    return value


def _budget(mapping: dict, key: str, default: dict) -> IsolationBudget:
    raw = mapping.get(key, default)
    if not isinstance(raw, dict):
        raise ConfigError(f"key '{key}': expected a mapping with 'mode' and 'amount'")
    mode = raw.get("mode")
    amount = raw.get("amount")
    if not isinstance(mode, str):
        raise ConfigError(f"key '{key}.mode' is required and must be a string")
    if isinstance(amount, bool) or not isinstance(amount, (int, float)):
        raise ConfigError(f"key '{key}.amount' is required and must be a number")
    if amount <= 0:
        raise ConfigError(f"key '{key}.amount' must be positive")
    try:
        return IsolationBudget(mode, float(amount))
    except ValueError as exc:
        raise ConfigError(f"key '{key}': {exc}") from None


_RUN_KEYS = {
    "function", "n", "seed", "algorithm", "outdir", "lambda_prime", "mu_prime",
    "tau", "total", "threshold", "sigma0", "sigma_max", "ne_range", "init_box",
    "pool_size", "normalizer", "lambda_inner", "z_star", "d_sigma", "ne",
    "c1", "cc", "t_gap",
    "reproducible", "stagnation_replan", "stagnation_epochs", "figures",
}


def build_run_config(mapping: dict, *, profile: Optional[str] = None) -> RunConfig:
    """Resolve defaults and validate one run mapping into a RunConfig."""
    if not isinstance(mapping, dict):
        raise ConfigError("run config must be a mapping of keys to values")
    if profile is not None:
        if profile not in PROFILES:
            raise ConfigError(f"unknown profile {profile!r}; available: {sorted(PROFILES)}")
        merged = dict(PROFILES[profile])
        merged.update({k: v for k, v in mapping.items() if v is not None})
        mapping = merged
    unknown = set(mapping) - _RUN_KEYS
    if unknown:
        raise ConfigError(f"unknown key '{sorted(unknown)[0]}'")

    function = _require(mapping, "function", str, required=True)
    if function not in FUNCTIONS:
        raise ConfigError(
            f"key 'function': unknown function id {function!r}; "
            f"known ids: {', '.join(FUNCTIONS)}")
    algorithm = _require(mapping, "algorithm", str, default="dlmcma")
    if algorithm not in ALGORITHMS:
        raise ConfigError(f"key 'algorithm': must be one of {ALGORITHMS}, got {algorithm!r}")

    n = _require(mapping, "n", int, required=True)
    if n < 2:
        raise ConfigError("key 'n': dimension must be at least 2")
    seed = _require(mapping, "seed", int, default=0)
    if seed < 0:
        raise ConfigError("key 'seed': must be non-negative")

    lambda_prime = _require(mapping, "lambda_prime", int, default=None)
    if lambda_prime is None:
        if profile == "paper" and algorithm == "dlmcma":
            lambda_prime = 380 if function in UNIMODAL else 540
        else:
            lambda_prime = 8
    mu_prime = _require(mapping, "mu_prime", int,
                        default=max(1, math.ceil(lambda_prime / 5)))
    if algorithm == "dlmcma" and not 1 <= mu_prime < lambda_prime:
        raise ConfigError("key 'mu_prime': need 1 <= mu_prime < lambda_prime")

    tau = _budget(mapping, "tau", {"mode": "max_evaluations", "amount": 2500})
    total = _budget(mapping, "total", {"mode": "max_evaluations", "amount": 200_000})
    if total.mode == "max_generations":
        raise ConfigError("key 'total.mode': the run-level budget is wall_clock_seconds "
                          "or max_evaluations")

    threshold = _require(mapping, "threshold", float, default=1e-10)
    if threshold <= 0:
        raise ConfigError("key 'threshold': must be positive")
    sigma0 = _require(mapping, "sigma0", float, default=3.0)
    if sigma0 <= 0:
        raise ConfigError("key 'sigma0': must be positive")
    sigma_max = _require(mapping, "sigma_max", float, default=2.0 * sigma0)
    if sigma_max <= 0:
        raise ConfigError("key 'sigma_max': must be positive")

    ne_range = mapping.get("ne_range")
    if ne_range is None:
        ne_range = (4, max(8, default_ne(n)))
    if (not isinstance(ne_range, (list, tuple)) or len(ne_range) != 2
            or not all(isinstance(v, int) and not isinstance(v, bool) for v in ne_range)):
        raise ConfigError("key 'ne_range': expected two integers [low, high]")
    ne_range = (int(ne_range[0]), int(ne_range[1]))
    if not 1 <= ne_range[0] <= ne_range[1]:
        raise ConfigError("key 'ne_range': need 1 <= low <= high")

    init_box = mapping.get("init_box", (-5.0, 5.0))
    if (not isinstance(init_box, (list, tuple)) or len(init_box) != 2
            or not all(isinstance(v, (int, float)) and not isinstance(v, bool)
                       for v in init_box)):
        raise ConfigError("key 'init_box': expected two numbers [low, high]")
    init_box = (float(init_box[0]), float(init_box[1]))
    if not init_box[0] < init_box[1]:
        raise ConfigError("key 'init_box': need low < high")

    pool_size = _require(mapping, "pool_size", int,
                         default=min(lambda_prime, os.cpu_count() or 1))
    if pool_size < 1:
        raise ConfigError("key 'pool_size': must be at least 1")
    normalizer = _require(mapping, "normalizer", str, default="literal")
    if normalizer not in ("literal", "variance"):
        raise ConfigError("key 'normalizer': must be 'literal' or 'variance'")

    lambda_inner = _require(mapping, "lambda_inner", int, default=19)
    if lambda_inner < 2:
        raise ConfigError("key 'lambda_inner': must be at least 2")
    z_star = _require(mapping, "z_star", float, default=0.25)
    d_sigma = _require(mapping, "d_sigma", float, default=1.0)
    if d_sigma <= 0:
        raise ConfigError("key 'd_sigma': must be positive")
    ne = _require(mapping, "ne", int, default=None)
    if ne is not None and ne < 1:
        raise ConfigError("key 'ne': must be at least 1")
    c1 = _require(mapping, "c1", float, default=None)
    if c1 is not None and not 0.0 < c1 < 1.0:
        raise ConfigError("key 'c1': must lie in (0, 1)")
    cc = _require(mapping, "cc", float, default=None)
    if cc is not None and not 0.0 < cc <= 1.0:
        raise ConfigError("key 'cc': must lie in (0, 1]")
    t_gap = _require(mapping, "t_gap", int, default=None)
    if t_gap is not None and t_gap < 1:
        raise ConfigError("key 't_gap': must be at least 1")

    reproducible = _require(mapping, "reproducible", bool, default=True)
    if reproducible and not (tau.deterministic and total.deterministic):
        raise ConfigError("key 'reproducible': wall-clock budgets are not replayable; "
                          "set reproducible: false to use them")
    stagnation_replan = _require(mapping, "stagnation_replan", bool, default=False)
    stagnation_epochs = _require(mapping, "stagnation_epochs", int, default=5)
    if stagnation_epochs < 1:
        raise ConfigError("key 'stagnation_epochs': must be at least 1")
    figures = _require(mapping, "figures", bool, default=True)

    outdir = _require(mapping, "outdir", str,
                      default=os.path.join("runs", f"{function}_{algorithm}_n{n}_seed{seed}"))

    return RunConfig(
        function=function, n=n, seed=seed, algorithm=algorithm, outdir=outdir,
        lambda_prime=lambda_prime, mu_prime=mu_prime, tau=tau, total=total,
        threshold=threshold, sigma0=sigma0, sigma_max=sigma_max, ne_range=ne_range,
        init_box=init_box, pool_size=pool_size, normalizer=normalizer,
        lambda_inner=lambda_inner, z_star=z_star, d_sigma=d_sigma, ne=ne,
        c1=c1, cc=cc, t_gap=t_gap,
        reproducible=reproducible, stagnation_replan=stagnation_replan,
        stagnation_epochs=stagnation_epochs, figures=figures)


def _load_yaml(path: str) -> dict:
    try:
        with open(path, "r", encoding="utf-8") as fh:
            data = yaml.safe_load(fh)
    except FileNotFoundError:
        raise ConfigError(f"config file not found: {path}") from None
    except yaml.YAMLError as exc:
        mark = getattr(exc, "problem_mark", None)
        where = f"{path}:{mark.line + 1}" if mark is not None else path
        raise ConfigError(f"{where}: not valid YAML ({exc})") from None
    if data is None:
        raise ConfigError(f"{path}: empty config")
    if not isinstance(data, dict):
        raise ConfigError(f"{path}: top level must be a mapping")
    return data


def load_run_config(path: str, *, profile: Optional[str] = None) -> RunConfig:
    """Load, default-fill, and validate one run config file.

    The METAES_OUTDIR environment variable, when set, overrides the
    configured output directory.
    """
    data = _load_yaml(path)
    env_outdir = os.environ.get(OUTDIR_ENV)
    if env_outdir:
        data["outdir"] = env_outdir
    return build_run_config(data, profile=profile)


_SUITE_ONLY = {"functions", "algorithms", "seeds"}


def load_suite_config(path: str, *, profile: Optional[str] = None) -> SuiteConfig:
    """Load a suite config: function/algorithm/seed lists plus shared run keys."""
    data = _load_yaml(path)
    functions = data.get("functions")
    if not isinstance(functions, list) or not functions:
        raise ConfigError("key 'functions': a non-empty list is required")
    for f in functions:
        if f not in FUNCTIONS:
            raise ConfigError(f"key 'functions': unknown function id {f!r}")
    algorithms = data.get("algorithms")
    if not isinstance(algorithms, list) or not algorithms:
        raise ConfigError("key 'algorithms': a non-empty list is required")
    for a in algorithms:
        if a not in ALGORITHMS:
            raise ConfigError(f"key 'algorithms': must be among {ALGORITHMS}, got {a!r}")
    seeds = data.get("seeds")
    if (not isinstance(seeds, list) or not seeds
            or not all(isinstance(s, int) and not isinstance(s, bool) for s in seeds)):
        raise ConfigError("key 'seeds': a non-empty list of integers is required")

    outdir = data.get("outdir", "bench")
    if not isinstance(outdir, str):
        raise ConfigError("key 'outdir': expected a string")
    outdir = os.environ.get(OUTDIR_ENV) or outdir

    base = {k: v for k, v in data.items() if k not in _SUITE_ONLY and k != "outdir"}
    # validate the shared keys once against the first cell
    cell = dict(base)
    cell.update(function=functions[0], algorithm=algorithms[0], seed=seeds[0],
                outdir=outdir)
    build_run_config(cell, profile=profile)
    return SuiteConfig(tuple(functions), tuple(algorithms), tuple(int(s) for s in seeds),
                       outdir, base)


def config_hash(cfg: RunConfig) -> str:
    """Stable fingerprint of a resolved run config.

    The output directory is excluded: it steers no computation, and the
    hash should agree for identical experiments landing in different
    places.
    """
    payload = asdict(cfg)
    payload.pop("outdir")
    blob = json.dumps(payload, sort_keys=True, default=str).encode()
    return hashlib.sha256(blob).hexdigest()
