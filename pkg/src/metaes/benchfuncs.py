"""Scalable benchmark objectives behind a seeded rotation and shift."""

from __future__ import annotations

import math
import threading
from dataclasses import dataclass
from typing import Callable

import numpy as np

__all__ = [
    "BaseFunction",
    "FUNCTIONS",
    "UNIMODAL",
    "MULTIMODAL",
    "ObjectiveSpec",
    "eval_base",
    "make_objective",
]

_2PI = 2.0 * math.pi


def _sphere(y):
    return float(y @ y)


def _cigar(y):
    return float(y[0] * y[0] + 1e6 * (y[1:] @ y[1:]))


def _discus(y):
    return float(1e6 * y[0] * y[0] + y[1:] @ y[1:])


def _ellipsoid(y):
    n = y.size
    scale = 10.0 ** (6.0 * np.arange(n) / (n - 1))
    return float(scale @ (y * y))


def _differentpowers(y):
    n = y.size
    expo = (2.0 + 4.0 * np.arange(n)) / (n - 1)
    return float(np.sum(np.abs(y) ** expo))


def _schwefel221(y):
    return float(np.max(np.abs(y)))


def _step(y):
    return float(np.sum(np.floor(y + 0.5) ** 2))


def _schwefel12(y):
    partial = np.cumsum(y)
    return float(partial @ partial)


def _ackley(y):
    n = y.size
    return float(
        -20.0 * math.exp(-0.2 * math.sqrt((y @ y) / n))
        - math.exp(float(np.mean(np.cos(_2PI * y))))
        + 20.0
        + math.e
    )


def _rastrigin(y):
    return float(10.0 * y.size + np.sum(y * y - 10.0 * np.cos(_2PI * y)))


def _michalewicz(y):
    idx = np.arange(1, y.size + 1)
    return float(-np.sum(np.sin(y) * np.sin(idx * y * y / math.pi) ** 20) + 600.0)


def _salomon(y):
    r = math.sqrt(y @ y)
    return float(1.0 - math.cos(_2PI * r) + 0.1 * r)


def _scaledrastrigin(y):
    n = y.size
    z = 10.0 ** (np.arange(n) / (n - 1)) * y
    return float(10.0 * n + np.sum(z * z - 10.0 * np.cos(_2PI * z)))


@dataclass(frozen=True)
class BaseFunction:
    """A raw benchmark function together with its modality class."""

    name: str
    fn: Callable[[np.ndarray], float]
    modality: str  # "unimodal" | "multimodal"


FUNCTIONS: dict[str, BaseFunction] = {
    f.name: f
    for f in (
        BaseFunction("sphere", _sphere, "unimodal"),
        BaseFunction("cigar", _cigar, "unimodal"),
        BaseFunction("discus", _discus, "unimodal"),
        BaseFunction("ellipsoid", _ellipsoid, "unimodal"),
        BaseFunction("differentpowers", _differentpowers, "unimodal"),
        BaseFunction("schwefel221", _schwefel221, "unimodal"),
        BaseFunction("step", _step, "unimodal"),
        BaseFunction("schwefel12", _schwefel12, "unimodal"),
        BaseFunction("ackley", _ackley, "multimodal"),
        BaseFunction("rastrigin", _rastrigin, "multimodal"),
        BaseFunction("michalewicz", _michalewicz, "multimodal"),
        BaseFunction("salomon", _salomon, "multimodal"),
        BaseFunction("scaledrastrigin", _scaledrastrigin, "multimodal"),
    )
}

UNIMODAL = tuple(f.name for f in FUNCTIONS.values() if f.modality == "unimodal")
MULTIMODAL = tuple(f.name for f in FUNCTIONS.values() if f.modality == "multimodal")


def _resolve(fid: str | BaseFunction) -> BaseFunction:
    if isinstance(fid, BaseFunction):
        return fid
    try:
        return FUNCTIONS[fid]
    except KeyError:
        raise ValueError(f"unknown function id {fid!r}") from None


def eval_base(fid: str | BaseFunction, y) -> float:
    """Evaluate a raw benchmark function at y (no rotation, no shift)."""
    base = _resolve(fid)
    y = np.asarray(y, dtype=float)
    if y.ndim != 1 or y.size < 2:
        raise ValueError("y must be a 1-d vector with at least two components")
    if not np.all(np.isfinite(y)):
        raise ValueError(f"{base.name}: input must be finite")
    return base.fn(y)


class ObjectiveSpec:
    """A benchmark instance f(x) = f_base(R (x - shift)).

    Rotation and shift are fixed at construction; only the evaluation
    counter mutates afterwards, and it is updated under a lock so that
    concurrent workers can share one instance.
    """

    def __init__(self, base: str | BaseFunction, rotation, shift):
        self.base = _resolve(base)
        rotation = np.array(rotation, dtype=float)
        shift = np.array(shift, dtype=float)
        if rotation.ndim != 2 or rotation.shape[0] != rotation.shape[1]:
            raise ValueError("rotation must be a square matrix")
        n = rotation.shape[0]
        if n < 2:
            raise ValueError("dimension must be at least 2")
        if shift.shape != (n,):
            raise ValueError("shift must match the rotation dimension")
        err = np.max(np.abs(rotation @ rotation.T - np.eye(n)))
        if err > 1e-10:
            raise ValueError(f"rotation is not orthogonal (max deviation {err:.3e})")
        self.n = n
        self.rotation = rotation
        self.shift = shift
        self._lock = threading.Lock()
        self._evals = 0

    @property
    def eval_count(self) -> int:
        with self._lock:
            return self._evals

    def evaluate(self, x) -> float:
        """Cost of one point; every call bumps the shared counter by one."""
        x = np.asarray(x, dtype=float)
        if x.shape != (self.n,):
            raise ValueError(f"point has shape {x.shape}, expected ({self.n},)")
        # overflow to +inf is a legal cost; selection ranks it last
        with np.errstate(over="ignore", invalid="ignore"):
            cost = eval_base(self.base, self.rotation @ (x - self.shift))
        with self._lock:
            self._evals += 1
        return cost

    def evaluate_many(self, xs) -> np.ndarray:
        """Costs of a batch of points, counted one evaluation per row."""
        xs = np.asarray(xs, dtype=float)
        if xs.ndim != 2 or xs.shape[1] != self.n:
            raise ValueError(f"batch has shape {xs.shape}, expected (k, {self.n})")
        with np.errstate(over="ignore", invalid="ignore"):
            rotated = (xs - self.shift) @ self.rotation.T
            costs = np.array([eval_base(self.base, row) for row in rotated])
        with self._lock:
            self._evals += xs.shape[0]
        return costs


def make_objective(fid: str | BaseFunction, n: int, seed: int) -> ObjectiveSpec:
    """Build the rotated, shifted instance of a benchmark function.

    The rotation is the orthogonal factor of a seeded Gaussian matrix,
    with the triangular factor's diagonal forced positive so the result
    is unique for a given seed.  The shift is uniform on [-2, 2]^n.
    """
    base = _resolve(fid)
    if n < 2:
        raise ValueError("dimension must be at least 2")
    rng = np.random.default_rng(seed)
    gauss = rng.standard_normal((n, n))
    q, r = np.linalg.qr(gauss)
    signs = np.sign(np.diag(r))
    signs[signs == 0] = 1.0
    q = q * signs
    shift = rng.uniform(-2.0, 2.0, size=n)
    return ObjectiveSpec(base, q, shift)
