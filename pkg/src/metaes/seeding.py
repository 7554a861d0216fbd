"""Deterministic seed derivation shared by the planner and the worker pool."""

from __future__ import annotations

__all__ = ["derive_seed"]

_MASK = (1 << 64) - 1
_GAMMA = 0x9E3779B97F4A7C15
_MULT1 = 0xBF58476D1CE4E5B9
_MULT2 = 0x94D049BB133111EB


def _mix(z: int) -> int:
    z = ((z ^ (z >> 30)) * _MULT1) & _MASK
    z = ((z ^ (z >> 27)) * _MULT2) & _MASK
    return z ^ (z >> 31)


def derive_seed(master: int, epoch: int, index: int) -> int:
    """Stable 64-bit seed for the (master, epoch, index) triple.

    Split-mix construction: the epoch and index words are absorbed one at
    a time into the running hash, so the mapping is bit-exact on every
    platform and any two distinct triples get independent-looking seeds.
    """
    h = master & _MASK
    for word in (epoch, index):
        h = (h + _GAMMA) & _MASK
        h = _mix(h ^ (word & _MASK))
    return h
