"""Shared oracles built independently of the library internals.

Both helpers deliberately take the dense/naive route (full matrices,
explicit zero padding) so they cannot share a bug with the O(ne*n)
implementations they check.
"""

import numpy as np


def dense_reconstruction(paths, ne, c1, z):
    """Dense-matrix version of the stored-path transform.

    Builds each rank-one factor as an explicit n x n matrix and composes
    them so the newest path acts on z first.  `paths` is oldest-first, as
    the pool stores them.
    """
    z = np.asarray(z, dtype=float)
    n = z.size
    selected = list(paths)[max(0, len(paths) - ne):]
    mat = np.eye(n)
    for p in reversed(selected):  # newest first
        p = np.asarray(p, dtype=float).reshape(n, 1)
        factor = (1.0 - c1 / 2.0) * np.eye(n) + (c1 / 2.0) * (p @ p.T)
        mat = factor @ mat
    return mat @ z


def zero_pad_merge(pools_paths, ne_list, w, scale):
    """Pad-then-sum version of the pool merge.

    Each pool's newest ne_i paths are padded with leading zero rows up to
    K = max(ne_list) and the padded blocks are summed with weight w_i/scale.
    Returns the K merged rows, oldest slot first.
    """
    n = None
    for paths in pools_paths:
        if paths:
            n = len(paths[-1])
            break
    k = max(ne_list)
    acc = np.zeros((k, n))
    for paths, ne, wi in zip(pools_paths, ne_list, w):
        take = [np.asarray(p, dtype=float) for p in paths[max(0, len(paths) - ne):]]
        if not take:
            continue
        block = np.zeros((k, n))
        block[k - len(take):] = np.stack(take)
        acc += (wi / scale) * block
    return acc
