"""Pure-numpy batch kernels: many replications of one procedure at once.

Replications advance through the stage loop together behind an ``active``
mask.  The per-replication arithmetic is kept in exactly the same order as
the compiled kernel (ascending-family accumulation, one multiply-add per
transfer term, thresholds formed as ``level / n``), so both backends return
bit-identical rejection masks.

Only the rejection mask is produced; levels computed for replications that
have already terminated are discarded, never applied.
"""

from __future__ import annotations

import numpy as np


def reject_batch(
    P: np.ndarray,
    sizes: np.ndarray,
    alphas: np.ndarray,
    G: np.ndarray,
    stage_cap: int,
) -> np.ndarray:
    """Rejection masks for the sequential procedure.

    P
        (R, n) float64 p-values, columns in family-major order.
    sizes, alphas
        Per-family hypothesis counts and initial levels.
    G
        (m, m) transition matrix.
    stage_cap
        Hard stage bound (the caller passes n + 1 for the natural rule).

    Returns a (R, n) uint8 mask of rejected hypotheses.
    """
    P = np.ascontiguousarray(P, dtype=np.float64)
    R = P.shape[0]
    m = len(sizes)
    offsets = np.concatenate(([0], np.cumsum(sizes))).astype(np.int64)
    rejected = np.zeros(P.shape, dtype=bool)
    prev_counts = np.zeros((R, m), dtype=np.int64)
    active = np.ones(R, dtype=bool)
    stage = 0
    while True:
        stage += 1
        cur_counts = np.zeros((R, m), dtype=np.int64)
        cur_levels = np.zeros((R, m), dtype=np.float64)
        new_any = np.zeros(R, dtype=bool)
        for i in range(m):
            level = np.full(R, alphas[i])
            for j in range(i):
                level = level + (cur_counts[:, j] / float(sizes[j])) * G[j, i] * cur_levels[:, j]
            for l in range(i + 1, m):
                level = level + (prev_counts[:, l] / float(sizes[l])) * G[l, i] * alphas[l]
            cur_levels[:, i] = level
            block = P[:, offsets[i]:offsets[i + 1]]
            hit = (block <= (level / float(sizes[i]))[:, None]) & (level > 0.0)[:, None]
            newly = hit & ~rejected[:, offsets[i]:offsets[i + 1]] & active[:, None]
            new_any |= newly.any(axis=1)
            rejected[:, offsets[i]:offsets[i + 1]] |= newly
            cur_counts[:, i] = rejected[:, offsets[i]:offsets[i + 1]].sum(axis=1)
        active &= new_any
        if stage >= stage_cap or not active.any():
            break
        prev_counts = cur_counts
    return rejected.astype(np.uint8)


def reject_batch_two_layer(
    P: np.ndarray,
    sizes1: np.ndarray,
    alphas1: np.ndarray,
    sizes2: np.ndarray,
    alphas2: np.ndarray,
    forward: np.ndarray,
    backward: np.ndarray,
    stage_cap: int,
) -> np.ndarray:
    """Rejection masks for the two-layer procedure.

    Columns of ``P`` follow the flattened family order (layer 1 first).
    Returns a (R, n) uint8 mask.
    """
    P = np.ascontiguousarray(P, dtype=np.float64)
    R = P.shape[0]
    m1, m2 = len(sizes1), len(sizes2)
    sizes = np.concatenate((sizes1, sizes2))
    offsets = np.concatenate(([0], np.cumsum(sizes))).astype(np.int64)
    rejected = np.zeros(P.shape, dtype=bool)
    prev2_counts = np.zeros((R, m2), dtype=np.int64)
    active = np.ones(R, dtype=bool)
    stage = 0
    while True:
        stage += 1
        new_any = np.zeros(R, dtype=bool)
        l1_levels = np.zeros((R, m1), dtype=np.float64)
        for j in range(m1):
            level = np.full(R, alphas1[j])
            if stage >= 2:
                for l in range(m2):
                    level = level + (prev2_counts[:, l] / float(sizes2[l])) * backward[l, j] * alphas2[l]
            l1_levels[:, j] = level
        for j in range(m1):
            level = l1_levels[:, j]
            block = P[:, offsets[j]:offsets[j + 1]]
            hit = (block <= (level / float(sizes1[j]))[:, None]) & (level > 0.0)[:, None]
            newly = hit & ~rejected[:, offsets[j]:offsets[j + 1]] & active[:, None]
            new_any |= newly.any(axis=1)
            rejected[:, offsets[j]:offsets[j + 1]] |= newly
        l1_counts = np.empty((R, m1), dtype=np.int64)
        for j in range(m1):
            l1_counts[:, j] = rejected[:, offsets[j]:offsets[j + 1]].sum(axis=1)
        l2_levels = np.zeros((R, m2), dtype=np.float64)
        for l in range(m2):
            level = np.full(R, alphas2[l])
            for j in range(m1):
                level = level + (l1_counts[:, j] / float(sizes1[j])) * forward[j, l] * l1_levels[:, j]
            l2_levels[:, l] = level
        for l in range(m2):
            level = l2_levels[:, l]
            col = m1 + l
            block = P[:, offsets[col]:offsets[col + 1]]
            hit = (block <= (level / float(sizes2[l]))[:, None]) & (level > 0.0)[:, None]
            newly = hit & ~rejected[:, offsets[col]:offsets[col + 1]] & active[:, None]
            new_any |= newly.any(axis=1)
            rejected[:, offsets[col]:offsets[col + 1]] |= newly
        active &= new_any
        if stage >= stage_cap or not active.any():
            break
        for l in range(m2):
            prev2_counts[:, l] = rejected[:, offsets[m1 + l]:offsets[m1 + l + 1]].sum(axis=1)
    return rejected.astype(np.uint8)
