# cython: boundscheck=False, wraparound=False, cdivision=True, language_level=3
"""Compiled batch kernels: one replication at a time, scalar loops.

The arithmetic order per replication (ascending-family accumulation, one
multiply-add per transfer term, thresholds formed as level / n) matches the
numpy fallback exactly, so both backends return bit-identical masks.
"""

import numpy as np

cimport numpy as cnp

cnp.import_array()


def reject_batch(
    cnp.ndarray[cnp.float64_t, ndim=2] P,
    cnp.ndarray[cnp.int64_t, ndim=1] sizes,
    cnp.ndarray[cnp.float64_t, ndim=1] alphas,
    cnp.ndarray[cnp.float64_t, ndim=2] G,
    long stage_cap,
):
    """Rejection masks for the sequential procedure; see the fallback kernel
    for the argument contract."""
    cdef Py_ssize_t R = P.shape[0]
    cdef Py_ssize_t m = sizes.shape[0]
    cdef cnp.ndarray[cnp.int64_t, ndim=1] offsets = np.concatenate(
        ([0], np.cumsum(sizes))
    ).astype(np.int64)
    cdef cnp.ndarray[cnp.uint8_t, ndim=2] rejected = np.zeros(
        (R, P.shape[1]), dtype=np.uint8
    )
    cdef cnp.ndarray[cnp.int64_t, ndim=1] prev_counts = np.zeros(m, dtype=np.int64)
    cdef cnp.ndarray[cnp.int64_t, ndim=1] cur_counts = np.zeros(m, dtype=np.int64)
    cdef cnp.ndarray[cnp.float64_t, ndim=1] cur_levels = np.zeros(m, dtype=np.float64)
    cdef Py_ssize_t r, i, j, l, c
    cdef long stage, cnt
    cdef double level, thr
    cdef bint new_any, hit

    for r in range(R):
        for i in range(m):
            prev_counts[i] = 0
        stage = 0
        while True:
            stage += 1
            new_any = 0
            for i in range(m):
                level = alphas[i]
                for j in range(i):
                    level = level + (cur_counts[j] / (<double> sizes[j])) * G[j, i] * cur_levels[j]
                for l in range(i + 1, m):
                    level = level + (prev_counts[l] / (<double> sizes[l])) * G[l, i] * alphas[l]
                cur_levels[i] = level
                thr = level / (<double> sizes[i])
                cnt = 0
                for c in range(offsets[i], offsets[i + 1]):
                    if rejected[r, c]:
                        cnt += 1
                    elif level > 0.0 and P[r, c] <= thr:
                        rejected[r, c] = 1
                        cnt += 1
                        new_any = 1
                cur_counts[i] = cnt
            if stage >= stage_cap or not new_any:
                break
            for i in range(m):
                prev_counts[i] = cur_counts[i]
    return rejected


def reject_batch_two_layer(
    cnp.ndarray[cnp.float64_t, ndim=2] P,
    cnp.ndarray[cnp.int64_t, ndim=1] sizes1,
    cnp.ndarray[cnp.float64_t, ndim=1] alphas1,
    cnp.ndarray[cnp.int64_t, ndim=1] sizes2,
    cnp.ndarray[cnp.float64_t, ndim=1] alphas2,
    cnp.ndarray[cnp.float64_t, ndim=2] forward,
    cnp.ndarray[cnp.float64_t, ndim=2] backward,
    long stage_cap,
):
    """Rejection masks for the two-layer procedure; columns of ``P`` follow
    the flattened family order (layer 1 first)."""
    cdef Py_ssize_t R = P.shape[0]
    cdef Py_ssize_t m1 = sizes1.shape[0]
    cdef Py_ssize_t m2 = sizes2.shape[0]
    cdef cnp.ndarray[cnp.int64_t, ndim=1] offsets = np.concatenate(
        ([0], np.cumsum(np.concatenate((sizes1, sizes2))))
    ).astype(np.int64)
    cdef cnp.ndarray[cnp.uint8_t, ndim=2] rejected = np.zeros(
        (R, P.shape[1]), dtype=np.uint8
    )
    cdef cnp.ndarray[cnp.int64_t, ndim=1] prev2_counts = np.zeros(m2, dtype=np.int64)
    cdef cnp.ndarray[cnp.int64_t, ndim=1] l1_counts = np.zeros(m1, dtype=np.int64)
    cdef cnp.ndarray[cnp.float64_t, ndim=1] l1_levels = np.zeros(m1, dtype=np.float64)
    cdef Py_ssize_t r, j, l, c, col
    cdef long stage, cnt
    cdef double level, thr
    cdef bint new_any

    for r in range(R):
        for l in range(m2):
            prev2_counts[l] = 0
        stage = 0
        while True:
            stage += 1
            new_any = 0
            for j in range(m1):
                level = alphas1[j]
                if stage >= 2:
                    for l in range(m2):
                        level = level + (prev2_counts[l] / (<double> sizes2[l])) * backward[l, j] * alphas2[l]
                l1_levels[j] = level
            for j in range(m1):
                level = l1_levels[j]
                thr = level / (<double> sizes1[j])
                cnt = 0
                for c in range(offsets[j], offsets[j + 1]):
                    if rejected[r, c]:
                        cnt += 1
                    elif level > 0.0 and P[r, c] <= thr:
                        rejected[r, c] = 1
                        cnt += 1
                        new_any = 1
                l1_counts[j] = cnt
            for l in range(m2):
                level = alphas2[l]
                for j in range(m1):
                    level = level + (l1_counts[j] / (<double> sizes1[j])) * forward[j, l] * l1_levels[j]
                col = m1 + l
                thr = level / (<double> sizes2[l])
                for c in range(offsets[col], offsets[col + 1]):
                    if rejected[r, c]:
                        pass
                    elif level > 0.0 and P[r, c] <= thr:
                        rejected[r, c] = 1
                        new_any = 1
            if stage >= stage_cap or not new_any:
                break
            for l in range(m2):
                col = m1 + l
                cnt = 0
                for c in range(offsets[col], offsets[col + 1]):
                    if rejected[r, c]:
                        cnt += 1
                prev2_counts[l] = cnt
    return rejected
