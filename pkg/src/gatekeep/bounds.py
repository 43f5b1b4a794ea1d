"""Analytical worst-case level envelopes and the FWER bound they imply.

For a fixed null configuration (which hypotheses are truly null), the
worst-case level of a family is the largest local level it can reach at
any stage of a run in which no true null has yet been rejected: rejection
counts are then capped at n_i - |T_i|, and expanding the level-update rule
front to back gives a stage-independent envelope

    star_1 = alpha_1 + sum_{l>1} (1 - |T_l|/n_l) g_l1 alpha_l
    star_i = alpha_i + sum_{j<i} (1 - |T_j|/n_j) g_ji star_j
                     + sum_{l>i} (1 - |T_l|/n_l) g_li alpha_l.

The union bound over true-null rejections at those envelope levels yields

    fwer_bound = sum_i (|T_i|/n_i) star_i  <=  alpha

for every null configuration and every valid transition matrix; the
inequality passes through a family of intermediate quantities (one per
split position) that is non-increasing in the split, which this module
also exposes for direct numerical checking.  The two-layer variants follow
the same pattern with the cross-layer coefficient rows.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from gatekeep.core import GatekeepingProblem
from gatekeep.errors import DimensionError
from gatekeep.twolayer import TwoLayerProblem


@dataclass(frozen=True)
class NullConfiguration:
    """Per-family sets of true-null hypothesis indices (1-based).

    Families follow the problem's rank order; for two-layer problems the
    flattened order (layer 1 first).
    """

    sets: tuple[frozenset[int], ...]

    def __post_init__(self) -> None:
        object.__setattr__(self, "sets", tuple(frozenset(s) for s in self.sets))

    @classmethod
    def all_null(cls, sizes: Sequence[int]) -> "NullConfiguration":
        return cls(tuple(frozenset(range(1, n + 1)) for n in sizes))

    @classmethod
    def no_null(cls, m: int) -> "NullConfiguration":
        return cls((frozenset(),) * m)

    def counts(self) -> tuple[int, ...]:
        return tuple(len(s) for s in self.sets)

    def validate_for(self, sizes: Sequence[int]) -> None:
        if len(self.sets) != len(sizes):
            raise DimensionError(
                f"null configuration covers {len(self.sets)} families, "
                f"expected {len(sizes)}"
            )
        for i, (s, n) in enumerate(zip(self.sets, sizes), start=1):
            if s and (min(s) < 1 or max(s) > n):
                raise DimensionError(
                    f"null configuration for family {i} outside 1..{n}: {sorted(s)}"
                )

    def flags(self, sizes: Sequence[int]) -> np.ndarray:
        """Flattened boolean vector: True where the hypothesis is a true null."""
        self.validate_for(sizes)
        out = np.zeros(sum(sizes), dtype=bool)
        off = 0
        for s, n in zip(self.sets, sizes):
            for j in s:
                out[off + j - 1] = True
            off += n
        return out


def worst_case_levels(
    problem: GatekeepingProblem, nulls: NullConfiguration
) -> np.ndarray:
    """Envelope levels star_i, computed front to back; stage-independent."""
    nulls.validate_for(problem.sizes)
    m = problem.m
    sizes = problem.sizes
    alphas = problem.initial_levels
    g = problem.transition.entries
    frac = [len(nulls.sets[i]) / sizes[i] for i in range(m)]
    star = np.empty(m, dtype=np.float64)
    for i in range(m):
        level = alphas[i]
        for j in range(i):
            level += (1.0 - frac[j]) * g[j][i] * star[j]
        for l in range(i + 1, m):
            level += (1.0 - frac[l]) * g[l][i] * alphas[l]
        star[i] = level
    return star


def fwer_bound(problem: GatekeepingProblem, nulls: NullConfiguration) -> float:
    """sum_i (|T_i|/n_i) star_i, the analytical global FWER upper bound."""
    star = worst_case_levels(problem, nulls)
    frac = np.array(
        [len(nulls.sets[i]) / problem.sizes[i] for i in range(problem.m)]
    )
    return float(np.dot(frac, star))


def prefix_envelope_bound(
    j: int,
    problem: GatekeepingProblem,
    nulls: NullConfiguration,
    star: np.ndarray | None = None,
) -> float:
    """Intermediate FWER bound with envelope levels applied to families 1..j.

    Families up to the split position ``j`` enter with their worst-case
    envelope levels, the rest with initial levels; the transfer mass still
    flowing past the split is charged in full.  Non-increasing in ``j`` on
    {2, ..., m-1}, which is the step that squeezes the rejection-weighted
    envelope sum below alpha.
    """
    m = problem.m
    if not 2 <= j <= m - 1:
        raise IndexError(f"split position {j} outside 2..{m - 1}")
    if star is None:
        star = worst_case_levels(problem, nulls)
    sizes = problem.sizes
    alphas = problem.initial_levels
    g = problem.transition.entries
    frac = [len(nulls.sets[i]) / sizes[i] for i in range(m)]
    total = 0.0
    for i in range(j):  # families 1..j at envelope levels
        outflow = sum(g[i][l] for l in range(j, m))
        total += (frac[i] + (1.0 - frac[i]) * outflow) * star[i]
    for l in range(j, m):  # families j+1..m at initial levels
        within = sum(g[l][i] for i in range(j, m))
        total += (frac[l] + (1.0 - frac[l]) * within) * alphas[l]
    return total


def worst_case_levels_two_layer(
    problem: TwoLayerProblem, nulls: NullConfiguration
) -> tuple[np.ndarray, np.ndarray]:
    """Envelope levels (star_1j, star_2l) for the two-layer procedure.

    Layer-1 envelopes charge the initial layer-2 levels; layer-2 envelopes
    charge the layer-1 envelopes, mirroring the update rule's asymmetry.
    """
    nulls.validate_for(problem.sizes)
    m1, m2 = problem.m1, problem.m2
    frac1 = [len(nulls.sets[j]) / problem.layer1[j].size for j in range(m1)]
    frac2 = [len(nulls.sets[m1 + l]) / problem.layer2[l].size for l in range(m2)]
    star1 = np.empty(m1, dtype=np.float64)
    for j in range(m1):
        level = problem.layer1[j].initial_level
        for l in range(m2):
            level += (
                (1.0 - frac2[l])
                * problem.backward[l][j]
                * problem.layer2[l].initial_level
            )
        star1[j] = level
    star2 = np.empty(m2, dtype=np.float64)
    for l in range(m2):
        level = problem.layer2[l].initial_level
        for j in range(m1):
            level += (1.0 - frac1[j]) * problem.forward[j][l] * star1[j]
        star2[l] = level
    return star1, star2


def fwer_bound_two_layer(problem: TwoLayerProblem, nulls: NullConfiguration) -> float:
    """Rejection-weighted envelope sum for the two-layer procedure; <= alpha."""
    star1, star2 = worst_case_levels_two_layer(problem, nulls)
    m1 = problem.m1
    total = 0.0
    for j in range(m1):
        total += (len(nulls.sets[j]) / problem.layer1[j].size) * star1[j]
    for l in range(problem.m2):
        total += (len(nulls.sets[m1 + l]) / problem.layer2[l].size) * star2[l]
    return float(total)
