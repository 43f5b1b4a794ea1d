"""Domain types and the single-family Bonferroni rejection primitive.

A testing problem consists of m >= 2 ordered families of null hypotheses,
an initial level for each family summing to the global level alpha, and a
row-stochastic zero-diagonal transition matrix G whose entry g_ij is the
proportion of family i's recyclable level that may be transferred to
family j.  All types validate on construction and are immutable afterwards,
so they are safe to share across threads.

Family and hypothesis indices are 1-based everywhere in the public API.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from gatekeep.errors import (
    DimensionError,
    EmptyFamilyError,
    EntryRangeError,
    LabelError,
    LevelSumError,
    NonZeroDiagonalError,
    PValueRangeError,
    RowSumError,
)

# Tolerance for row-sum and level-sum checks.  Inputs arrive as decimal text,
# so exact equality is unattainable.
ROW_SUM_TOL = 1e-9
LEVEL_SUM_TOL = 1e-9

# Termination reasons recorded on an audit trail.
TERM_STAGE1 = "no-rejections-at-stage-1"
TERM_NO_NEW = "no-new-rejections"
TERM_CAP = "stage-cap-reached"


@dataclass(frozen=True)
class FamilySpec:
    """One ordered family of null hypotheses.

    index
        1-based rank of the family in the hierarchy.
    label
        Free-text family name (e.g. ``"F1"``).
    hypothesis_labels
        Names of the n_i hypotheses, distinct within the family.
    initial_level
        The portion alpha_i of the global level initially assigned to the
        family.  May be exactly zero (needed for the reduction
        configurations); the upper bound alpha_i <= alpha is checked when
        the family joins a problem.
    """

    index: int
    label: str
    hypothesis_labels: tuple[str, ...]
    initial_level: float

    def __post_init__(self) -> None:
        object.__setattr__(self, "hypothesis_labels", tuple(self.hypothesis_labels))
        if len(self.hypothesis_labels) < 1:
            raise EmptyFamilyError(f"family {self.label!r} has no hypotheses")
        if len(set(self.hypothesis_labels)) != len(self.hypothesis_labels):
            raise LabelError(f"family {self.label!r} has duplicate hypothesis labels")
        if self.index < 1:
            raise DimensionError(f"family index must be 1-based, got {self.index}")
        if not 0.0 <= self.initial_level <= 1.0:
            raise EntryRangeError(
                f"family {self.label!r}: initial level {self.initial_level} outside [0, 1]"
            )

    @property
    def size(self) -> int:
        return len(self.hypothesis_labels)


@dataclass(frozen=True)
class TransitionMatrix:
    """Row-stochastic, zero-diagonal m x m matrix of transfer proportions."""

    entries: tuple[tuple[float, ...], ...]

    def __post_init__(self) -> None:
        rows = tuple(tuple(float(x) for x in row) for row in self.entries)
        object.__setattr__(self, "entries", rows)
        m = len(rows)
        if m < 2:
            raise DimensionError(f"transition matrix needs m >= 2 rows, got {m}")
        for i, row in enumerate(rows):
            if len(row) != m:
                raise DimensionError(
                    f"transition matrix row {i + 1} has {len(row)} entries, expected {m}"
                )
            for j, g in enumerate(row):
                if not 0.0 <= g <= 1.0:
                    raise EntryRangeError(
                        f"transition entry g[{i + 1},{j + 1}] = {g} outside [0, 1]"
                    )
            if row[i] != 0.0:
                raise NonZeroDiagonalError(
                    f"transition diagonal g[{i + 1},{i + 1}] = {row[i]} must be 0"
                )
            row_sum = float(sum(row))
            if abs(row_sum - 1.0) > ROW_SUM_TOL:
                raise RowSumError(
                    f"transition matrix row {i + 1} sums to {row_sum!r}, expected 1"
                )

    @property
    def m(self) -> int:
        return len(self.entries)

    def as_array(self) -> np.ndarray:
        return np.asarray(self.entries, dtype=np.float64)


def validate_transition_matrix(entries) -> TransitionMatrix:
    """Validate an m x m array-like of transfer proportions.

    Raises :class:`NonZeroDiagonalError`, :class:`RowSumError`, or
    :class:`EntryRangeError` when the three matrix conditions fail.
    """
    arr = np.asarray(entries, dtype=np.float64)
    if arr.ndim != 2 or arr.shape[0] != arr.shape[1]:
        raise DimensionError(f"transition matrix must be square, got shape {arr.shape}")
    return TransitionMatrix(tuple(tuple(row) for row in arr.tolist()))


@dataclass(frozen=True)
class GatekeepingProblem:
    """Ordered families + transition matrix + global level alpha."""

    families: tuple[FamilySpec, ...]
    transition: TransitionMatrix
    global_level: float

    def __post_init__(self) -> None:
        object.__setattr__(self, "families", tuple(self.families))
        m = len(self.families)
        if m < 2:
            raise DimensionError(f"a problem needs m >= 2 families, got {m}")
        if self.transition.m != m:
            raise DimensionError(
                f"transition matrix is {self.transition.m} x {self.transition.m} "
                f"but there are {m} families"
            )
        if not 0.0 < self.global_level < 1.0:
            raise EntryRangeError(
                f"global level {self.global_level} outside (0, 1)"
            )
        for rank, fam in enumerate(self.families, start=1):
            if fam.index != rank:
                raise DimensionError(
                    f"family {fam.label!r} has index {fam.index}, expected rank {rank}"
                )
            if fam.initial_level > self.global_level + LEVEL_SUM_TOL:
                raise EntryRangeError(
                    f"family {fam.label!r}: initial level {fam.initial_level} "
                    f"exceeds global level {self.global_level}"
                )
        labels = [h for fam in self.families for h in fam.hypothesis_labels]
        if len(set(labels)) != len(labels):
            raise LabelError("hypothesis labels must be distinct across families")
        total = float(sum(fam.initial_level for fam in self.families))
        if abs(total - self.global_level) > LEVEL_SUM_TOL:
            raise LevelSumError(
                f"initial levels sum to {total!r}, expected {self.global_level!r}"
            )

    @property
    def m(self) -> int:
        return len(self.families)

    @property
    def sizes(self) -> tuple[int, ...]:
        return tuple(fam.size for fam in self.families)

    @property
    def initial_levels(self) -> tuple[float, ...]:
        return tuple(fam.initial_level for fam in self.families)

    @property
    def total_hypotheses(self) -> int:
        return sum(self.sizes)

    def hypothesis_label(self, i: int, j: int) -> str:
        """Label of hypothesis j (1-based) of family i (1-based)."""
        return self.families[i - 1].hypothesis_labels[j - 1]


def validate_problem(
    families: Sequence[FamilySpec],
    transition: TransitionMatrix,
    global_level: float,
) -> GatekeepingProblem:
    """Validate a full problem; initial levels must sum to the global level."""
    return GatekeepingProblem(tuple(families), transition, float(global_level))


@dataclass(frozen=True)
class PValueSet:
    """Raw p-values, one row per family in rank order."""

    rows: tuple[tuple[float, ...], ...]

    def __post_init__(self) -> None:
        rows = tuple(tuple(float(p) for p in row) for row in self.rows)
        object.__setattr__(self, "rows", rows)
        for i, row in enumerate(rows):
            for j, p in enumerate(row):
                if not 0.0 <= p <= 1.0:
                    raise PValueRangeError(
                        f"p[{i + 1},{j + 1}] = {p} outside [0, 1]"
                    )

    def row(self, i: int) -> tuple[float, ...]:
        """p-values of family i (1-based)."""
        return self.rows[i - 1]

    def matches(self, sizes: Sequence[int]) -> bool:
        return len(self.rows) == len(sizes) and all(
            len(row) == n for row, n in zip(self.rows, sizes)
        )


@dataclass(frozen=True)
class StageRecord:
    """Levels and rejection sets for one stage of a run.

    ``cumulative`` and ``newly`` hold 1-based hypothesis indices per family;
    rejection sets are cumulative across stages.
    """

    stage: int
    levels: tuple[float, ...]
    cumulative: tuple[frozenset[int], ...]
    newly: tuple[frozenset[int], ...]

    @property
    def new_rejection_count(self) -> int:
        return sum(len(s) for s in self.newly)


@dataclass(frozen=True)
class AuditTrail:
    """Complete record of an engine run.

    ``stages`` carries one record per executed stage (or only the final one
    when the engine was asked not to record the full trail); ``stages_run``
    is always the number of stages actually executed.  ``layer_tags`` is
    None for the sequential engine and the per-family layer number (1 or 2)
    for the two-layer engine.
    """

    problem: object
    stages: tuple[StageRecord, ...]
    stages_run: int
    final_rejected: tuple[frozenset[int], ...]
    termination: str
    layer_tags: tuple[int, ...] | None = None

    def rejected_labels(self) -> tuple[str, ...]:
        """Rejected hypothesis labels in family order, then index order."""
        fams = self.problem.families
        return tuple(
            fams[i].hypothesis_labels[j - 1]
            for i, rejected in enumerate(self.final_rejected)
            for j in sorted(rejected)
        )

    @property
    def total_rejections(self) -> int:
        return sum(len(s) for s in self.final_rejected)


def bonferroni_reject(p_values: Sequence[float], level: float) -> frozenset[int]:
    """Indices (1-based) rejected when testing one family at ``level``.

    Rejects {j : p_j <= level / n}.  Equality rejects; a level of zero (or
    below) rejects nothing, even for p-values equal to zero.
    """
    n = len(p_values)
    if n == 0:
        return frozenset()
    if level <= 0.0:
        return frozenset()
    threshold = level / n
    return frozenset(j + 1 for j, p in enumerate(p_values) if p <= threshold)
