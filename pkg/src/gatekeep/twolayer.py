"""Two-layer engine: families tested simultaneously within a layer,
sequentially between layers, with retesting.

Transfer coefficients exist only across layers.  ``forward[j][l]`` is the
proportion of layer-1 family j's level transferable to layer-2 family l;
``backward[l][j]`` is the reverse direction.  Each forward row and each
backward row sums to one.

Per stage k:

    layer 1:  level_1j(k) = alpha_1j + sum_l (|R_2l(k-1)|/n_2l) backward[l][j] alpha_2l
    layer 2:  level_2l(k) = alpha_2l + sum_j (|R_1j(k)|/n_1j) forward[j][l] level_1j(k)

Layer-1 transfers always weight the initial layer-2 levels; layer-2
transfers weight the current updated layer-1 levels.  All of a layer's
levels are computed from a frozen snapshot before any of that layer's
tests run, which makes the within-layer simultaneity structural: the
processing order of families inside a layer cannot matter.  The stop rule
matches the sequential engine: stop after a full stage (both layers) with
no new rejection anywhere, or at stage 1 with no rejection at all, or at
the stage cap.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

from gatekeep.core import (
    LEVEL_SUM_TOL,
    ROW_SUM_TOL,
    TERM_CAP,
    TERM_NO_NEW,
    TERM_STAGE1,
    AuditTrail,
    FamilySpec,
    PValueSet,
    StageRecord,
    bonferroni_reject,
)
from gatekeep.errors import (
    DimensionError,
    EntryRangeError,
    LabelError,
    LevelSumError,
    RowSumError,
)
from gatekeep.engine import EngineOptions


def _validate_coefficients(rows, n_rows: int, n_cols: int, name: str) -> tuple[tuple[float, ...], ...]:
    rows = tuple(tuple(float(x) for x in row) for row in rows)
    if len(rows) != n_rows:
        raise DimensionError(f"{name} coefficients need {n_rows} rows, got {len(rows)}")
    for r, row in enumerate(rows):
        if len(row) != n_cols:
            raise DimensionError(
                f"{name} coefficient row {r + 1} has {len(row)} entries, expected {n_cols}"
            )
        for c, gval in enumerate(row):
            if not 0.0 <= gval <= 1.0:
                raise EntryRangeError(
                    f"{name} coefficient [{r + 1},{c + 1}] = {gval} outside [0, 1]"
                )
        row_sum = float(sum(row))
        if abs(row_sum - 1.0) > ROW_SUM_TOL:
            raise RowSumError(
                f"{name} coefficient row {r + 1} sums to {row_sum!r}, expected 1"
            )
    return rows


@dataclass(frozen=True)
class TwoLayerProblem:
    """Two layers of families with cross-layer transfer coefficients.

    The layer count is fixed at exactly two.  ``families`` flattens both
    layers in order (layer 1 first), which is the order used by p-value
    rows, trail records, and null configurations.
    """

    layer1: tuple[FamilySpec, ...]
    layer2: tuple[FamilySpec, ...]
    forward: tuple[tuple[float, ...], ...]
    backward: tuple[tuple[float, ...], ...]
    global_level: float

    def __post_init__(self) -> None:
        object.__setattr__(self, "layer1", tuple(self.layer1))
        object.__setattr__(self, "layer2", tuple(self.layer2))
        m1, m2 = len(self.layer1), len(self.layer2)
        if m1 < 1 or m2 < 1:
            raise DimensionError(f"both layers need >= 1 family, got ({m1}, {m2})")
        if m1 + m2 < 2:
            raise DimensionError("a two-layer problem needs m >= 2 families")
        for layer, fams in ((1, self.layer1), (2, self.layer2)):
            for rank, fam in enumerate(fams, start=1):
                if fam.index != rank:
                    raise DimensionError(
                        f"layer-{layer} family {fam.label!r} has index {fam.index}, "
                        f"expected rank {rank}"
                    )
        object.__setattr__(
            self, "forward", _validate_coefficients(self.forward, m1, m2, "forward")
        )
        object.__setattr__(
            self, "backward", _validate_coefficients(self.backward, m2, m1, "backward")
        )
        if not 0.0 < self.global_level < 1.0:
            raise EntryRangeError(f"global level {self.global_level} outside (0, 1)")
        labels = [h for fam in self.families for h in fam.hypothesis_labels]
        if len(set(labels)) != len(labels):
            raise LabelError("hypothesis labels must be distinct across families")
        total = float(sum(fam.initial_level for fam in self.families))
        if abs(total - self.global_level) > LEVEL_SUM_TOL:
            raise LevelSumError(
                f"initial levels sum to {total!r}, expected {self.global_level!r}"
            )

    @property
    def m1(self) -> int:
        return len(self.layer1)

    @property
    def m2(self) -> int:
        return len(self.layer2)

    @property
    def families(self) -> tuple[FamilySpec, ...]:
        return self.layer1 + self.layer2

    @property
    def sizes(self) -> tuple[int, ...]:
        return tuple(fam.size for fam in self.families)

    @property
    def total_hypotheses(self) -> int:
        return sum(self.sizes)

    @property
    def layer_tags(self) -> tuple[int, ...]:
        return (1,) * self.m1 + (2,) * self.m2


def layer1_level(
    j: int,
    k: int,
    problem: TwoLayerProblem,
    previous_layer2_counts: Sequence[int],
) -> float:
    """Stage-k level of layer-1 family ``j`` (1-based).

    Transfers from layer 2 weight the previous-stage rejection counts by
    the initial layer-2 levels.  At stage 1 (all previous counts zero) the
    level is the initial one.
    """
    fam = problem.layer1[j - 1]
    if k == 1:
        return fam.initial_level
    level = fam.initial_level
    for l, fam2 in enumerate(problem.layer2, start=1):
        level += (
            (previous_layer2_counts[l - 1] / fam2.size)
            * problem.backward[l - 1][j - 1]
            * fam2.initial_level
        )
    return level


def layer2_level(
    l: int,
    k: int,
    problem: TwoLayerProblem,
    layer1_counts: Sequence[int],
    layer1_levels: Sequence[float],
) -> float:
    """Stage-k level of layer-2 family ``l`` (1-based).

    Transfers from layer 1 weight the current-stage rejection counts by the
    current updated layer-1 levels.
    """
    fam = problem.layer2[l - 1]
    level = fam.initial_level
    for j, fam1 in enumerate(problem.layer1, start=1):
        level += (
            (layer1_counts[j - 1] / fam1.size)
            * problem.forward[j - 1][l - 1]
            * layer1_levels[j - 1]
        )
    return level


def run_two_layer(
    problem: TwoLayerProblem,
    p: PValueSet | Sequence[Sequence[float]],
    options: EngineOptions | None = None,
) -> AuditTrail:
    """Run the two-layer procedure; rows of ``p`` follow the flattened
    family order (layer 1 families, then layer 2 families)."""
    options = options or EngineOptions()
    if not isinstance(p, PValueSet):
        p = PValueSet(tuple(tuple(float(v) for v in row) for row in p))
    if not p.matches(problem.sizes):
        raise DimensionError(
            f"p-value shape {tuple(len(r) for r in p.rows)} does not match "
            f"family sizes {problem.sizes}"
        )
    m1, m2 = problem.m1, problem.m2
    cap = options.resolved_cap(problem.total_hypotheses)

    cum1: list[set[int]] = [set() for _ in range(m1)]
    cum2: list[set[int]] = [set() for _ in range(m2)]
    prev2_counts = [0] * m2
    stages: list[StageRecord] = []
    stage = 0
    while True:
        stage += 1
        # Layer 1: all levels from the frozen previous-stage snapshot,
        # then all tests.
        l1_levels = [layer1_level(j, stage, problem, prev2_counts) for j in range(1, m1 + 1)]
        newly1: list[frozenset[int]] = []
        for j in range(1, m1 + 1):
            rejected = bonferroni_reject(p.row(j), l1_levels[j - 1])
            newly1.append(frozenset(rejected - cum1[j - 1]))
            cum1[j - 1] |= rejected
        l1_counts = [len(s) for s in cum1]
        # Layer 2: all levels from the frozen layer-1 results, then all tests.
        l2_levels = [
            layer2_level(l, stage, problem, l1_counts, l1_levels) for l in range(1, m2 + 1)
        ]
        newly2: list[frozenset[int]] = []
        for l in range(1, m2 + 1):
            rejected = bonferroni_reject(p.row(m1 + l), l2_levels[l - 1])
            newly2.append(frozenset(rejected - cum2[l - 1]))
            cum2[l - 1] |= rejected
        record = StageRecord(
            stage=stage,
            levels=tuple(l1_levels) + tuple(l2_levels),
            cumulative=tuple(frozenset(s) for s in cum1 + cum2),
            newly=tuple(newly1) + tuple(newly2),
        )
        if options.record_full_trail:
            stages.append(record)
        else:
            stages = [record]
        any_new = any(newly1) or any(newly2)
        if stage == 1 and not any_new:
            termination = TERM_STAGE1
            break
        if stage >= 2 and not any_new:
            termination = TERM_NO_NEW
            break
        if stage >= cap:
            termination = TERM_CAP
            break
        prev2_counts = [len(s) for s in cum2]
    return AuditTrail(
        problem=problem,
        stages=tuple(stages),
        stages_run=stage,
        final_rejected=tuple(frozenset(s) for s in cum1 + cum2),
        termination=termination,
        layer_tags=problem.layer_tags,
    )
