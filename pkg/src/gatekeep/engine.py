"""Sequential retesting engine for ordered families.

Each stage tests the families in rank order with the Bonferroni rule at a
local level rebuilt from the initial levels plus transfers:

    stage 1:   level_i = alpha_i + sum_{j<i} (|R_j|/n_j) g_ji level_j
    stage k:   level_i = alpha_i + sum_{j<i} (|R_j(k)|/n_j) g_ji level_j(k)
                       + sum_{l>i} (|R_l(k-1)|/n_l) g_li alpha_l

Transfers from higher-ranked families use their current-stage updated levels
and rejection counts; transfers from lower-ranked families use their
previous-stage counts weighted by initial levels only.  Rejections are
cumulative.  The run stops after the first full stage with no new rejection
in any family (at stage 1: no rejection at all), or at the stage cap.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

from gatekeep.core import (
    TERM_CAP,
    TERM_NO_NEW,
    TERM_STAGE1,
    AuditTrail,
    FamilySpec,
    GatekeepingProblem,
    PValueSet,
    StageRecord,
    TransitionMatrix,
    bonferroni_reject,
    validate_problem,
)
from gatekeep.errors import DimensionError


@dataclass(frozen=True)
class EngineOptions:
    """Execution options shared by both engines.

    stage_cap
        Hard upper bound on executed stages; ``None`` means n + 1, which the
        procedure provably never exceeds (each continuing stage adds at
        least one new rejection).  The cap defends against floating-point
        pathologies; hitting it is flagged distinctly in the trail.
    record_full_trail
        When False, the trail keeps only the final stage record;
        ``stages_run`` still reports the true stage count.
    """

    stage_cap: int | None = None
    record_full_trail: bool = True

    def __post_init__(self) -> None:
        if self.stage_cap is not None and self.stage_cap < 1:
            raise ValueError(f"stage_cap must be >= 1, got {self.stage_cap}")

    def resolved_cap(self, total_hypotheses: int) -> int:
        return self.stage_cap if self.stage_cap is not None else total_hypotheses + 1


def stagek_level(
    i: int,
    problem: GatekeepingProblem,
    current_counts: Sequence[int],
    current_levels: Sequence[float],
    previous_counts: Sequence[int],
) -> float:
    """Local level of family ``i`` (1-based) at a retesting stage.

    ``current_counts``/``current_levels`` cover families 1..i-1 already
    retested at this stage (positions 0..i-2); ``previous_counts`` covers
    all families as of the previous stage.  Stage 1 is the same formula
    with all previous counts zero.
    """
    fams = problem.families
    g = problem.transition.entries
    level = fams[i - 1].initial_level
    for j in range(1, i):
        level += (current_counts[j - 1] / fams[j - 1].size) * g[j - 1][i - 1] * current_levels[j - 1]
    for l in range(i + 1, problem.m + 1):
        level += (previous_counts[l - 1] / fams[l - 1].size) * g[l - 1][i - 1] * fams[l - 1].initial_level
    return level


def stage1_level(
    i: int,
    problem: GatekeepingProblem,
    current_counts: Sequence[int],
    current_levels: Sequence[float],
) -> float:
    """Local level of family ``i`` at stage 1.

    Only transfers from higher-ranked families already tested this stage
    apply; lower-ranked families contribute nothing at stage 1.
    """
    return stagek_level(i, problem, current_counts, current_levels, (0,) * problem.m)


def run_procedure(
    problem: GatekeepingProblem,
    p: PValueSet | Sequence[Sequence[float]],
    options: EngineOptions | None = None,
) -> AuditTrail:
    """Run the full retesting procedure and return its audit trail.

    ``p`` is a PValueSet or a plain sequence of per-family rows.  Pure
    function of its inputs; reentrant.  Within a run the execution is
    strictly sequential by definition of the procedure.
    """
    options = options or EngineOptions()
    if not isinstance(p, PValueSet):
        p = PValueSet(tuple(tuple(float(v) for v in row) for row in p))
    if not p.matches(problem.sizes):
        raise DimensionError(
            f"p-value shape {tuple(len(r) for r in p.rows)} does not match "
            f"family sizes {problem.sizes}"
        )
    m = problem.m
    cap = options.resolved_cap(problem.total_hypotheses)

    cumulative: list[set[int]] = [set() for _ in range(m)]
    previous_counts = [0] * m
    stages: list[StageRecord] = []
    stage = 0
    while True:
        stage += 1
        levels: list[float] = []
        counts: list[int] = []
        newly: list[frozenset[int]] = []
        for i in range(1, m + 1):
            level = stagek_level(i, problem, counts, levels, previous_counts)
            rejected = bonferroni_reject(p.row(i), level)
            new = frozenset(rejected - cumulative[i - 1])
            cumulative[i - 1] |= rejected
            levels.append(level)
            counts.append(len(cumulative[i - 1]))
            newly.append(new)
        record = StageRecord(
            stage=stage,
            levels=tuple(levels),
            cumulative=tuple(frozenset(s) for s in cumulative),
            newly=tuple(newly),
        )
        if options.record_full_trail:
            stages.append(record)
        else:
            stages = [record]
        any_new = any(newly)
        if stage == 1 and not any_new:
            termination = TERM_STAGE1
            break
        if stage >= 2 and not any_new:
            termination = TERM_NO_NEW
            break
        if stage >= cap:
            termination = TERM_CAP
            break
        previous_counts = counts
    return AuditTrail(
        problem=problem,
        stages=tuple(stages),
        stages_run=stage,
        final_rejected=tuple(frozenset(s) for s in cumulative),
        termination=termination,
    )


def two_family_problem(
    n_1: int,
    n_2: int,
    alpha_1: float,
    alpha_2: float,
    labels: tuple[Sequence[str], Sequence[str]] | None = None,
) -> GatekeepingProblem:
    """The two-family configuration with full transfer both ways.

    g_12 = g_21 = 1, so the whole recyclable amount of each family's level
    is passed to the other.  The global level is alpha_1 + alpha_2.
    """
    if labels is None:
        labels = (
            [f"H1{j}" for j in range(1, n_1 + 1)],
            [f"H2{j}" for j in range(1, n_2 + 1)],
        )
    families = (
        FamilySpec(1, "F1", tuple(labels[0]), alpha_1),
        FamilySpec(2, "F2", tuple(labels[1]), alpha_2),
    )
    transition = TransitionMatrix(((0.0, 1.0), (1.0, 0.0)))
    return validate_problem(families, transition, alpha_1 + alpha_2)


def upper_shift_matrix(m: int) -> TransitionMatrix:
    """Forward-chain transition matrix: g_{i,i+1} = 1, closed by g_{m,1} = 1.

    The literal upper-shift matrix leaves the last row all zero, which
    violates row-stochasticity; routing the last family's share back to the
    first completes the chain.  The loopback is inert whenever the engine
    runs a single pass or the last family's initial level is zero.
    """
    entries = [[0.0] * m for _ in range(m)]
    for i in range(m - 1):
        entries[i][i + 1] = 1.0
    entries[m - 1][0] = 1.0
    return TransitionMatrix(tuple(tuple(row) for row in entries))


def singleton_chain_problem(
    initial_levels: Sequence[float],
    labels: Sequence[str] | None = None,
) -> GatekeepingProblem:
    """Singleton families on the forward chain; used by the reductions.

    With a single pass this reproduces the fallback procedure; with
    ``initial_levels = (alpha, 0, ..., 0)`` a full run reproduces the
    fixed-sequence procedure.
    """
    m = len(initial_levels)
    if labels is None:
        labels = [f"H{i}" for i in range(1, m + 1)]
    families = tuple(
        FamilySpec(i + 1, f"F{i + 1}", (labels[i],), float(initial_levels[i]))
        for i in range(m)
    )
    return validate_problem(families, upper_shift_matrix(m), float(sum(initial_levels)))
