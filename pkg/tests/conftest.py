"""Shared generators and structural checks for the test suite."""

from __future__ import annotations

import math

import numpy as np
import pytest

from gatekeep.core import (
    TERM_CAP,
    TERM_NO_NEW,
    TERM_STAGE1,
    AuditTrail,
    FamilySpec,
    GatekeepingProblem,
    TransitionMatrix,
)
from gatekeep.twolayer import TwoLayerProblem


def random_transition(rng: np.random.Generator, m: int) -> TransitionMatrix:
    """Random row-stochastic zero-diagonal matrix, sometimes sparse."""
    entries = []
    for i in range(m):
        w = rng.dirichlet(np.ones(m - 1))
        if m > 2 and rng.random() < 0.3:
            keep = rng.random(m - 1) < 0.6
            if not keep.any():
                keep[rng.integers(0, m - 1)] = True
            w = np.where(keep, w, 0.0)
            w = w / w.sum()
        row = list(w[:i]) + [0.0] + list(w[i:])
        entries.append(tuple(float(x) for x in row))
    return TransitionMatrix(tuple(entries))


def random_levels(rng: np.random.Generator, m: int, alpha: float) -> np.ndarray:
    w = rng.dirichlet(np.ones(m))
    if m > 2 and rng.random() < 0.25:
        w[rng.integers(0, m)] = 0.0
        w = w / w.sum()
    return alpha * w


def random_problem(
    rng: np.random.Generator,
    m: int | None = None,
    max_size: int = 4,
) -> GatekeepingProblem:
    if m is None:
        m = int(rng.integers(2, 7))
    sizes = rng.integers(1, max_size + 1, size=m)
    alpha = float(rng.uniform(0.01, 0.1))
    levels = random_levels(rng, m, alpha)
    families = tuple(
        FamilySpec(
            index=i + 1,
            label=f"F{i + 1}",
            hypothesis_labels=tuple(f"H{i + 1}_{j}" for j in range(1, int(sizes[i]) + 1)),
            initial_level=float(levels[i]),
        )
        for i in range(m)
    )
    return GatekeepingProblem(families, random_transition(rng, m), alpha)


def random_two_layer(rng: np.random.Generator, max_size: int = 3) -> TwoLayerProblem:
    m1 = int(rng.integers(1, 4))
    m2 = int(rng.integers(1, 4))
    alpha = float(rng.uniform(0.01, 0.1))
    levels = random_levels(rng, m1 + m2, alpha)
    sizes = rng.integers(1, max_size + 1, size=m1 + m2)

    def fam(layer: int, rank: int, flat: int) -> FamilySpec:
        labels = tuple(f"L{layer}F{rank}H{j}" for j in range(1, int(sizes[flat]) + 1))
        return FamilySpec(rank, f"L{layer}F{rank}", labels, float(levels[flat]))

    layer1 = tuple(fam(1, j + 1, j) for j in range(m1))
    layer2 = tuple(fam(2, l + 1, m1 + l) for l in range(m2))
    forward = tuple(tuple(float(x) for x in rng.dirichlet(np.ones(m2))) for _ in range(m1))
    backward = tuple(tuple(float(x) for x in rng.dirichlet(np.ones(m1))) for _ in range(m2))
    return TwoLayerProblem(layer1, layer2, forward, backward, alpha)


def random_pvalue_rows(rng: np.random.Generator, sizes) -> list[list[float]]:
    """Mixed draw: roughly half small p-values to exercise the retest paths."""
    rows = []
    for n in sizes:
        u = rng.uniform(0.0, 1.0, size=n)
        small = rng.random(n) < 0.5
        p = np.where(small, u * 0.03, u)
        rows.append([float(x) for x in p])
    return rows


def random_nulls(rng: np.random.Generator, sizes):
    from gatekeep.bounds import NullConfiguration

    sets = []
    for n in sizes:
        count = int(rng.integers(0, n + 1))
        members = rng.choice(np.arange(1, n + 1), size=count, replace=False)
        sets.append(frozenset(int(j) for j in members))
    return NullConfiguration(tuple(sets))


def assert_trail_invariants(trail: AuditTrail, cap: int | None = None) -> None:
    """Structural invariants every run must satisfy:

    nested cumulative rejection sets, newly = cumulative difference,
    per-family levels never below the initial level and non-decreasing
    across stages, stage count within the cap, and a final stage with no
    new rejections unless the run was cap-terminated.
    """
    problem = trail.problem
    sizes = problem.sizes
    m = len(sizes)
    n_total = problem.total_hypotheses
    resolved_cap = cap if cap is not None else n_total + 1

    assert trail.termination in (TERM_STAGE1, TERM_NO_NEW, TERM_CAP)
    assert 1 <= trail.stages_run <= resolved_cap
    assert trail.stages, "trail must record at least the final stage"
    assert trail.stages[-1].stage == trail.stages_run

    initial = [fam.initial_level for fam in problem.families]
    prev_cum = [frozenset()] * m
    prev_levels = initial
    expected_stage = trail.stages[0].stage
    for rec in trail.stages:
        assert rec.stage == expected_stage
        expected_stage += 1
        assert len(rec.levels) == m
        assert len(rec.cumulative) == m
        assert len(rec.newly) == m
        for i in range(m):
            assert rec.cumulative[i] <= frozenset(range(1, sizes[i] + 1))
            assert prev_cum[i] <= rec.cumulative[i], "rejections must accumulate"
            assert rec.newly[i] == rec.cumulative[i] - prev_cum[i]
            assert rec.levels[i] >= initial[i] - 1e-15
            assert rec.levels[i] >= prev_levels[i] - 1e-15, "levels must not shrink"
        prev_cum = list(rec.cumulative)
        prev_levels = list(rec.levels)

    assert tuple(prev_cum) == trail.final_rejected
    last = trail.stages[-1]
    if trail.termination == TERM_CAP:
        assert trail.stages_run == resolved_cap
    else:
        assert last.new_rejection_count == 0
        if trail.termination == TERM_STAGE1:
            assert trail.stages_run == 1
            assert trail.total_rejections == 0
        else:
            assert trail.stages_run >= 2


def flat_mask(trail: AuditTrail) -> np.ndarray:
    """Final rejection decisions as a flat 0/1 vector in family order."""
    sizes = trail.problem.sizes
    out = np.zeros(sum(sizes), dtype=np.uint8)
    offset = 0
    for n, rejected in zip(sizes, trail.final_rejected):
        for j in rejected:
            out[offset + j - 1] = 1
        offset += n
    return out


def reps_for(p_true: float, alpha: float, floor: int = 100_000) -> int:
    """Replications so a valid procedure passes the 99% upper-bound check
    with a five-sigma margin: the bound's critical offset is ~2.33 sigma,
    so alpha - p_true must exceed (2.33 + 5) sigma."""
    gap = alpha - p_true
    if gap <= 0:
        raise ValueError("true FWER must sit strictly below the budget")
    needed = math.ceil((2.33 + 5.0) ** 2 * p_true * (1.0 - p_true) / gap**2)
    return max(floor, needed)


@pytest.fixture
def rng() -> np.random.Generator:
    return np.random.default_rng(20240817)
