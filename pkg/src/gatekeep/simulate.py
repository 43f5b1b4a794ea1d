"""Monte Carlo estimation of the global familywise error rate.

The estimator runs the full procedure on freshly drawn p-values and counts
the replications in which at least one true-null hypothesis is rejected
anywhere.  Draws use a counter-based generator with a fixed word budget
per replication, so the result is a pure function of (seed, replication
index): chunked or fanned-out execution is bit-identical to a serial run
regardless of chunk boundaries or worker count.

Seeding contract
----------------
The generator is Philox-4x64 keyed directly with the integer seed.  Each
replication owns ``words_per_rep = 4 * ceil((n + 1) / 4)`` consecutive
64-bit words of the key's stream (the +1 is the common factor, drawn
first; the rounding keeps every replication on a counter-block boundary).
Uniforms are mapped from words as ``((w >> 11) + 0.5) * 2**-53``, which is
open-interval uniform on (0, 1).

Dependence models
-----------------
independent
    True-null p-values are exactly Uniform(0,1) (``p = 1 - u``); false
    nulls are one-sided normal p-values with mean shift delta:
    ``p = ndtr(-(ndtri(u) + delta))``.
equicorrelated(rho)
    One-factor equicorrelated normal statistics
    ``Z = sqrt(rho) W + sqrt(1 - rho) eps + delta_flag`` with one-sided
    p-values ``p = ndtr(-Z)``; true-null marginals are Uniform(0,1).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from numpy.random import Philox
from scipy.special import ndtr, ndtri
from scipy.stats import beta

from gatekeep.bounds import NullConfiguration
from gatekeep.core import GatekeepingProblem
from gatekeep.errors import DimensionError, ModelParameterError
from gatekeep.twolayer import TwoLayerProblem
from gatekeep import backends

GENERATOR_NAME = "philox4x64"
DEFAULT_CHUNK = 1 << 20


@dataclass(frozen=True)
class DependenceModel:
    """Joint distribution family for simulated p-values."""

    kind: str
    rho: float = 0.0

    def __post_init__(self) -> None:
        if self.kind not in ("independent", "equicorrelated"):
            raise ModelParameterError(f"unknown dependence model {self.kind!r}")
        if self.kind == "independent" and self.rho != 0.0:
            raise ModelParameterError("independent model cannot carry a correlation")
        if not 0.0 <= self.rho < 1.0:
            raise ModelParameterError(f"correlation {self.rho} outside [0, 1)")

    @classmethod
    def independent(cls) -> "DependenceModel":
        return cls("independent")

    @classmethod
    def equicorrelated(cls, rho: float) -> "DependenceModel":
        return cls("equicorrelated", float(rho))

    def describe(self) -> str:
        if self.kind == "independent":
            return "independent"
        return f"equicorrelated(rho={self.rho:g})"


@dataclass(frozen=True)
class EffectSpec:
    """Alternative distribution for false nulls: one-sided normal mean
    shift.  ``delta = -inf`` degenerates all false-null p-values to 1."""

    delta: float = 3.0

    def __post_init__(self) -> None:
        if math.isnan(self.delta):
            raise ModelParameterError("effect shift cannot be NaN")


@dataclass(frozen=True)
class SimulationReport:
    """Outcome of a Monte Carlo FWER run."""

    reps: int
    seed: int
    errors: int
    empirical_fwer: float
    upper_cb_99: float
    model: str
    generator: str = GENERATOR_NAME

    def __post_init__(self) -> None:
        if self.reps < 1:
            raise ModelParameterError(f"replication count {self.reps} < 1")
        if not 0.0 <= self.empirical_fwer <= 1.0:
            raise ModelParameterError(
                f"empirical FWER {self.empirical_fwer} outside [0, 1]"
            )

    def to_record(self) -> str:
        """Flat key-value text record, one field per line."""
        lines = [
            f"empirical_fwer={self.empirical_fwer:.10g}",
            f"upper_cb_99={self.upper_cb_99:.10g}",
            f"reps={self.reps}",
            f"seed={self.seed}",
            f"model={self.model}",
            f"generator={self.generator}",
            f"errors={self.errors}",
        ]
        return "\n".join(lines)


def clopper_pearson_upper(x: int, n: int, confidence: float = 0.99) -> float:
    """Exact binomial upper confidence bound on a proportion."""
    if not 0 <= x <= n:
        raise ValueError(f"count {x} outside 0..{n}")
    if x == n:
        return 1.0
    return float(beta.ppf(confidence, x + 1, n - x))


def words_per_replication(n_total: int) -> int:
    """Stream words owned by one replication (block-aligned)."""
    return 4 * ((n_total + 1 + 3) // 4)


def _draw_pvalues(
    seed: int,
    start: int,
    count: int,
    n_total: int,
    null_flags: np.ndarray,
    model: DependenceModel,
    effect: EffectSpec,
) -> np.ndarray:
    """p-values for replications [start, start + count), (count, n) float64."""
    w = words_per_replication(n_total)
    bg = Philox(key=seed)
    if start:
        bg.advance(start * w // 4)
    raw = bg.random_raw(count * w).reshape(count, w)
    u = ((raw >> np.uint64(11)) + 0.5) * 2.0**-53
    u_common = u[:, 0]
    u_eps = u[:, 1 : n_total + 1]
    if model.kind == "independent":
        P = np.empty_like(u_eps)
        if null_flags.any():
            P[:, null_flags] = 1.0 - u_eps[:, null_flags]
        false_cols = ~null_flags
        if false_cols.any():
            z = ndtri(u_eps[:, false_cols]) + effect.delta
            P[:, false_cols] = ndtr(-z)
        return P
    shift = np.where(null_flags, 0.0, effect.delta)
    z = (
        math.sqrt(model.rho) * ndtri(u_common)[:, None]
        + math.sqrt(1.0 - model.rho) * ndtri(u_eps)
        + shift[None, :]
    )
    return ndtr(-z)


def _sequential_arrays(problem: GatekeepingProblem):
    sizes = np.asarray(problem.sizes, dtype=np.int64)
    alphas = np.asarray(problem.initial_levels, dtype=np.float64)
    G = problem.transition.as_array()
    return sizes, alphas, G


def _two_layer_arrays(problem: TwoLayerProblem):
    sizes1 = np.asarray([f.size for f in problem.layer1], dtype=np.int64)
    alphas1 = np.asarray([f.initial_level for f in problem.layer1], dtype=np.float64)
    sizes2 = np.asarray([f.size for f in problem.layer2], dtype=np.int64)
    alphas2 = np.asarray([f.initial_level for f in problem.layer2], dtype=np.float64)
    fwd = np.asarray(problem.forward, dtype=np.float64)
    bwd = np.asarray(problem.backward, dtype=np.float64)
    return sizes1, alphas1, sizes2, alphas2, fwd, bwd


def rejection_masks(
    problem: GatekeepingProblem | TwoLayerProblem,
    P: np.ndarray,
    stage_cap: int | None = None,
) -> np.ndarray:
    """Batch rejection masks via the selected backend.

    ``P`` is (R, n) with columns in flattened family order; the result is a
    (R, n) uint8 mask.  Equivalent to running the engine row by row.
    """
    P = np.ascontiguousarray(P, dtype=np.float64)
    if P.ndim != 2 or P.shape[1] != problem.total_hypotheses:
        raise DimensionError(
            f"p-value batch has shape {P.shape}, expected (R, {problem.total_hypotheses})"
        )
    cap = stage_cap if stage_cap is not None else problem.total_hypotheses + 1
    if isinstance(problem, TwoLayerProblem):
        s1, a1, s2, a2, fwd, bwd = _two_layer_arrays(problem)
        return backends.reject_batch_two_layer(P, s1, a1, s2, a2, fwd, bwd, cap)
    sizes, alphas, G = _sequential_arrays(problem)
    return backends.reject_batch(P, sizes, alphas, G, cap)


def monte_carlo_fwer(
    problem: GatekeepingProblem | TwoLayerProblem,
    nulls: NullConfiguration,
    model: DependenceModel | None = None,
    effect: EffectSpec | None = None,
    reps: int = 100_000,
    seed: int = 0,
    chunk_size: int = DEFAULT_CHUNK,
) -> SimulationReport:
    """Estimate the global FWER over ``reps`` independent replications.

    Deterministic given ``seed``; the chunk size never changes the result.
    """
    if reps < 1:
        raise ModelParameterError(f"replication count {reps} < 1")
    if chunk_size < 1:
        raise ModelParameterError(f"chunk size {chunk_size} < 1")
    model = model or DependenceModel.independent()
    effect = effect or EffectSpec()
    sizes = problem.sizes
    nulls.validate_for(sizes)
    null_flags = nulls.flags(sizes)
    n_total = problem.total_hypotheses

    errors = 0
    start = 0
    while start < reps:
        count = min(chunk_size, reps - start)
        P = _draw_pvalues(seed, start, count, n_total, null_flags, model, effect)
        mask = rejection_masks(problem, P)
        if null_flags.any():
            errors += int((mask.astype(bool) & null_flags[None, :]).any(axis=1).sum())
        start += count
    empirical = errors / reps
    return SimulationReport(
        reps=reps,
        seed=seed,
        errors=errors,
        empirical_fwer=empirical,
        upper_cb_99=clopper_pearson_upper(errors, reps),
        model=model.describe(),
    )
