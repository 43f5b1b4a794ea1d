"""Independent reference implementations used to cross-check the engines.

``fallback_oracle`` and ``fixed_sequence_oracle`` are direct codings of the
classical single-hypothesis-per-step procedures; the engines reproduce them
under specific reduction configurations, and the tests compare decisions
over random draws.

``all_null_fwer`` computes the exact global FWER of either engine under the
global null analytically.  Under the global null every rejection is an
error, and any transfer presupposes an earlier rejection, so the first
error (if any) happens at stage 1 at the initial levels: the FWER equals
the probability that at least one initial-level Bonferroni test rejects.
For independent uniform p-values that is a product; for one-factor
equicorrelated normal statistics it is a one-dimensional integral over the
common factor.
"""

from __future__ import annotations

import math
from typing import Sequence

import numpy as np
from scipy.integrate import quad
from scipy.special import ndtr, ndtri

from gatekeep.core import GatekeepingProblem
from gatekeep.errors import ModelParameterError
from gatekeep.twolayer import TwoLayerProblem


def fallback_oracle(
    p: Sequence[float], levels: Sequence[float]
) -> frozenset[int]:
    """Fallback procedure over singleton hypotheses (1-based results).

    Hypothesis i is tested at its preassigned level plus the accumulated
    level carried from an unbroken run of rejections immediately before it;
    an acceptance drops the carry.
    """
    if len(p) != len(levels):
        raise ValueError(f"{len(p)} p-values but {len(levels)} levels")
    rejected: set[int] = set()
    carry = 0.0
    for i, (pi, ai) in enumerate(zip(p, levels), start=1):
        level = ai + carry
        if level > 0.0 and pi <= level:
            rejected.add(i)
            carry = level
        else:
            carry = 0.0
    return frozenset(rejected)


def fixed_sequence_oracle(p: Sequence[float], alpha: float) -> frozenset[int]:
    """Fixed-sequence procedure: each hypothesis at full alpha, stop at the
    first acceptance (1-based results)."""
    rejected: set[int] = set()
    for i, pi in enumerate(p, start=1):
        if alpha > 0.0 and pi <= alpha:
            rejected.add(i)
        else:
            break
    return frozenset(rejected)


def _per_hypothesis_thresholds(
    problem: GatekeepingProblem | TwoLayerProblem,
) -> list[tuple[float, int]]:
    """(threshold alpha_i/n_i, multiplicity n_i) per family."""
    return [
        (fam.initial_level / fam.size, fam.size) for fam in problem.families
    ]


def all_null_fwer(
    problem: GatekeepingProblem | TwoLayerProblem, rho: float = 0.0
) -> float:
    """Exact global FWER under the global null.

    ``rho = 0`` is the independent-uniform model.  For ``rho`` in (0, 1)
    the test statistics are one-factor equicorrelated standard normals and
    the p-values one-sided; the no-rejection probability factorizes
    conditionally on the common factor w:

        FWER = 1 - integral phi(w) prod_i Phi((z_i - sqrt(rho) w) /
               sqrt(1 - rho))^{n_i} dw,    z_i = -ndtri(alpha_i / n_i).
    """
    if not 0.0 <= rho < 1.0:
        raise ModelParameterError(f"correlation {rho} outside [0, 1)")
    thresholds = _per_hypothesis_thresholds(problem)
    if rho == 0.0:
        keep = 1.0
        for t, n in thresholds:
            keep *= (1.0 - t) ** n
        return 1.0 - keep

    # z_i = +inf for zero-level families; ndtr then contributes a factor 1.
    zs = np.array([math.inf if t <= 0.0 else -ndtri(t) for t, _ in thresholds])
    ns = np.array([n for _, n in thresholds], dtype=np.float64)
    sr = math.sqrt(rho)
    sc = math.sqrt(1.0 - rho)

    def keep_given_w(w: float) -> float:
        args = (zs - sr * w) / sc
        return float(np.prod(ndtr(args) ** ns)) * math.exp(
            -0.5 * w * w
        ) / math.sqrt(2.0 * math.pi)

    keep, _err = quad(keep_given_w, -np.inf, np.inf, limit=200)
    return 1.0 - keep
