"""Reference procedures and the analytic all-null FWER."""

import math

import numpy as np
import pytest

from gatekeep.core import FamilySpec, TransitionMatrix, validate_problem
from gatekeep.engine import two_family_problem
from gatekeep.errors import ModelParameterError
from gatekeep.oracles import all_null_fwer, fallback_oracle, fixed_sequence_oracle
from gatekeep.twolayer import TwoLayerProblem


class TestFallbackOracle:
    def test_worked_example_full_carry(self):
        # H1 at 0.0125, H2 at 0.0125+0.0075=0.02, H3 at 0.02+0.005=0.025
        rejected = fallback_oracle((0.01, 0.019, 0.004), (0.0125, 0.0075, 0.005))
        assert rejected == frozenset({1, 2, 3})

    def test_carry_drops_on_acceptance(self):
        # H1 accepted: H2 is tested at its own 0.0075 only
        rejected = fallback_oracle((0.5, 0.019, 0.004), (0.0125, 0.0075, 0.005))
        assert rejected == frozenset({3})

    def test_zero_levels_skip_without_carry(self):
        rejected = fallback_oracle((0.0, 0.0), (0.0, 0.05))
        assert rejected == frozenset({2})

    def test_inclusive_equality(self):
        assert fallback_oracle((0.0125,), (0.0125,)) == frozenset({1})


class TestFixedSequenceOracle:
    def test_stops_at_first_acceptance(self):
        assert fixed_sequence_oracle((0.01, 0.2, 0.001), 0.05) == frozenset({1})

    def test_all_pass(self):
        assert fixed_sequence_oracle((0.01, 0.02, 0.03), 0.05) == frozenset({1, 2, 3})

    def test_first_acceptance_rejects_nothing(self):
        assert fixed_sequence_oracle((0.9, 0.0), 0.05) == frozenset()

    def test_zero_level(self):
        assert fixed_sequence_oracle((0.0,), 0.0) == frozenset()


def three_family_problem():
    from fractions import Fraction

    alpha = Fraction("0.025")
    fams = (
        FamilySpec(1, "F1", ("H11", "H12"), float(alpha / 2)),
        FamilySpec(2, "F2", ("H21", "H22"), float(alpha / 3)),
        FamilySpec(3, "F3", ("H31", "H32"), float(alpha / 6)),
    )
    g = TransitionMatrix(((0.0, 0.5, 0.5), (0.5, 0.0, 0.5), (0.5, 0.5, 0.0)))
    return validate_problem(fams, g, float(alpha))


class TestAllNullFwer:
    def test_independent_matches_product_form(self):
        problem = two_family_problem(2, 2, 0.04, 0.01)
        expected = 1.0 - (1.0 - 0.04 / 2) ** 2 * (1.0 - 0.01 / 2) ** 2
        assert all_null_fwer(problem) == pytest.approx(expected, abs=1e-15)

    def test_three_family_independent(self):
        problem = three_family_problem()
        expected = 1.0
        for alpha_i, n in zip(problem.initial_levels, problem.sizes):
            expected *= (1.0 - alpha_i / n) ** n
        assert all_null_fwer(problem) == pytest.approx(1.0 - expected, abs=1e-15)

    def test_quadrature_continuous_at_zero_correlation(self):
        problem = two_family_problem(2, 2, 0.04, 0.01)
        assert all_null_fwer(problem, rho=1e-12) == pytest.approx(
            all_null_fwer(problem), abs=1e-9
        )

    def test_correlation_reduces_all_null_fwer(self):
        # positive dependence makes simultaneous small p-values likelier but
        # any single exceedance rarer; the union probability shrinks
        problem = two_family_problem(2, 2, 0.04, 0.01)
        values = [all_null_fwer(problem, rho=r) for r in (0.0, 0.3, 0.6, 0.9)]
        for a, b in zip(values, values[1:]):
            assert b < a

    def test_zero_level_family_contributes_nothing(self):
        problem = two_family_problem(2, 2, 0.05, 0.0)
        expected = 1.0 - (1.0 - 0.05 / 2) ** 2
        assert all_null_fwer(problem) == pytest.approx(expected, abs=1e-15)
        assert all_null_fwer(problem, rho=0.5) < expected

    def test_rho_validation(self):
        problem = two_family_problem(2, 2, 0.04, 0.01)
        with pytest.raises(ModelParameterError):
            all_null_fwer(problem, rho=1.0)
        with pytest.raises(ModelParameterError):
            all_null_fwer(problem, rho=-0.1)

    def test_two_layer_uses_flattened_initial_levels(self):
        tl = TwoLayerProblem(
            (FamilySpec(1, "F1", ("H11", "H12"), 0.04),),
            (FamilySpec(1, "F2", ("H21", "H22"), 0.01),),
            ((1.0,),),
            ((1.0,),),
            0.05,
        )
        seq = two_family_problem(2, 2, 0.04, 0.01)
        assert all_null_fwer(tl) == pytest.approx(all_null_fwer(seq), abs=1e-15)
        assert all_null_fwer(tl, rho=0.5) == pytest.approx(
            all_null_fwer(seq, rho=0.5), abs=1e-12
        )

    def test_always_below_global_level(self, rng):
        from conftest import random_problem

        for _ in range(50):
            problem = random_problem(rng)
            assert all_null_fwer(problem) <= problem.global_level
            assert all_null_fwer(problem, rho=0.5) <= problem.global_level
