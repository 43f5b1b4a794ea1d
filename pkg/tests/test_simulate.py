"""Monte Carlo FWER estimator: determinism, seeding contract, statistics."""

import math

import numpy as np
import pytest
from scipy.stats import beta

from gatekeep.bounds import NullConfiguration, fwer_bound
from gatekeep.engine import two_family_problem
from gatekeep.errors import ModelParameterError
from gatekeep.oracles import all_null_fwer
from gatekeep.simulate import (
    DependenceModel,
    EffectSpec,
    SimulationReport,
    clopper_pearson_upper,
    monte_carlo_fwer,
    words_per_replication,
)

from conftest import random_nulls, random_problem, reps_for


def two_endpoint_problem():
    return two_family_problem(2, 2, 0.04, 0.01)


class TestModelValidation:
    def test_unknown_kind(self):
        with pytest.raises(ModelParameterError):
            DependenceModel("gaussian-copula")

    def test_rho_range(self):
        with pytest.raises(ModelParameterError):
            DependenceModel.equicorrelated(1.0)
        with pytest.raises(ModelParameterError):
            DependenceModel.equicorrelated(-0.2)
        assert DependenceModel.equicorrelated(0.0).rho == 0.0

    def test_independent_cannot_carry_rho(self):
        with pytest.raises(ModelParameterError):
            DependenceModel("independent", rho=0.3)

    def test_describe(self):
        assert DependenceModel.independent().describe() == "independent"
        assert DependenceModel.equicorrelated(0.5).describe() == "equicorrelated(rho=0.5)"

    def test_effect_nan_rejected(self):
        with pytest.raises(ModelParameterError):
            EffectSpec(delta=float("nan"))

    def test_reps_validated(self):
        with pytest.raises(ModelParameterError):
            monte_carlo_fwer(
                two_endpoint_problem(),
                NullConfiguration.all_null((2, 2)),
                reps=0,
            )


class TestSeedingContract:
    def test_words_per_replication_is_block_aligned(self):
        # one extra word for the common factor, rounded up to 4-word blocks
        assert words_per_replication(3) == 4
        assert words_per_replication(4) == 8
        assert words_per_replication(7) == 8
        assert words_per_replication(8) == 12

    def test_chunk_size_never_changes_the_result(self):
        problem = two_endpoint_problem()
        nulls = NullConfiguration.all_null((2, 2))
        ref = monte_carlo_fwer(problem, nulls, reps=5000, seed=11, chunk_size=5000)
        for chunk in (1, 7, 64, 999, 4999):
            out = monte_carlo_fwer(problem, nulls, reps=5000, seed=11, chunk_size=chunk)
            assert out == ref

    def test_same_seed_same_report(self):
        problem = two_endpoint_problem()
        nulls = NullConfiguration.all_null((2, 2))
        a = monte_carlo_fwer(problem, nulls, reps=2000, seed=5)
        b = monte_carlo_fwer(problem, nulls, reps=2000, seed=5)
        assert a == b

    def test_different_seeds_differ(self):
        problem = two_endpoint_problem()
        nulls = NullConfiguration.all_null((2, 2))
        a = monte_carlo_fwer(problem, nulls, reps=20000, seed=1)
        b = monte_carlo_fwer(problem, nulls, reps=20000, seed=2)
        assert a.errors != b.errors

    def test_prefix_property(self):
        # the first k replications of a long run equal a short run of k
        problem = two_endpoint_problem()
        nulls = NullConfiguration.all_null((2, 2))
        long = monte_carlo_fwer(problem, nulls, reps=3000, seed=3)
        short = monte_carlo_fwer(problem, nulls, reps=1000, seed=3)
        # recount the long run's first 1000 reps via chunked execution
        recount = monte_carlo_fwer(problem, nulls, reps=1000, seed=3, chunk_size=17)
        assert short.errors == recount.errors
        assert short.reps == 1000 and long.reps == 3000


class TestReport:
    def test_record_layout(self):
        problem = two_endpoint_problem()
        nulls = NullConfiguration.all_null((2, 2))
        rec = monte_carlo_fwer(problem, nulls, reps=1000, seed=4).to_record()
        lines = rec.splitlines()
        keys = [line.split("=", 1)[0] for line in lines]
        assert keys == [
            "empirical_fwer",
            "upper_cb_99",
            "reps",
            "seed",
            "model",
            "generator",
            "errors",
        ]
        fields = dict(line.split("=", 1) for line in lines)
        assert fields["generator"] == "philox4x64"
        assert fields["reps"] == "1000"
        assert float(fields["empirical_fwer"]) == int(fields["errors"]) / 1000

    def test_report_validation(self):
        with pytest.raises(ModelParameterError):
            SimulationReport(
                reps=0, seed=0, errors=0, empirical_fwer=0.0, upper_cb_99=0.0,
                model="independent",
            )


class TestClopperPearson:
    def test_exact_beta_quantile(self):
        assert clopper_pearson_upper(5, 100) == pytest.approx(
            float(beta.ppf(0.99, 6, 95)), abs=1e-15
        )

    def test_boundaries(self):
        assert clopper_pearson_upper(10, 10) == 1.0
        # zero successes: closed form 1 - 0.01**(1/n)
        assert clopper_pearson_upper(0, 50) == pytest.approx(
            1.0 - 0.01 ** (1.0 / 50.0), abs=1e-12
        )

    def test_monotone_in_count(self):
        values = [clopper_pearson_upper(x, 200) for x in range(0, 201, 20)]
        for a, b in zip(values, values[1:]):
            assert b > a

    def test_count_range(self):
        with pytest.raises(ValueError):
            clopper_pearson_upper(-1, 10)
        with pytest.raises(ValueError):
            clopper_pearson_upper(11, 10)


class TestEstimatorAgainstAnalyticOracle:
    def test_independent_all_null(self):
        problem = two_endpoint_problem()
        nulls = NullConfiguration.all_null((2, 2))
        truth = all_null_fwer(problem)
        reps = 400_000
        out = monte_carlo_fwer(problem, nulls, reps=reps, seed=17)
        sigma = math.sqrt(truth * (1.0 - truth) / reps)
        assert abs(out.empirical_fwer - truth) <= 5.0 * sigma

    def test_equicorrelated_all_null(self):
        problem = two_endpoint_problem()
        nulls = NullConfiguration.all_null((2, 2))
        rho = 0.5
        truth = all_null_fwer(problem, rho=rho)
        reps = 400_000
        out = monte_carlo_fwer(
            problem, nulls, model=DependenceModel.equicorrelated(rho),
            reps=reps, seed=17,
        )
        sigma = math.sqrt(truth * (1.0 - truth) / reps)
        assert abs(out.empirical_fwer - truth) <= 5.0 * sigma

    def test_true_null_margins_are_uniform(self):
        # single-family all-null: rejection rate must equal the Bonferroni
        # threshold exactly in distribution; checks the p = 1 - u mapping
        problem = two_family_problem(1, 1, 0.04, 0.01)
        nulls = NullConfiguration.all_null((1, 1))
        truth = all_null_fwer(problem)
        reps = 400_000
        out = monte_carlo_fwer(problem, nulls, reps=reps, seed=23)
        sigma = math.sqrt(truth * (1.0 - truth) / reps)
        assert abs(out.empirical_fwer - truth) <= 5.0 * sigma


class TestDegenerateEffect:
    def test_all_false_nulls_forced_to_one(self):
        problem = two_endpoint_problem()
        nulls = NullConfiguration.no_null(2)
        out = monte_carlo_fwer(
            problem, nulls, effect=EffectSpec(delta=float("-inf")), reps=1, seed=0
        )
        assert out.empirical_fwer == 0.0
        assert out.upper_cb_99 < 1.0

    def test_no_true_nulls_never_count_errors(self):
        problem = two_endpoint_problem()
        nulls = NullConfiguration.no_null(2)
        out = monte_carlo_fwer(problem, nulls, reps=5000, seed=9)
        assert out.errors == 0


class TestBoundAcrossGrid:
    """Upper confidence bound stays under the budget across the dependence
    grid; replication counts are sized from the analytic gap so a valid
    procedure fails each check with probability well under 1e-6."""

    @pytest.mark.parametrize("rho", [0.0, 0.3, 0.5, 0.8])
    def test_all_null_grid(self, rho):
        problem = two_endpoint_problem()
        nulls = NullConfiguration.all_null((2, 2))
        truth = all_null_fwer(problem, rho=rho)
        reps = reps_for(truth, problem.global_level)
        model = (
            DependenceModel.independent()
            if rho == 0.0
            else DependenceModel.equicorrelated(rho)
        )
        out = monte_carlo_fwer(problem, nulls, model=model, reps=reps, seed=31)
        assert out.upper_cb_99 <= problem.global_level

    @pytest.mark.parametrize("rho", [0.0, 0.3, 0.5, 0.8])
    def test_mixed_null_grid(self, rho):
        # half the hypotheses false: the analytic bound certifies enough
        # slack for the floor replication count
        problem = two_endpoint_problem()
        nulls = NullConfiguration((frozenset({1}), frozenset({2})))
        cert = fwer_bound(problem, nulls)
        reps = reps_for(cert, problem.global_level)
        model = (
            DependenceModel.independent()
            if rho == 0.0
            else DependenceModel.equicorrelated(rho)
        )
        out = monte_carlo_fwer(problem, nulls, model=model, reps=reps, seed=37)
        assert out.upper_cb_99 <= problem.global_level
