"""Bonferroni gatekeeping procedures with retesting for ordered families.

The package implements a multi-stage multiple testing procedure for
hypothesis families arranged in a rank order (and a two-layer variant for
families arranged in two ordered layers).  Each family is tested by a
Bonferroni rule at a level that grows as other families reject: unused
error rate is passed forward along a transition matrix, and later stages
retest earlier families with the error rate freed by later ones.  The
procedure controls the familywise error rate across all families at a
configured global level.

Public surface:

- problem construction: :class:`FamilySpec`, :class:`TransitionMatrix`,
  :class:`GatekeepingProblem`, :class:`TwoLayerProblem`, plus the helpers
  :func:`two_family_problem`, :func:`upper_shift_matrix`,
  :func:`singleton_chain_problem`
- execution: :func:`run_procedure`, :func:`run_two_layer`,
  :class:`EngineOptions`, :class:`AuditTrail`
- analytic verification: :class:`NullConfiguration`,
  :func:`worst_case_levels`, :func:`fwer_bound`,
  :func:`prefix_envelope_bound`, :func:`worst_case_levels_two_layer`,
  :func:`fwer_bound_two_layer`, :func:`all_null_fwer`
- reference procedures: :func:`fallback_oracle`,
  :func:`fixed_sequence_oracle`
- simulation: :func:`monte_carlo_fwer`, :class:`DependenceModel`,
  :class:`EffectSpec`, :class:`SimulationReport`
"""

from gatekeep.bounds import (
    NullConfiguration,
    fwer_bound,
    fwer_bound_two_layer,
    prefix_envelope_bound,
    worst_case_levels,
    worst_case_levels_two_layer,
)
from gatekeep.core import (
    AuditTrail,
    FamilySpec,
    GatekeepingProblem,
    PValueSet,
    StageRecord,
    TransitionMatrix,
    bonferroni_reject,
    validate_problem,
    validate_transition_matrix,
)
from gatekeep.engine import (
    EngineOptions,
    run_procedure,
    singleton_chain_problem,
    stage1_level,
    stagek_level,
    two_family_problem,
    upper_shift_matrix,
)
from gatekeep.errors import (
    ConfigError,
    DimensionError,
    EmptyFamilyError,
    EntryRangeError,
    GatekeepError,
    LabelError,
    LevelSumError,
    ModelParameterError,
    NonZeroDiagonalError,
    PValueRangeError,
    RowSumError,
)
from gatekeep.oracles import all_null_fwer, fallback_oracle, fixed_sequence_oracle
from gatekeep.simulate import (
    DependenceModel,
    EffectSpec,
    SimulationReport,
    clopper_pearson_upper,
    monte_carlo_fwer,
    rejection_masks,
)
from gatekeep.twolayer import (
    TwoLayerProblem,
    layer1_level,
    layer2_level,
    run_two_layer,
)

__version__ = "0.1.0"

__all__ = [
    "AuditTrail",
    "ConfigError",
    "DependenceModel",
    "DimensionError",
    "EffectSpec",
    "EmptyFamilyError",
    "EngineOptions",
    "EntryRangeError",
    "FamilySpec",
    "GatekeepError",
    "GatekeepingProblem",
    "LabelError",
    "LevelSumError",
    "ModelParameterError",
    "NonZeroDiagonalError",
    "NullConfiguration",
    "PValueRangeError",
    "PValueSet",
    "RowSumError",
    "SimulationReport",
    "StageRecord",
    "TransitionMatrix",
    "TwoLayerProblem",
    "all_null_fwer",
    "bonferroni_reject",
    "clopper_pearson_upper",
    "fallback_oracle",
    "fixed_sequence_oracle",
    "fwer_bound",
    "fwer_bound_two_layer",
    "layer1_level",
    "layer2_level",
    "monte_carlo_fwer",
    "prefix_envelope_bound",
    "rejection_masks",
    "run_procedure",
    "run_two_layer",
    "singleton_chain_problem",
    "stage1_level",
    "stagek_level",
    "two_family_problem",
    "upper_shift_matrix",
    "validate_problem",
    "validate_transition_matrix",
    "worst_case_levels",
    "worst_case_levels_two_layer",
    "__version__",
]
