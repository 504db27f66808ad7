"""Exact Bayes-consistency checks for structured-prediction losses.

The package builds up in layers: combinatorial output spaces (BIO tag
sequences, dependency arborescences), explicit distributions over them,
exact MAP/marginal inference with brute-force oracles, surrogate losses
with closed-form or numerical risk minimizers, and finally mechanical
consistency verdicts with witness certificates and randomized
counterexample search.
"""

from .consistency import (
    DEFAULT_TIE_TOLERANCE,
    ConsistencyVerdict,
    Counterexample,
    MinimizeResult,
    OptimizerConfig,
    SearchResult,
    closed_form_minimizer,
    consistency_verdict,
    minimize_risk,
    nll_realizable_minimizer,
    realizability_residual,
    reconstruct_from_marginals,
    search_counterexamples,
)
from .distributions import (
    FIXTURE_NAMES,
    Distribution,
    distribution_from_dict,
    distribution_to_dict,
    entropy,
    load_distribution,
    load_fixture,
    marginals,
    mode,
    sample,
    save_distribution,
)
from .errors import (
    BayescheckError,
    DimensionMismatch,
    IllegalPart,
    Infeasible,
    InvalidDistribution,
    InvalidOutput,
    NoFiniteOutput,
    NumericallySingular,
    ParseError,
    SpaceMismatch,
    SpaceTooLarge,
    UnsupportedOutputs,
    WrongLossKind,
    WrongSpace,
)
from .inference import (
    MapResult,
    MarginalResult,
    load_scores,
    map_inference,
    marginal_inference,
    save_scores,
    score_of,
    scores_from_dict,
    scores_to_dict,
    validate_scores,
)
from .losses import (
    LossEval,
    LossKind,
    ZeroOneRisk,
    bayes_zero_one_risk,
    empirical_surrogate_risk,
    loss,
    surrogate_risk,
    zero_one_risk,
)
from .structures import (
    OutputSpace,
    OutputVector,
    SpaceKind,
    enumerate_outputs,
    part_index,
    part_of_index,
)

__version__ = "0.1.0"

__all__ = [
    "BayescheckError",
    "ConsistencyVerdict",
    "Counterexample",
    "DEFAULT_TIE_TOLERANCE",
    "DimensionMismatch",
    "Distribution",
    "FIXTURE_NAMES",
    "IllegalPart",
    "Infeasible",
    "InvalidDistribution",
    "InvalidOutput",
    "LossEval",
    "LossKind",
    "MapResult",
    "MarginalResult",
    "MinimizeResult",
    "NoFiniteOutput",
    "NumericallySingular",
    "OptimizerConfig",
    "OutputSpace",
    "OutputVector",
    "ParseError",
    "SearchResult",
    "SpaceKind",
    "SpaceMismatch",
    "SpaceTooLarge",
    "UnsupportedOutputs",
    "WrongLossKind",
    "WrongSpace",
    "ZeroOneRisk",
    "bayes_zero_one_risk",
    "closed_form_minimizer",
    "consistency_verdict",
    "distribution_from_dict",
    "distribution_to_dict",
    "empirical_surrogate_risk",
    "entropy",
    "enumerate_outputs",
    "load_distribution",
    "load_fixture",
    "load_scores",
    "loss",
    "map_inference",
    "marginal_inference",
    "marginals",
    "minimize_risk",
    "mode",
    "nll_realizable_minimizer",
    "part_index",
    "part_of_index",
    "realizability_residual",
    "reconstruct_from_marginals",
    "sample",
    "save_distribution",
    "save_scores",
    "score_of",
    "scores_from_dict",
    "scores_to_dict",
    "search_counterexamples",
    "surrogate_risk",
    "validate_scores",
    "zero_one_risk",
]
