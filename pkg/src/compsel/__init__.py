"""Component selection with pliability scoring, regression-estimated
performance, constraint filtering and set-cover style search."""

from compsel.catalog import Catalog, Component, attribute_max, load_catalog
from compsel.errors import (
    GuardError,
    InputError,
    ParseError,
    UncoverableError,
    ValidationError,
    WeightsError,
)
from compsel.filtering import (
    SpecConstraint,
    SystemSpec,
    apply_pliability_filter,
    apply_probability_filter,
    apply_spec_filter,
    load_spec,
)
from compsel.perfmodel import PerformanceModel, PerformanceRequirement, TrainingSample, featurize, fit, predict
from compsel.pliability import (
    CANONICAL_ATTRIBUTES,
    NormalizedQuality,
    QualityWeights,
    component_pliability,
    normalize,
    system_pliability,
    validate_weights,
)
from compsel.selector import (
    Candidate,
    SaParams,
    SelectionProblem,
    SelectionResult,
    evaluate,
    exhaustive_select,
    greedy_select,
    intelligent_greedy_select,
    run_selection_loop,
    sa_select,
)

__version__ = "0.1.0"

__all__ = [
    "CANONICAL_ATTRIBUTES",
    "Candidate",
    "Catalog",
    "Component",
    "GuardError",
    "InputError",
    "NormalizedQuality",
    "ParseError",
    "PerformanceModel",
    "PerformanceRequirement",
    "QualityWeights",
    "SaParams",
    "SelectionProblem",
    "SelectionResult",
    "SpecConstraint",
    "SystemSpec",
    "TrainingSample",
    "UncoverableError",
    "ValidationError",
    "WeightsError",
    "apply_pliability_filter",
    "apply_probability_filter",
    "apply_spec_filter",
    "attribute_max",
    "component_pliability",
    "evaluate",
    "exhaustive_select",
    "featurize",
    "fit",
    "greedy_select",
    "intelligent_greedy_select",
    "load_catalog",
    "load_spec",
    "normalize",
    "predict",
    "run_selection_loop",
    "sa_select",
    "system_pliability",
    "validate_weights",
]
