"""Search-space reduction: hard spec constraints, pliability threshold and
satisfaction-probability threshold. Each filter tests a component-local
predicate, so they commute."""

from __future__ import annotations

from dataclasses import dataclass
from typing import FrozenSet, Iterable, Optional, Sequence, Tuple, Union

from compsel._io import Source, as_finite, check_version, is_number, read_json
from compsel.catalog import Catalog, Component
from compsel.errors import ParseError, ValidationError
from compsel.perfmodel import PerformanceModel, PerformanceRequirement, _parse_requirement, satisfaction_probability
from compsel.pliability import NormalizedQuality, QualityWeights, pliability_table

CONSTRAINT_OPS = ("eq", "le", "ge")

_SPEC_KEYS = {
    "format_version",
    "requirements",
    "constraints",
    "perf_requirements",
    "pliability_threshold",
    "probability_threshold",
}


@dataclass(frozen=True)
class SpecConstraint:
    attribute: str
    op: str
    value: Union[float, str]

    def __post_init__(self):
        if not isinstance(self.attribute, str) or not self.attribute:
            raise ValidationError("constraint attribute must be a non-empty string")
        if self.op not in CONSTRAINT_OPS:
            raise ValidationError(f"constraint on {self.attribute!r}: unknown op {self.op!r}", self.attribute)
        if self.op != "eq" and not is_number(self.value):
            raise ValidationError(f"constraint on {self.attribute!r}: '{self.op}' needs a numeric bound", self.attribute)

    def holds(self, component: Component) -> bool:
        """Missing attributes, and ordering tests against tokens, are violations."""
        if self.attribute not in component.spec_attrs:
            return False
        actual = component.spec_attrs[self.attribute]
        if self.op == "eq":
            return actual == self.value and is_number(actual) == is_number(self.value)
        if not is_number(actual):
            return False
        return actual <= self.value if self.op == "le" else actual >= self.value


@dataclass(frozen=True)
class SystemSpec:
    requirements: FrozenSet[str]
    constraints: Tuple[SpecConstraint, ...] = ()
    perf_requirements: Tuple[PerformanceRequirement, ...] = ()
    pliability_threshold: float = 0.0
    probability_threshold: float = 0.0

    def __post_init__(self):
        object.__setattr__(self, "requirements", frozenset(self.requirements))
        object.__setattr__(self, "constraints", tuple(self.constraints))
        object.__setattr__(self, "perf_requirements", tuple(self.perf_requirements))
        if not self.requirements:
            raise ValidationError("spec must list at least one requirement")
        metrics = [r.metric for r in self.perf_requirements]
        dupes = sorted({m for m in metrics if metrics.count(m) > 1})
        if dupes:
            raise ValidationError(f"duplicate performance requirement metric {dupes[0]!r}", dupes[0])
        if not 0.0 <= self.pliability_threshold <= 10.0:
            raise ValidationError(f"pliability_threshold {self.pliability_threshold!r} outside [0, 10]")
        if not 0.0 <= self.probability_threshold <= 1.0:
            raise ValidationError(f"probability_threshold {self.probability_threshold!r} outside [0, 1]")

    def with_thresholds(self, pliability: Optional[float] = None, probability: Optional[float] = None) -> "SystemSpec":
        return SystemSpec(
            self.requirements,
            self.constraints,
            self.perf_requirements,
            self.pliability_threshold if pliability is None else pliability,
            self.probability_threshold if probability is None else probability,
        )


def load_spec(source: Source) -> SystemSpec:
    doc = read_json(source)
    if not isinstance(doc, dict):
        raise ParseError("spec must be a JSON object")
    unknown = set(doc) - _SPEC_KEYS
    if unknown:
        raise ParseError(f"unknown top-level keys {sorted(unknown)}")
    check_version(doc)
    reqs = doc.get("requirements")
    if not isinstance(reqs, list) or not all(isinstance(r, str) and r for r in reqs):
        raise ParseError("'requirements' must be a list of non-empty strings")
    if len(set(reqs)) != len(reqs):
        dupe = next(r for r in reqs if reqs.count(r) > 1)
        raise ValidationError(f"duplicate requirement id {dupe!r}", dupe)
    constraints = []
    for raw in doc.get("constraints", []):
        if not isinstance(raw, dict) or set(raw) != {"attribute", "op", "value"}:
            raise ParseError(f"malformed constraint {raw!r}")
        value = raw["value"]
        if not isinstance(value, str):
            value = as_finite(value, f"constraint {raw['attribute']!r} value")
        constraints.append(SpecConstraint(raw["attribute"], raw["op"], value))
    perf = [_parse_requirement(raw) for raw in doc.get("perf_requirements", [])]
    return SystemSpec(
        frozenset(reqs),
        tuple(constraints),
        tuple(perf),
        as_finite(doc.get("pliability_threshold", 0.0), "pliability_threshold"),
        as_finite(doc.get("probability_threshold", 0.0), "probability_threshold"),
    )


def apply_spec_filter(catalog: Catalog, spec: SystemSpec, among: Optional[Iterable[str]] = None) -> FrozenSet[str]:
    """Ids (from ``among``, default the whole catalog) meeting every hard constraint."""
    ids = catalog.ids if among is None else among
    return frozenset(i for i in ids if all(c.holds(catalog[i]) for c in spec.constraints))


def apply_pliability_filter(
    survivors: Iterable[str], nq: NormalizedQuality, weights: QualityWeights, threshold: float
) -> FrozenSet[str]:
    scores = pliability_table(nq, weights)
    return frozenset(i for i in survivors if scores[i] >= threshold)


def min_probability(model: Optional[PerformanceModel], component_id: str, reqs: Sequence[PerformanceRequirement]) -> float:
    """Weakest-link satisfaction probability; 1 when there are no requirements."""
    if not reqs:
        return 1.0
    if model is None:
        raise ValidationError("performance requirements need a fitted performance model")
    return min(satisfaction_probability(model, component_id, r) for r in reqs)


def apply_probability_filter(
    survivors: Iterable[str],
    model: Optional[PerformanceModel],
    reqs: Sequence[PerformanceRequirement],
    threshold: float,
) -> FrozenSet[str]:
    survivors = frozenset(survivors)
    if threshold <= 0 or not reqs:
        return survivors
    return frozenset(i for i in survivors if min_probability(model, i, reqs) >= threshold)


def filter_chain(
    catalog: Catalog,
    spec: SystemSpec,
    nq: NormalizedQuality,
    weights: QualityWeights,
    model: Optional[PerformanceModel] = None,
) -> Tuple[FrozenSet[str], list]:
    """Run spec -> pliability -> probability; returns survivors and per-stage counts."""
    stages = [("catalog", len(catalog))]
    survivors = apply_spec_filter(catalog, spec)
    stages.append(("spec", len(survivors)))
    survivors = apply_pliability_filter(survivors, nq, weights, spec.pliability_threshold)
    stages.append(("pliability", len(survivors)))
    survivors = apply_probability_filter(survivors, model, spec.perf_requirements, spec.probability_threshold)
    stages.append(("probability", len(survivors)))
    return survivors, stages
