"""Pliability quality metric.

Raw attribute values are normalized per attribute to a 0-10 scale against
the catalog maximum, then combined with user weights that sum to one.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from typing import Dict, Iterable, Mapping, Tuple

from compsel._io import Source, as_finite, check_version, read_json
from compsel.catalog import Catalog, attribute_max
from compsel.errors import ParseError, ValidationError, WeightsError

CANONICAL_ATTRIBUTES = (
    "reliability",
    "performance",
    "fault_tolerance",
    "safety",
    "security",
    "availability",
    "testability",
    "maintainability",
)

WEIGHT_SUM_TOLERANCE = 1e-9
SCALE = 10.0


@dataclass(frozen=True)
class QualityWeights:
    weights: Mapping[str, float]

    def __post_init__(self):
        object.__setattr__(self, "weights", dict(self.weights))

    @property
    def total(self) -> float:
        return math.fsum(self.weights.values())

    def items(self):
        return self.weights.items()

    def renormalized(self) -> "QualityWeights":
        """Scale every weight by 1/sum. Only done on explicit request."""
        total = self.total
        if not total > 0:
            raise WeightsError(f"cannot renormalize weights with sum {total!r}", actual_sum=total)
        return QualityWeights({k: v / total for k, v in self.weights.items()})


def validate_weights(weights: QualityWeights) -> None:
    """Raise :class:`WeightsError` unless every weight is in [0, 1] and they sum to 1."""
    for name, value in weights.items():
        if not isinstance(name, str) or not name:
            raise WeightsError(f"attribute name must be a non-empty string, got {name!r}")
        if not (0.0 <= value <= 1.0):
            raise WeightsError(f"weight for {name!r} is {value!r}, outside [0, 1]", ident=name)
    total = weights.total
    if abs(total - 1.0) > WEIGHT_SUM_TOLERANCE:
        raise WeightsError(f"weights sum to {total!r}, expected 1", actual_sum=total)


def load_weights(source: Source) -> QualityWeights:
    """Read a ``{attribute: weight}`` JSON object (not validated here)."""
    doc = read_json(source)
    if not isinstance(doc, dict):
        raise ParseError("weights must be a JSON object")
    check_version(doc)
    return QualityWeights(
        {k: as_finite(v, f"weight {k!r}") for k, v in doc.items() if k != "format_version"}
    )


@dataclass(frozen=True)
class NormalizedQuality:
    """Normalized 0-10 level per (component id, attribute)."""

    values: Mapping[Tuple[str, str], float]
    component_ids: Tuple[str, ...]
    attribute_names: Tuple[str, ...]
    _ids: frozenset = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        object.__setattr__(self, "_ids", frozenset(self.component_ids))

    def get(self, component_id: str, attribute: str) -> float:
        if component_id not in self._ids:
            raise KeyError(f"unknown component id {component_id!r}")
        return self.values.get((component_id, attribute), 0.0)

    def row(self, component_id: str) -> Dict[str, float]:
        return {h: self.get(component_id, h) for h in self.attribute_names}


def normalize(catalog: Catalog) -> NormalizedQuality:
    """Map raw values to ``raw / max * 10``; an all-zero attribute maps to 0 everywhere."""
    values: Dict[Tuple[str, str], float] = {}
    for h in catalog.attribute_names:
        top = attribute_max(catalog, h)
        for comp in catalog.components:
            values[(comp.id, h)] = comp.quality(h) / top * SCALE if top > 0 else 0.0
    return NormalizedQuality(values, catalog.ids, catalog.attribute_names)


def _warn_unknown(weights: QualityWeights, nq: NormalizedQuality) -> None:
    missing = sorted(h for h, w in weights.items() if h not in nq.attribute_names and w > 0)
    if missing:
        warnings.warn(
            f"weighted attributes absent from the catalog score 0: {', '.join(missing)}",
            stacklevel=3,
        )


def component_pliability(component_id: str, nq: NormalizedQuality, weights: QualityWeights) -> float:
    validate_weights(weights)
    _warn_unknown(weights, nq)
    score = math.fsum(w * nq.get(component_id, h) for h, w in weights.items())
    # fsum of rounded products can overshoot the scale by an ulp
    return min(max(score, 0.0), SCALE)


def system_pliability(selected: Iterable[str], nq: NormalizedQuality, weights: QualityWeights) -> float:
    """Mean component pliability over a non-empty selection."""
    selected = sorted(set(selected))
    if not selected:
        raise ValidationError("system pliability of an empty selection is undefined")
    return math.fsum(component_pliability(i, nq, weights) for i in selected) / len(selected)


def pliability_table(nq: NormalizedQuality, weights: QualityWeights) -> Dict[str, float]:
    validate_weights(weights)
    _warn_unknown(weights, nq)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        return {i: component_pliability(i, nq, weights) for i in nq.component_ids}
