"""Component repository: data model, JSON ingestion and validation."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Any, Dict, FrozenSet, Iterable, Mapping, Tuple, Union

from compsel._io import FORMAT_VERSION, Source, as_finite, check_version, dumps, is_number, read_json
from compsel.errors import ParseError, ValidationError

Scalar = Union[float, str]

_CATALOG_KEYS = {"components", "format_version"}
_COMPONENT_KEYS = {"id", "name", "provides", "cost", "quality", "spec"}


@dataclass(frozen=True)
class Component:
    id: str
    name: str = ""
    provides: FrozenSet[str] = frozenset()
    cost: float = 0.0
    raw_quality: Mapping[str, float] = field(default_factory=dict)
    spec_attrs: Mapping[str, Scalar] = field(default_factory=dict)

    def __post_init__(self):
        if not isinstance(self.id, str) or not self.id:
            raise ValidationError(f"component id must be a non-empty string, got {self.id!r}")
        object.__setattr__(self, "provides", frozenset(self.provides))
        if any(not isinstance(r, str) or not r for r in self.provides):
            raise ValidationError(f"component {self.id!r}: requirement ids must be non-empty strings", self.id)
        if not self.cost >= 0:
            raise ValidationError(f"component {self.id!r}: negative cost {self.cost!r}", self.id)
        for name, value in self.raw_quality.items():
            if not value >= 0:
                raise ValidationError(
                    f"component {self.id!r}: negative quality value {name}={value!r}", self.id
                )

    def quality(self, attribute: str) -> float:
        """Raw value of ``attribute``; absent attributes read as 0."""
        return self.raw_quality.get(attribute, 0.0)


@dataclass(frozen=True)
class Catalog:
    """Ordered, id-unique collection of components.

    ``attribute_names`` is derived: quality attribute names in order of
    first appearance across the component list.
    """

    components: Tuple[Component, ...]
    attribute_names: Tuple[str, ...] = field(init=False)

    def __post_init__(self):
        components = tuple(self.components)
        object.__setattr__(self, "components", components)
        index: Dict[str, Component] = {}
        names: Dict[str, None] = {}
        for comp in components:
            if comp.id in index:
                raise ValidationError(f"duplicate component id {comp.id!r}", comp.id)
            index[comp.id] = comp
            names.update(dict.fromkeys(comp.raw_quality))
        object.__setattr__(self, "attribute_names", tuple(names))
        object.__setattr__(self, "_index", index)

    def __len__(self) -> int:
        return len(self.components)

    def __iter__(self):
        return iter(self.components)

    def __contains__(self, component_id: object) -> bool:
        return component_id in self._index

    def __getitem__(self, component_id: str) -> Component:
        try:
            return self._index[component_id]
        except KeyError:
            raise KeyError(f"unknown component id {component_id!r}") from None

    @property
    def ids(self) -> Tuple[str, ...]:
        return tuple(c.id for c in self.components)

    def subset(self, ids: Iterable[str]) -> "Catalog":
        keep = set(ids)
        return Catalog(tuple(c for c in self.components if c.id in keep))

    def to_dict(self) -> Dict[str, Any]:
        return {
            "format_version": FORMAT_VERSION,
            "components": [
                {
                    "id": c.id,
                    "name": c.name,
                    "provides": sorted(c.provides),
                    "cost": c.cost,
                    "quality": dict(c.raw_quality),
                    "spec": dict(c.spec_attrs),
                }
                for c in self.components
            ],
        }

    def dumps(self) -> str:
        return dumps(self.to_dict())


def attribute_max(catalog: Catalog, attribute: str) -> float:
    """Largest raw value of ``attribute`` over the catalog, absences read as 0."""
    if attribute not in catalog.attribute_names:
        raise KeyError(f"unknown quality attribute {attribute!r}")
    return max((c.quality(attribute) for c in catalog.components), default=0.0)


def _parse_component(raw: Any, position: int) -> Component:
    if not isinstance(raw, dict):
        raise ParseError(f"components[{position}] must be an object")
    cid = raw.get("id")
    if not isinstance(cid, str) or not cid:
        raise ParseError(f"components[{position}]: 'id' must be a non-empty string")
    unknown = set(raw) - _COMPONENT_KEYS
    if unknown:
        raise ParseError(f"component {cid!r}: unknown keys {sorted(unknown)}")
    name = raw.get("name", "")
    if not isinstance(name, str):
        raise ParseError(f"component {cid!r}: 'name' must be a string")
    provides = raw.get("provides", [])
    if not isinstance(provides, list) or not all(isinstance(r, str) for r in provides):
        raise ParseError(f"component {cid!r}: 'provides' must be a list of strings")
    cost = as_finite(raw.get("cost", 0), f"component {cid!r} cost")
    quality = raw.get("quality", {})
    if not isinstance(quality, dict):
        raise ParseError(f"component {cid!r}: 'quality' must be an object")
    quality = {k: as_finite(v, f"component {cid!r} quality {k!r}") for k, v in quality.items()}
    spec = raw.get("spec", {})
    if not isinstance(spec, dict):
        raise ParseError(f"component {cid!r}: 'spec' must be an object")
    spec_attrs: Dict[str, Scalar] = {}
    for k, v in spec.items():
        if isinstance(v, str):
            spec_attrs[k] = v
        elif is_number(v):
            spec_attrs[k] = as_finite(v, f"component {cid!r} spec {k!r}")
        else:
            raise ParseError(f"component {cid!r}: spec value {k!r} must be a number or string")
    return Component(cid, name, frozenset(provides), cost, quality, spec_attrs)


def load_catalog(source: Source) -> Catalog:
    """Parse and validate a catalog JSON document.

    ``source`` may be bytes, text, or an open file. Raises :class:`ParseError`
    for malformed input and :class:`ValidationError` (carrying the component
    id) for invariant violations.
    """
    doc = read_json(source)
    if not isinstance(doc, dict):
        raise ParseError("catalog must be a JSON object")
    unknown = set(doc) - _CATALOG_KEYS
    if unknown:
        raise ParseError(f"unknown top-level keys {sorted(unknown)}")
    check_version(doc)
    components = doc.get("components")
    if not isinstance(components, list):
        raise ParseError("'components' must be a list")
    return Catalog(tuple(_parse_component(raw, i) for i, raw in enumerate(components)))
