"""Performance model: least-squares regression of measured system metrics on
aggregated component attributes, plus smoothed per-component probabilities
of meeting each performance requirement."""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field
from typing import Dict, FrozenSet, Iterable, List, Mapping, Optional, Sequence, Tuple

import numpy as np

from compsel._io import FORMAT_VERSION, Source, as_finite, check_version, dumps, read_json, read_text
from compsel.catalog import Catalog
from compsel.errors import ParseError, ValidationError

AGGREGATES = ("sum", "mean", "max")
COMPARATORS = ("le", "ge")
_SYMBOLS = {"le": "<=", "ge": ">="}

# gram matrices worse than this are solved by SVD instead
_MAX_GRAM_CONDITION = 1e12


@dataclass(frozen=True)
class PerformanceRequirement:
    metric: str
    comparator: str
    bound: float

    def __post_init__(self):
        if not isinstance(self.metric, str) or not self.metric:
            raise ValidationError("performance requirement metric must be a non-empty string")
        if self.comparator not in COMPARATORS:
            raise ValidationError(
                f"metric {self.metric!r}: comparator must be 'le' or 'ge', got {self.comparator!r}", self.metric
            )
        object.__setattr__(self, "bound", float(self.bound))

    @property
    def key(self) -> str:
        return f"{self.metric} {_SYMBOLS[self.comparator]} {self.bound!r}"

    def satisfied(self, value: float) -> bool:
        return value <= self.bound if self.comparator == "le" else value >= self.bound

    def violation(self, value: float) -> float:
        """Shortfall past the bound, scaled by ``|bound| + 1``; 0 when satisfied."""
        gap = value - self.bound if self.comparator == "le" else self.bound - value
        return max(gap, 0.0) / (abs(self.bound) + 1.0)

    def to_dict(self) -> dict:
        return {"metric": self.metric, "op": self.comparator, "bound": self.bound}


@dataclass(frozen=True)
class TrainingSample:
    selection: FrozenSet[str]
    measured: Mapping[str, float]
    line: Optional[int] = field(default=None, compare=False)

    def __post_init__(self):
        object.__setattr__(self, "selection", frozenset(self.selection))
        if not self.selection:
            raise ValidationError(self._where() + "sample selection must be non-empty")

    def _where(self) -> str:
        return f"line {self.line}: " if self.line is not None else ""


@dataclass(frozen=True)
class Regression:
    intercept: float
    coefficients: Tuple[float, ...]
    n_samples: int
    rss: float
    r_squared: float

    def to_dict(self) -> dict:
        return {
            "intercept": self.intercept,
            "coefficients": list(self.coefficients),
            "n_samples": self.n_samples,
            "rss": self.rss,
            "r_squared": self.r_squared,
        }


@dataclass(frozen=True)
class PerformanceModel:
    attribute_names: Tuple[str, ...]
    regressions: Mapping[str, Regression]
    cond_prob: Mapping[str, Mapping[str, float]]
    requirements: Tuple[PerformanceRequirement, ...] = ()
    aggregate: str = "sum"

    @property
    def metrics(self) -> Tuple[str, ...]:
        return tuple(self.regressions)

    def to_dict(self) -> dict:
        return {
            "format_version": FORMAT_VERSION,
            "aggregate": self.aggregate,
            "attribute_names": list(self.attribute_names),
            "metrics": {m: r.to_dict() for m, r in self.regressions.items()},
            "requirements": [r.to_dict() for r in self.requirements],
            "cond_prob": {cid: dict(row) for cid, row in self.cond_prob.items()},
        }

    def dumps(self) -> str:
        return dumps(self.to_dict())


def _aggregate(vectors: np.ndarray, how: str) -> np.ndarray:
    if len(vectors) == 0:
        return np.zeros(vectors.shape[1])
    if how == "sum":
        return vectors.sum(axis=0)
    if how == "mean":
        return vectors.mean(axis=0)
    if how == "max":
        return vectors.max(axis=0)
    raise ValueError(f"unknown aggregate {how!r}; expected one of {AGGREGATES}")


def quality_matrix(ids: Sequence[str], catalog: Catalog, attribute_names: Sequence[str]) -> np.ndarray:
    rows = []
    for cid in ids:
        comp = catalog[cid]
        rows.append([comp.quality(h) for h in attribute_names])
    return np.asarray(rows, dtype=float).reshape(len(rows), len(attribute_names))


def _features(selection: Iterable[str], catalog: Catalog, attribute_names: Sequence[str], aggregate: str) -> np.ndarray:
    ids = sorted(set(selection))
    agg = _aggregate(quality_matrix(ids, catalog, attribute_names), aggregate)
    return np.concatenate(([1.0], agg))


def featurize(
    selection: Iterable[str],
    catalog: Catalog,
    attribute_names: Optional[Sequence[str]] = None,
    aggregate: str = "sum",
) -> np.ndarray:
    """Intercept-prefixed vector of per-attribute aggregates over the selection.

    Attributes are ordered by ``attribute_names`` (default: the catalog's).
    """
    selection = set(selection)
    if not selection:
        raise ValidationError("cannot featurize an empty selection")
    if attribute_names is None:
        attribute_names = catalog.attribute_names
    return _features(selection, catalog, attribute_names, aggregate)


def solve_least_squares(X: np.ndarray, y: np.ndarray) -> np.ndarray:
    """Normal-equation OLS with one refinement step; minimum-norm SVD solution
    when ``X`` is rank deficient or the gram matrix is ill-conditioned."""
    p = X.shape[1]
    gram = X.T @ X
    if np.linalg.matrix_rank(X) < p or np.linalg.cond(gram) > _MAX_GRAM_CONDITION:
        beta, *_ = np.linalg.lstsq(X, y, rcond=None)
        return beta
    beta = np.linalg.solve(gram, X.T @ y)
    beta += np.linalg.solve(gram, X.T @ (y - X @ beta))
    return beta


def _r_squared(y: np.ndarray, rss: float) -> float:
    tss = float(((y - y.mean()) ** 2).sum())
    if tss > 0:
        return 1.0 - rss / tss
    return 1.0 if math.isclose(rss, 0.0, abs_tol=1e-18) else 0.0


def fit(
    samples: Sequence[TrainingSample],
    catalog: Catalog,
    requirements: Sequence[PerformanceRequirement] = (),
    aggregate: str = "sum",
) -> PerformanceModel:
    """Fit one regression per measured metric and the per-component
    satisfaction probabilities ``(k + 1) / (n + 2)`` for each requirement."""
    if aggregate not in AGGREGATES:
        raise ValidationError(f"unknown aggregate {aggregate!r}; expected one of {AGGREGATES}")
    for s in samples:
        unknown = sorted(i for i in s.selection if i not in catalog)
        if unknown:
            raise ValidationError(s._where() + f"sample references unknown component {unknown[0]!r}", unknown[0])

    metrics: Dict[str, None] = {}
    for s in samples:
        metrics.update(dict.fromkeys(s.measured))
    for req in requirements:
        if req.metric not in metrics:
            raise ValidationError(f"no samples measure required metric {req.metric!r}", req.metric)

    names = catalog.attribute_names
    regressions: Dict[str, Regression] = {}
    for metric in metrics:
        rows = [s for s in samples if metric in s.measured]
        X = np.vstack([_features(s.selection, catalog, names, aggregate) for s in rows])
        y = np.array([s.measured[metric] for s in rows], dtype=float)
        beta = solve_least_squares(X, y)
        resid = y - X @ beta
        rss = float(resid @ resid)
        regressions[metric] = Regression(
            intercept=float(beta[0]),
            coefficients=tuple(float(b) for b in beta[1:]),
            n_samples=len(rows),
            rss=rss,
            r_squared=float(_r_squared(y, rss)),
        )

    cond_prob: Dict[str, Dict[str, float]] = {}
    for comp in catalog.components:
        row = {}
        for req in requirements:
            hits = [s for s in samples if comp.id in s.selection and req.metric in s.measured]
            k = sum(req.satisfied(s.measured[req.metric]) for s in hits)
            row[req.key] = (k + 1) / (len(hits) + 2)
        cond_prob[comp.id] = row

    return PerformanceModel(names, regressions, cond_prob, tuple(requirements), aggregate)


def predict(
    model: PerformanceModel,
    selection: Iterable[str],
    catalog: Catalog,
    metrics: Optional[Iterable[str]] = None,
) -> Dict[str, float]:
    """Regression estimate of each metric (default: every fitted metric)."""
    selection = set(selection)
    if not selection:
        raise ValidationError("cannot predict performance of an empty selection")
    return _predict(model, selection, catalog, metrics)


def _predict(model: PerformanceModel, selection, catalog: Catalog, metrics=None) -> Dict[str, float]:
    metrics = model.metrics if metrics is None else tuple(metrics)
    for m in metrics:
        if m not in model.regressions:
            raise ValidationError(f"model has no regression for metric {m!r}", m)
    x = _features(selection, catalog, model.attribute_names, model.aggregate)
    out = {}
    for m in metrics:
        reg = model.regressions[m]
        out[m] = float(reg.intercept + np.dot(x[1:], np.asarray(reg.coefficients, dtype=float)))
    return out


def satisfaction_probability(model: PerformanceModel, component_id: str, req: PerformanceRequirement) -> float:
    try:
        row = model.cond_prob[component_id]
    except KeyError:
        raise ValidationError(f"model has no probabilities for component {component_id!r}", component_id) from None
    try:
        return row[req.key]
    except KeyError:
        raise ValidationError(
            f"model was not fitted for requirement {req.key!r}; refit with the current spec", req.metric
        ) from None


# --- file formats -------------------------------------------------------------


def load_samples(source: Source) -> List[TrainingSample]:
    """Read the samples CSV: ``selection,metric1,...`` with ``;``-joined ids.

    Empty metric cells mean "not measured".
    """
    reader = csv.reader(io.StringIO(read_text(source)))
    header = next(reader, None)
    if not header:
        raise ParseError("samples file is empty", line=1)
    header = [h.strip() for h in header]
    if header[0] != "selection":
        raise ParseError(f"first column must be 'selection', got {header[0]!r}", line=1)
    metrics = header[1:]
    if len(set(metrics)) != len(metrics) or any(not m for m in metrics):
        raise ParseError("metric column names must be non-empty and distinct", line=1)
    samples = []
    for row in reader:
        line = reader.line_num
        if not row or all(not cell.strip() for cell in row):
            continue
        if len(row) != len(header):
            raise ParseError(f"expected {len(header)} cells, got {len(row)}", line=line)
        ids = [i.strip() for i in row[0].split(";") if i.strip()]
        if not ids:
            raise ParseError("empty selection", line=line)
        measured = {}
        for metric, cell in zip(metrics, row[1:]):
            cell = cell.strip()
            if not cell:
                continue
            try:
                value = float(cell)
            except ValueError:
                raise ParseError(f"metric {metric!r}: {cell!r} is not a number", line=line) from None
            if not math.isfinite(value):
                raise ParseError(f"metric {metric!r}: value must be finite", line=line)
            measured[metric] = value
        samples.append(TrainingSample(frozenset(ids), measured, line=line))
    if not samples:
        raise ParseError("samples file has no data rows", line=1)
    return samples


def _parse_requirement(raw) -> PerformanceRequirement:
    if not isinstance(raw, dict) or set(raw) - {"metric", "op", "bound"}:
        raise ParseError(f"malformed performance requirement {raw!r}")
    try:
        return PerformanceRequirement(raw["metric"], raw["op"], as_finite(raw["bound"], "bound"))
    except KeyError as exc:
        raise ParseError(f"performance requirement missing {exc.args[0]!r}") from None


def model_from_dict(doc) -> PerformanceModel:
    if not isinstance(doc, dict):
        raise ParseError("model must be a JSON object")
    check_version(doc)
    try:
        names = tuple(doc["attribute_names"])
        regressions = {}
        for metric, r in doc["metrics"].items():
            coefs = tuple(float(c) for c in r["coefficients"])
            if len(coefs) != len(names):
                raise ParseError(f"metric {metric!r}: {len(coefs)} coefficients for {len(names)} attributes")
            regressions[metric] = Regression(
                float(r["intercept"]), coefs, int(r["n_samples"]), float(r["rss"]), float(r["r_squared"])
            )
        cond_prob = {cid: {k: float(p) for k, p in row.items()} for cid, row in doc["cond_prob"].items()}
        requirements = tuple(_parse_requirement(r) for r in doc.get("requirements", []))
        aggregate = doc.get("aggregate", "sum")
    except (KeyError, TypeError, AttributeError, ValueError) as exc:
        if isinstance(exc, ParseError):
            raise
        raise ParseError(f"malformed model file: {exc!r}") from None
    if aggregate not in AGGREGATES:
        raise ParseError(f"unknown aggregate {aggregate!r}")
    return PerformanceModel(names, regressions, cond_prob, requirements, aggregate)


def load_model(source: Source) -> PerformanceModel:
    return model_from_dict(read_json(source))
