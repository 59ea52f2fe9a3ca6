import itertools
import json
import random

import pytest

from compsel.catalog import Catalog, Component
from compsel.errors import ParseError, ValidationError
from compsel.filtering import (
    SpecConstraint,
    SystemSpec,
    apply_pliability_filter,
    apply_probability_filter,
    apply_spec_filter,
    filter_chain,
    load_spec,
)
from compsel.perfmodel import PerformanceModel, PerformanceRequirement, Regression
from compsel.pliability import QualityWeights, normalize

from instances import random_filter_setup

REQ = PerformanceRequirement("latency", "le", 5.0)


def _spec(*constraints, perf=()):
    return SystemSpec(frozenset({"r1"}), constraints, perf)


@pytest.fixture
def memory_catalog():
    return Catalog((
        Component("A", spec_attrs={"memory": 256.0, "os": "linux"}, raw_quality={"reliability": 8.0}),
        Component("B", spec_attrs={"memory": 1024.0, "os": "windows"}, raw_quality={"reliability": 5.0}),
        Component("C", spec_attrs={"os": "linux"}, raw_quality={"reliability": 10.0}),
    ))


def _prob_model(probs):
    return PerformanceModel((), {"latency": Regression(0.0, (), 1, 0.0, 1.0)},
                            {cid: {REQ.key: p} for cid, p in probs.items()}, (REQ,))


class TestSpecFilter:
    def test_no_constraints(self, memory_catalog):
        assert apply_spec_filter(memory_catalog, _spec()) == {"A", "B", "C"}

    def test_upper_bound(self, memory_catalog):
        assert apply_spec_filter(memory_catalog, _spec(SpecConstraint("memory", "le", 512))) == {"A"}

    def test_missing_attribute_eliminates(self, memory_catalog):
        assert "C" not in apply_spec_filter(memory_catalog, _spec(SpecConstraint("memory", "ge", 0)))

    def test_token_equality(self, memory_catalog):
        assert apply_spec_filter(memory_catalog, _spec(SpecConstraint("os", "eq", "linux"))) == {"A", "C"}

    def test_ordering_against_token_is_violation(self, memory_catalog):
        assert apply_spec_filter(memory_catalog, _spec(SpecConstraint("os", "le", 5))) == frozenset()

    def test_among_restricts(self, memory_catalog):
        assert apply_spec_filter(memory_catalog, _spec(), among={"B"}) == {"B"}


class TestPliabilityFilter:
    def setup_method(self):
        self.cat = Catalog((
            Component("A", raw_quality={"reliability": 8.0, "security": 10.0}),
            Component("B", raw_quality={"reliability": 5.0, "security": 5.0}),
            Component("C", raw_quality={"reliability": 10.0, "security": 2.0}),
        ))
        self.nq = normalize(self.cat)

    def test_floor_is_identity(self):
        w = QualityWeights({"reliability": 0.5, "security": 0.5})
        assert apply_pliability_filter({"A", "B", "C"}, self.nq, w, 0.0) == {"A", "B", "C"}

    def test_ceiling_keeps_only_all_max(self):
        cat = Catalog(self.cat.components + (Component("D", raw_quality={"reliability": 10.0, "security": 10.0}),))
        w = QualityWeights({"reliability": 0.5, "security": 0.5})
        assert apply_pliability_filter(set(cat.ids), normalize(cat), w, 10.0) == {"D"}

    def test_threshold(self):
        w = QualityWeights({"reliability": 1.0})
        # pliabilities A 8.0, B 5.0
        assert apply_pliability_filter({"A", "B"}, self.nq, w, 6.0) == {"A"}


class TestProbabilityFilter:
    def test_floor_is_identity(self):
        assert apply_probability_filter({"A", "B"}, _prob_model({"A": 0.9, "B": 0.2}), [REQ], 0.0) == {"A", "B"}

    def test_no_requirements(self):
        assert apply_probability_filter({"A", "B"}, None, [], 0.7) == {"A", "B"}

    def test_threshold(self):
        assert apply_probability_filter({"A", "B"}, _prob_model({"A": 0.9, "B": 0.2}), [REQ], 0.5) == {"A"}


class TestSpecFile:
    def test_load(self):
        spec = load_spec(json.dumps({
            "format_version": "1",
            "requirements": ["r1", "r2"],
            "constraints": [{"attribute": "memory", "op": "le", "value": 512},
                            {"attribute": "os", "op": "eq", "value": "linux"}],
            "perf_requirements": [{"metric": "latency", "op": "le", "bound": 5}],
            "pliability_threshold": 4,
        }))
        assert spec.requirements == {"r1", "r2"}
        assert spec.constraints[1] == SpecConstraint("os", "eq", "linux")
        assert spec.perf_requirements == (REQ,)
        assert spec.pliability_threshold == 4.0 and spec.probability_threshold == 0.0

    @pytest.mark.parametrize("doc, error", [
        ({"requirements": []}, ValidationError),
        ({"requirements": ["r1", "r1"]}, ValidationError),
        ({"requirements": ["r1"], "pliability_threshold": 11}, ValidationError),
        ({"requirements": ["r1"], "probability_threshold": -0.1}, ValidationError),
        ({"requirements": ["r1"], "perf_requirements": [{"metric": "m", "op": "le", "bound": 1},
                                                         {"metric": "m", "op": "ge", "bound": 0}]}, ValidationError),
        ({"requirements": ["r1"], "constraints": [{"attribute": "m", "op": "lt", "value": 1}]}, ValidationError),
        ({"requirements": ["r1"], "constraints": [{"attribute": "m", "op": "le", "value": "x"}]}, ValidationError),
        ({"requirements": ["r1"], "mystery": 1}, ParseError),
        ({"requirements": "r1"}, ParseError),
        ({"requirements": ["r1"], "format_version": "0"}, ParseError),
    ])
    def test_invalid(self, doc, error):
        with pytest.raises(error):
            load_spec(json.dumps(doc))


# --- laws ---------------------------------------------------------------------


def _stages(catalog, spec, weights, model, nq):
    return {
        "spec": lambda s: apply_spec_filter(catalog, spec, among=s),
        "pliability": lambda s: apply_pliability_filter(s, nq, weights, spec.pliability_threshold),
        "probability": lambda s: apply_probability_filter(s, model, spec.perf_requirements, spec.probability_threshold),
    }


@pytest.mark.parametrize("seed", range(60))
def test_filter_laws(seed):
    rng = random.Random(seed)
    catalog, spec, weights, model = random_filter_setup(rng)
    nq = normalize(catalog)
    everyone = frozenset(catalog.ids)
    stages = _stages(catalog, spec, weights, model, nq)
    for f in stages.values():
        out = f(everyone)
        assert out <= everyone
        assert f(out) == out
    results = set()
    for order in itertools.permutations(stages):
        s = everyone
        for name in order:
            s = stages[name](s)
        results.add(s)
    assert len(results) == 1
    chained, _ = filter_chain(catalog, spec, nq, weights, model)
    assert results == {chained}


@pytest.mark.parametrize("seed", range(30))
def test_thresholds_are_antitone(seed):
    rng = random.Random(seed)
    catalog, spec, weights, model = random_filter_setup(rng)
    nq = normalize(catalog)
    ids = frozenset(catalog.ids)
    lo, hi = sorted(rng.uniform(0, 10) for _ in range(2))
    assert apply_pliability_filter(ids, nq, weights, hi) <= apply_pliability_filter(ids, nq, weights, lo)
    lo, hi = sorted(rng.random() for _ in range(2))
    reqs = spec.perf_requirements
    assert apply_probability_filter(ids, model, reqs, hi) <= apply_probability_filter(ids, model, reqs, lo)
