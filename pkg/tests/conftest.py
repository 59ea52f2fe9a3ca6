import json

import pytest

from compsel.catalog import Catalog, Component
from compsel.filtering import SystemSpec
from compsel.pliability import QualityWeights


@pytest.fixture
def abc_catalog():
    """A covers both requirements at cost 3; B and C cover one each at cost 1."""
    return Catalog((
        Component("A", "all-in-one", frozenset({"r1", "r2"}), 3.0, {"reliability": 5.0}),
        Component("B", "first half", frozenset({"r1"}), 1.0, {"reliability": 10.0}),
        Component("C", "second half", frozenset({"r2"}), 1.0, {"reliability": 2.0}),
    ))


@pytest.fixture
def abc_spec():
    return SystemSpec(frozenset({"r1", "r2"}))


@pytest.fixture
def unit_reliability():
    return QualityWeights({"reliability": 1.0})


@pytest.fixture
def write_json(tmp_path):
    def write(name, obj):
        path = tmp_path / name
        path.write_text(json.dumps(obj), encoding="utf-8")
        return path
    return write


_ACCEPTANCE_LINES = []


@pytest.fixture(scope="session")
def acceptance_report():
    """Collects one verdict line per acceptance criterion for the terminal summary."""
    return _ACCEPTANCE_LINES


def pytest_terminal_summary(terminalreporter):
    if _ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in _ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
