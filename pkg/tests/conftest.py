"""Pytest configuration and shared fixtures."""

import json
from pathlib import Path

import numpy as np
import pytest

from fairlip.data.models import FairnessInstance, GroupDistribution, MetricSpace
from fairlip.i18n import init_i18n
from fairlip.settings import Settings


@pytest.fixture(autouse=True)
def isolated_config(tmp_path, monkeypatch):
    """Keep tests away from the user's settings file and environment."""
    monkeypatch.setenv("XDG_CONFIG_HOME", str(tmp_path / "config"))
    monkeypatch.setenv("APPDATA", str(tmp_path / "config"))
    monkeypatch.delenv("FAIRLIP_TOL", raising=False)
    init_i18n(Settings(), "en")


@pytest.fixture
def rng():
    """A seeded random generator."""
    return np.random.default_rng(20121018)


@pytest.fixture
def two_points():
    """Build two-point spaces at a given distance."""
    def build(d: float) -> MetricSpace:
        return MetricSpace(("x", "y"), [[0.0, d], [d, 0.0]]).verify_triangle()
    return build


@pytest.fixture
def opposite_instance(two_points):
    """Two individuals with opposite preferences over two outcomes."""
    def build(d: float) -> FairnessInstance:
        return FairnessInstance(two_points(d), ("a", "b"), [[0.0, 1.0], [1.0, 0.0]])
    return build


@pytest.fixture
def groups_xy():
    """S = point mass on the first individual, T on the second."""
    return GroupDistribution.point_mass(2, 0), GroupDistribution.point_mass(2, 1)


@pytest.fixture
def write_json(tmp_path):
    """Write a document to a temporary JSON file and return its path."""
    def write(name: str, document) -> Path:
        path = tmp_path / name
        path.write_text(json.dumps(document), encoding="utf-8")
        return path
    return write


@pytest.fixture
def three_cities():
    """A small instance document with groups, used by the CLI tests."""
    return {
        "individuals": ["ana", "ben", "cleo"],
        "metric": [[0, 0.2, 0.9], [0.2, 0, 0.8], [0.9, 0.8, 0]],
        "outcomes": ["accept", "reject"],
        "loss": [[0, 1], [0.4, 0.6], [1, 0]],
        "groups": {
            "north": {"members": ["ana", "ben"]},
            "south": {"members": ["cleo"]},
            "none": {"members": []},
            "everyone": {"members": ["ana", "ben", "cleo"]},
        },
    }
