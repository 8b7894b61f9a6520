"""Tests for the domain types."""

import numpy as np
import pytest

from fairlip.data.models import (
    FairnessInstance,
    GroupDistribution,
    MetricSpace,
    OutcomeDistribution,
    StochasticMap,
)
from fairlip.errors import ValidationError


def test_metric_space_symmetrises_and_freezes():
    """Test that the distance matrix is stored read-only and exactly symmetric."""
    space = MetricSpace(("a", "b"), [[0, 0.5], [0.5 + 1e-12, 0]])
    assert space.dist[0, 1] == space.dist[1, 0]
    with pytest.raises(ValueError):
        space.dist[0, 1] = 2.0


@pytest.mark.parametrize("dist", [
    [[0, 1], [2, 0]],
    [[0, -1], [-1, 0]],
    [[1, 1], [1, 0]],
    [[0, float("nan")], [float("nan"), 0]],
    [[0, 1, 2], [1, 0, 1]],
])
def test_metric_space_rejects_invalid_matrices(dist):
    """Test that asymmetric, negative, non-zero-diagonal or misshapen matrices fail."""
    with pytest.raises(ValidationError):
        MetricSpace(("a", "b"), dist)


def test_metric_space_rejects_duplicate_ids():
    """Test that individual identifiers must be unique."""
    with pytest.raises(ValidationError):
        MetricSpace(("a", "a"), [[0, 1], [1, 0]])


def test_from_points_is_a_true_metric():
    """Test that Euclidean spaces are flagged as true metrics."""
    space = MetricSpace.from_points([[0, 0], [3, 4]])
    assert space.is_true_metric
    assert space.dist[0, 1] == pytest.approx(5.0)
    assert space.ids == ("0", "1")


def test_verify_triangle():
    """Test that the triangle check flags semimetrics and accepts metrics."""
    broken = MetricSpace(("a", "b", "c"), [[0, 1, 5], [1, 0, 1], [5, 1, 0]])
    assert broken.triangle_violation() == pytest.approx(3.0)
    assert not broken.verify_triangle().is_true_metric

    fine = MetricSpace(("a", "b", "c"), [[0, 1, 2], [1, 0, 1], [2, 1, 0]])
    assert fine.verify_triangle().is_true_metric
    assert not fine.is_true_metric


def test_subspace_and_scaled():
    """Test restriction to a subset of individuals and scaling."""
    space = MetricSpace.from_points([[0.0], [1.0], [3.0]], ["a", "b", "c"])
    sub = space.subspace([2, 0])
    assert sub.ids == ("c", "a")
    assert sub.dist[0, 1] == pytest.approx(3.0)
    assert sub.is_true_metric
    assert space.scaled(2.0).max_distance == pytest.approx(6.0)
    with pytest.raises(ValidationError):
        space.scaled(-1.0)


def test_index_of_unknown_individual():
    """Test that looking up an unknown individual raises a validation error."""
    space = MetricSpace.from_points([[0.0], [1.0]], ["a", "b"])
    assert space.index_of("b") == 1
    with pytest.raises(ValidationError):
        space.index_of("z")


def test_outcome_distribution():
    """Test construction helpers and validation of outcome distributions."""
    assert OutcomeDistribution.uniform(4).probs.tolist() == [0.25] * 4
    assert OutcomeDistribution.point_mass(3, 1).mass([1, 2]) == 1.0
    with pytest.raises(ValidationError):
        OutcomeDistribution([0.5, 0.6])
    with pytest.raises(ValidationError):
        OutcomeDistribution([1.5, -0.5])


def test_stochastic_map_from_rows_renormalises():
    """Test that nearly stochastic rows are cleaned up within tolerance."""
    m = StochasticMap.from_rows([[0.5 + 1e-10, 0.5], [-1e-11, 1.0]])
    assert np.allclose(m.rows.sum(axis=1), 1.0, atol=1e-15)
    assert m.rows[1, 0] == 0.0
    with pytest.raises(ValidationError):
        StochasticMap.from_rows([[0.5, 0.4]])
    with pytest.raises(ValidationError):
        StochasticMap([[0.5, 0.4]])


def test_stochastic_map_sample_follows_rows(rng):
    """Test that sampling an individual draws outcomes with its row's probabilities."""
    m = StochasticMap([[0.2, 0.8], [1.0, 0.0]])
    draws = [m.sample(0, rng) for _ in range(4000)]
    assert abs(np.mean(draws) - 0.8) < 0.03
    assert {m.sample(1, rng) for _ in range(50)} == {0}


def test_constant_map_and_subset():
    """Test the constant map and row selection."""
    m = StochasticMap.constant(3, OutcomeDistribution([0.3, 0.7]))
    assert m.rows.shape == (3, 2)
    assert m.subset([2]).rows.tolist() == [[0.3, 0.7]]
    assert m.row(1).probs.tolist() == [0.3, 0.7]


def test_group_distribution_constructors():
    """Test uniform, subset, point-mass and weight-based groups."""
    assert GroupDistribution.uniform_over(4, [1, 3]).weights.tolist() == [0, 0.5, 0, 0.5]
    assert GroupDistribution.point_mass(3, 2).support == (2,)
    assert GroupDistribution.from_weights([1, 3]).weights.tolist() == [0.25, 0.75]
    with pytest.raises(ValidationError):
        GroupDistribution.uniform_over(3, [])
    with pytest.raises(ValidationError):
        GroupDistribution.from_weights([0, 0])


def test_group_restricted():
    """Test renormalised restriction, and the uniform fallback for zero mass."""
    g = GroupDistribution([0.5, 0.25, 0.25])
    assert g.restricted([1, 2]).weights.tolist() == [0.5, 0.5]
    assert GroupDistribution.point_mass(3, 0).restricted([1, 2]).weights.tolist() == [0.5, 0.5]
    uniform = GroupDistribution.uniform(3)
    assert uniform.restricted([0, 1, 2]).weights.tolist() == uniform.weights.tolist()


def test_fairness_instance_defaults_and_validation():
    """Test the default uniform base and shape validation of the loss."""
    space = MetricSpace.from_points([[0.0], [1.0]])
    inst = FairnessInstance(space, ("a", "b", "c"), np.zeros((2, 3)))
    assert inst.base.weights.tolist() == [0.5, 0.5]
    assert inst.num_outcomes == 3
    with pytest.raises(ValidationError):
        FairnessInstance(space, ("a",), np.zeros((2, 3)))
    with pytest.raises(ValidationError):
        FairnessInstance(space, ("a", "a"), np.zeros((2, 2)))
    with pytest.raises(ValidationError):
        FairnessInstance(space, ("a", "b"), [[0, float("inf")], [0, 0]])


def test_fairness_instance_restrict():
    """Test that restricting an instance keeps losses and renormalises the base."""
    space = MetricSpace.from_points([[0.0], [1.0], [2.0]])
    inst = FairnessInstance(space, ("a", "b"), [[0, 1], [2, 3], [4, 5]], GroupDistribution([0.5, 0.25, 0.25]))
    sub = inst.restrict([1, 2])
    assert sub.loss.tolist() == [[2, 3], [4, 5]]
    assert sub.base.weights.tolist() == [0.5, 0.5]
    assert sub.restrict([0], loss=[[9, 9]]).loss.tolist() == [[9, 9]]
