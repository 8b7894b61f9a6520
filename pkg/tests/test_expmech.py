"""Tests for the exponential mechanism and the metric-space helpers around it."""

import math

import numpy as np
import pytest

from fairlip.data.models import MetricSpace, ProbMetricKind, StochasticMap
from fairlip.data.probability import pairwise_distances
from fairlip.domain.expmech import (
    ball_profile,
    covering_radius,
    exp_mechanism,
    expected_loss,
    extend_from_subset,
    lattice_space,
    lipschitz_constant,
    mapping_distance_loss,
    separation_eps,
    well_separated_subset,
)
from fairlip.errors import ValidationError
from tests.helpers import random_true_metric


def test_single_point():
    """Test that a lone individual is mapped to itself with probability one."""
    space = MetricSpace(("only",), [[0.0]])
    mechanism = exp_mechanism(space)
    assert mechanism.map.rows.tolist() == [[1.0]]
    assert expected_loss(mechanism, space) == 0.0
    assert lipschitz_constant(mechanism, space) == 0.0
    assert separation_eps(space) == math.inf


def test_two_points_at_log_two(two_points):
    """Test the rows (2/3, 1/3) and the expected loss ln 2 / 3."""
    space = two_points(math.log(2))
    mechanism = exp_mechanism(space)
    assert np.allclose(mechanism.map.rows, [[2 / 3, 1 / 3], [1 / 3, 2 / 3]], atol=1e-12)
    assert np.allclose(mechanism.normalizers, 1.5)
    assert expected_loss(mechanism, space) == pytest.approx(math.log(2) / 3, abs=1e-12)


def test_rows_are_normalised(rng):
    """Test that every row sums to one, including on spread-out spaces."""
    for spread in (0.5, 5.0, 500.0):
        mechanism = exp_mechanism(random_true_metric(rng, 12, spread), scale=2.0)
        assert np.allclose(mechanism.map.rows.sum(axis=1), 1.0, atol=1e-12)
        assert np.all(mechanism.map.rows >= 0)


def test_lipschitz_constant_bounds(rng):
    """Test D_inf <= 2 d at scale 1 and D_inf <= d at scale 1/2 on true metrics."""
    for _ in range(100):
        space = random_true_metric(rng, int(rng.integers(2, 10)), spread=3.0)
        assert lipschitz_constant(exp_mechanism(space, 1.0), space) <= 2.0 + 1e-9
        assert lipschitz_constant(exp_mechanism(space, 0.5), space) <= 1.0 + 1e-9


def test_lipschitz_constant_at_distance_zero():
    """Test coinciding individuals: equal rows give 0, different rows give inf."""
    space = MetricSpace(("a", "b"), [[0.0, 0.0], [0.0, 0.0]])
    assert lipschitz_constant(StochasticMap([[0.5, 0.5], [0.5, 0.5]]), space) == 0.0
    assert lipschitz_constant(StochasticMap([[0.6, 0.4], [0.5, 0.5]]), space) == math.inf


def test_larger_scale_never_increases_loss(rng):
    """Test that concentrating the mechanism lowers its expected distance."""
    space = random_true_metric(rng, 10, spread=4.0)
    losses = [expected_loss(exp_mechanism(space, scale), space) for scale in (0.25, 0.5, 1.0, 2.0, 4.0)]
    assert all(b <= a + 1e-12 for a, b in zip(losses, losses[1:]))


def test_line_matches_direct_sums():
    """Test 64 points on a line against sums written out term by term."""
    space = lattice_space(64, 1)
    loss = expected_loss(exp_mechanism(space), space)

    total = 0.0
    for x in range(64):
        weights = [math.exp(-abs(x - y)) for y in range(64)]
        total += sum(w * abs(x - y) for y, w in enumerate(weights)) / sum(weights)
    assert loss == pytest.approx(total / 64, abs=1e-12)
    assert loss == pytest.approx(0.830469749569183, abs=1e-9)


def test_ball_profile_on_a_grid():
    """Test average ball sizes on an 8 x 8 grid against counting by hand."""
    space = lattice_space(8, 2)
    points = [(i, j) for i in range(8) for j in range(8)]

    def count(radius: float) -> float:
        inside = sum(
            1
            for a in points
            for b in points
            if math.dist(a, b) <= radius + 1e-9
        )
        return inside / len(points)

    profile = ball_profile(space, [0.0, 1.0, 2.0])
    assert profile.separation_eps == pytest.approx(1.0)
    assert profile.avg_counts[0] == pytest.approx(1.0)
    for radius, avg in zip(profile.radii, profile.avg_counts):
        assert avg == pytest.approx(count(radius))
    assert profile.doubling_exponents[1] == pytest.approx(math.log2(count(2.0) / count(1.0)))
    assert profile.estimated_dimension == pytest.approx(profile.doubling_exponents.max())


def test_ball_profile_rejects_bad_radii():
    """Test negative and unsorted radii."""
    space = lattice_space(3, 1)
    with pytest.raises(ValidationError):
        ball_profile(space, [-1.0])
    with pytest.raises(ValidationError):
        ball_profile(space, [2.0, 1.0])


LATTICE_LOSSES = {
    (1, 4): 0.52261505407711,
    (1, 8): 0.687017453425423,
    (1, 16): 0.769124326342,
    (2, 4): 1.09522314913176,
    (2, 8): 1.48900677829471,
    (2, 16): 1.69139721128455,
    (3, 4): 1.63594593148926,
    (3, 8): 2.27602682647416,
    (3, 16): 2.61218593047981,
}


@pytest.mark.parametrize("dim", [1, 2, 3])
def test_lattice_losses_stay_bounded(dim):
    """Test recorded losses on unit lattices and that doubling the side adds less each time."""
    losses = []
    for side in (4, 8, 16):
        space = lattice_space(side, dim)
        loss = expected_loss(exp_mechanism(space), space)
        assert loss == pytest.approx(LATTICE_LOSSES[dim, side], abs=1e-9)
        losses.append(loss)
    first, second = losses[1] - losses[0], losses[2] - losses[1]
    assert 0.0 < second <= 0.6 * first


def test_doubling_exponent_grows_with_dimension():
    """Test that ball doubling on 8-point-per-side grids rises from dimension 1 to 3."""
    exponents = [ball_profile(lattice_space(8, dim), [1.0]).doubling_exponents[0] for dim in (1, 2, 3)]
    assert exponents[0] < exponents[1] < exponents[2]


def test_extension_from_even_sublattice():
    """Test that nearest-neighbour extension loses at most twice the covering radius."""
    space = lattice_space(8, 2)
    subset = [i for i, name in enumerate(space.ids) if all(int(c) % 2 == 0 for c in name.split(","))]
    assert len(subset) == 16
    radius = covering_radius(space, subset)
    assert radius == pytest.approx(math.sqrt(2))

    inner = exp_mechanism(space.subspace(subset), scale=0.5).map
    extended = extend_from_subset(space, subset, inner)
    assert np.allclose(extended.rows[subset], inner.rows)
    divergence = pairwise_distances(extended, ProbMetricKind.RELATIVE_LINF)
    assert np.all(divergence <= space.dist + 2 * radius + 1e-9)


def test_extension_breaks_ties_by_lowest_index():
    """Test that a point equidistant from two members takes the lower-indexed one."""
    space = lattice_space(3, 1)
    inner = StochasticMap([[0.0, 1.0], [1.0, 0.0]])
    extended = extend_from_subset(space, [2, 0], inner)
    assert extended.rows.tolist() == [[1.0, 0.0], [1.0, 0.0], [0.0, 1.0]]
    with pytest.raises(ValidationError):
        extend_from_subset(space, [], StochasticMap([[1.0]]))
    with pytest.raises(ValidationError):
        extend_from_subset(space, [0, 2], StochasticMap([[1.0]]))


def test_well_separated_subset(rng):
    """Test the greedy net on a line and its two properties on random spaces."""
    line = lattice_space(4, 1)
    assert well_separated_subset(line, 1.0) == (0, 2)
    assert covering_radius(line, (0, 2)) == pytest.approx(1.0)

    for _ in range(20):
        space = random_true_metric(rng, 15, spread=2.0)
        eps = float(rng.random())
        net = well_separated_subset(space, eps)
        for i in net:
            for j in net:
                assert i == j or space.dist[i, j] > eps
        assert covering_radius(space, net) <= eps


def test_mapping_distance_loss_alignment(two_points):
    """Test that the loss needs a map whose outcomes are the individuals."""
    with pytest.raises(ValidationError):
        mapping_distance_loss(StochasticMap([[1.0, 0.0, 0.0]] * 2), two_points(1.0))
    assert mapping_distance_loss(StochasticMap([[0.0, 1.0], [0.0, 1.0]]), two_points(2.0)) == pytest.approx(1.0)


def test_invalid_parameters():
    """Test scale and lattice validation."""
    space = lattice_space(2, 1)
    for scale in (0.0, -1.0, math.inf):
        with pytest.raises(ValidationError):
            exp_mechanism(space, scale)
    with pytest.raises(ValidationError):
        lattice_space(0, 2)
    with pytest.raises(ValidationError):
        lattice_space(3, 1, spacing=0.0)


def test_extension_on_a_line():
    """Test the extension from the even points of a line with covering radius 1."""
    space = lattice_space(16, 1)
    subset = list(range(0, 16, 2))
    assert covering_radius(space, subset) == pytest.approx(1.0)
    extended = extend_from_subset(space, subset, exp_mechanism(space.subspace(subset), scale=0.5).map)
    divergence = pairwise_distances(extended, ProbMetricKind.RELATIVE_LINF)
    assert np.all(divergence <= space.dist + 2.0 + 1e-9)
