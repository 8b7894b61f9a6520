"""Tests for fair affirmative action."""

import numpy as np
import pytest

from fairlip.data.models import FairnessInstance, GroupDistribution, MetricSpace, ProbMetricKind
from fairlip.data.probability import check_lipschitz
from fairlip.domain.affirmative import (
    AaPlan,
    evaluate_composed,
    minimal_parity_slack,
    reweight_loss,
    run_affirmative_action,
    solve_em_plus_l,
    solve_parity_constrained,
    two_cluster_instance,
)
from fairlip.domain.fairness import mapping_loss, solve_fairness
from fairlip.domain.lp import LinearProgram
from fairlip.domain.parity import parity_gap
from fairlip.errors import InfeasibleParityError, ValidationError
from tests.helpers import random_instance, random_true_metric, vertex_oracle

TV = ProbMetricKind.TOTAL_VARIATION


def test_single_protected_individual_goes_to_the_only_reference(two_points):
    """Test that |S| = |T| = 1 leaves a single plan whose cost is the distance."""
    plan = solve_em_plus_l(two_points(0.4), [0], [1], eps=0.0)
    assert plan.assignment.tolist() == [[1.0]]
    assert plan.em_cost == pytest.approx(0.4)
    assert plan.protected_mixture.tolist() == [1.0]


def test_identical_protected_individuals_spread_uniformly():
    """Test that S members at distance 0 with no slack all receive U_T."""
    space = MetricSpace.from_points([[0.0, 0.0], [0.0, 0.0], [1.0, 0.0], [0.0, 1.0]])
    plan = solve_em_plus_l(space, [0, 1], [2, 3], eps=0.0)
    assert np.allclose(plan.assignment, 0.5)
    assert plan.em_cost == pytest.approx(1.0)


def test_two_by_two_plan_matches_vertex_oracle():
    """Test the assignment LP against an independently written program."""
    space = MetricSpace.from_points([[0.0, 0.0], [0.3, 0.0], [0.0, 1.0], [1.0, 1.0]])
    eps = 0.1
    d = space.dist

    # Variables m00, m01, m10, m11: protected i sent to reference j.
    program = LinearProgram([d[0, 2] / 2, d[0, 3] / 2, d[1, 2] / 2, d[1, 3] / 2])
    program.add_constraint([1, 1, 0, 0], "=", 1.0)
    program.add_constraint([0, 0, 1, 1], "=", 1.0)
    program.add_constraint([1, 0, -1, 0], "<=", d[0, 1])
    program.add_constraint([-1, 0, 1, 0], "<=", d[0, 1])
    program.add_constraint([0.5, 0, 0.5, 0], "<=", 0.5 + eps)
    program.add_constraint([0.5, 0, 0.5, 0], ">=", 0.5 - eps)
    expected = vertex_oracle(program)

    plan = solve_em_plus_l(space, [0, 1], [2, 3], eps)
    assert plan.em_cost == pytest.approx(expected, abs=1e-9)
    assert abs(plan.protected_mixture[0] - 0.5) <= eps + 1e-9
    assert abs(plan.assignment[0, 0] - plan.assignment[1, 0]) <= d[0, 1] + 1e-9


def test_reweight_loss(rng):
    """Test the reweighted loss and the unaware variant."""
    space = random_true_metric(rng, 4)
    inst = FairnessInstance(space, ("a", "b"), [[0, 1], [1, 0], [0.2, 0.8], [0.6, 0.4]])
    plan = AaPlan(np.array([[1.0, 0.0], [0.5, 0.5]]), 0.0, 0.1, (0, 1), (2, 3))
    assert np.allclose(reweight_loss(plan, inst), [[0.7, 1.8], [1.1, 0.4]])
    assert np.allclose(reweight_loss(plan, inst, reweight=False), [[0.2, 0.8], [0.6, 0.4]])


def test_empty_protected_group_reduces_to_fairness_lp(rng):
    """Test that with no protected individual the pipeline is the plain Fairness LP."""
    inst = random_instance(rng, 5, 3, random_true_metric(rng, 5))
    composed = run_affirmative_action(inst, [], range(5), eps=0.1)
    assert composed.plan.em_cost == 0.0
    plain = solve_fairness(inst, TV)
    assert np.allclose(composed.map.rows, plain.map.rows, atol=1e-8)
    assert mapping_loss(composed.map, inst) == pytest.approx(plain.opt_value, abs=1e-9)
    report = evaluate_composed(composed, inst.space)
    assert report.parity_gap == 0.0
    assert report.ok


def test_random_instances_meet_every_guarantee(rng):
    """Test parity, within-group Lipschitz and the cross bound on random instances."""
    for _ in range(50):
        n = int(rng.integers(3, 8))
        split = int(rng.integers(1, n))
        inst = random_instance(rng, n, int(rng.integers(2, 4)), random_true_metric(rng, n))
        eps = float(rng.random() * 0.3)
        composed = run_affirmative_action(inst, range(split), range(split, n), eps)
        report = evaluate_composed(composed, inst.space)
        assert report.parity_ok
        assert report.within_ok
        assert report.cross_ok
        assert report.ok


def test_unaware_vendor_keeps_guarantees(rng):
    """Test that skipping the reweighting changes utility but not fairness."""
    inst = random_instance(rng, 6, 3, random_true_metric(rng, 6))
    composed = run_affirmative_action(inst, [0, 1], [2, 3, 4, 5], 0.05, reweight=False)
    assert evaluate_composed(composed, inst.space).ok


def test_two_cluster_instance_shape():
    """Test the default layout of the two-cluster instance."""
    inst, s, t = two_cluster_instance()
    assert inst.num_individuals == 20
    assert s == (0, 1)
    assert t == tuple(range(2, 20))
    assert inst.outcomes == ("ad0", "ad1")
    assert inst.space.ids[0] == "s0_0"
    assert inst.space.is_true_metric
    assert inst.loss[0].tolist() == [0.0, 1.0]
    assert inst.loss[-1].tolist() == [1.0, 0.0]


def test_two_cluster_parity_is_restored():
    """Test that the plain optimum separates S from T and affirmative action closes the gap."""
    inst, s, t = two_cluster_instance()
    n = inst.num_individuals
    groups = GroupDistribution.uniform_over(n, s), GroupDistribution.uniform_over(n, t)

    plain = solve_fairness(inst, TV).map
    assert parity_gap(plain, *groups) > 0.5

    composed = run_affirmative_action(inst, s, t, eps=0.05)
    report = evaluate_composed(composed, inst.space)
    assert report.parity_gap <= 0.05 + 1e-6
    assert report.ok


def test_negative_slack_is_infeasible(rng):
    """Test that a negative slack raises with the smallest achievable one."""
    space = random_true_metric(rng, 5)
    with pytest.raises(InfeasibleParityError) as caught:
        solve_em_plus_l(space, [0, 1], [2, 3, 4], eps=-0.1)
    assert caught.value.eps == -0.1
    assert caught.value.minimal_eps == pytest.approx(0.0, abs=1e-9)
    assert minimal_parity_slack(space, [0, 1], [2, 3, 4]) == pytest.approx(0.0, abs=1e-9)


def test_parity_constrained_lp(rng):
    """Test that the direct parity LP meets the slack and keeps within-group constraints."""
    for _ in range(10):
        n = 6
        inst = random_instance(rng, n, 3, random_true_metric(rng, n))
        s, t = [0, 1, 2], [3, 4, 5]
        solution = solve_parity_constrained(inst, s, t, eps=0.05)
        gap = parity_gap(solution.map, GroupDistribution.uniform_over(n, s), GroupDistribution.uniform_over(n, t))
        assert gap <= 0.05 + 1e-6
        for members in (s, t):
            sub = check_lipschitz(solution.map.subset(members), inst.space.subspace(members), ProbMetricKind.TOTAL_VARIATION)
            assert sub.is_lipschitz
        assert solution.opt_value == pytest.approx(mapping_loss(solution.map, inst), abs=1e-7)


def test_group_validation(rng):
    """Test overlapping, incomplete and empty groups."""
    inst = random_instance(rng, 4, 2, random_true_metric(rng, 4))
    with pytest.raises(ValidationError):
        run_affirmative_action(inst, [0, 1], [1, 2, 3], 0.1)
    with pytest.raises(ValidationError):
        run_affirmative_action(inst, [0], [1, 2], 0.1)
    with pytest.raises(ValidationError):
        solve_em_plus_l(inst.space, [0, 1, 2, 3], [], 0.1)
    with pytest.raises(ValidationError):
        solve_parity_constrained(inst, [], [0, 1, 2, 3], 0.1)


def test_single_pair_has_no_cross_violation(opposite_instance):
    """Test that x inheriting the row of y at distance 0.4 gives a cross violation of 0."""
    inst = opposite_instance(0.4)
    composed = run_affirmative_action(inst, [0], [1], eps=0.0)
    assert np.allclose(composed.map.rows[0], composed.map.rows[1])
    report = evaluate_composed(composed, inst.space)
    assert report.cross_violation == 0.0
    assert report.em_cost == pytest.approx(0.4)
    assert report.parity_gap == pytest.approx(0.0, abs=1e-12)
    assert report.ok
