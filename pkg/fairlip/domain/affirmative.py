"""Fair affirmative action.

Statistical parity between a protected group S and the rest T is enforced by
first assigning every member of S a distribution over T (a restricted
Earthmover problem that stays Lipschitz inside S), then solving the Fairness
LP on T alone with a loss that accounts for the S-members it now represents,
and finally letting each x in S inherit the mixture of its assigned rows.

Groups are uniform over their members throughout.

"""

import logging
from collections.abc import Sequence
from dataclasses import dataclass

import numpy as np

from fairlip.data.models import (
    LIPSCHITZ_TOL,
    FairnessInstance,
    GroupDistribution,
    MetricSpace,
    ProbMetricKind,
    StochasticMap,
)
from fairlip.data.probability import check_lipschitz, pairwise_distances
from fairlip.domain.constraints import (
    add_lipschitz_constraints,
    add_simplex_constraints,
    add_tv_constraint,
    add_tv_parts,
)
from fairlip.domain.fairness import (
    SOLUTION_TOL,
    FairSolution,
    mapping_loss,
    solve_fairness,
)
from fairlip.domain.lp import PivotRule, ProgramBuilder, Relation, solve
from fairlip.domain.parity import parity_gap
from fairlip.errors import InfeasibleParityError, SolverError, ValidationError

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class AaPlan:
    """Assignment of each protected individual to a distribution over T.

    `assignment[i, j]` is mu_x(y) for x = protected[i] and y = reference[j].

    """
    assignment: np.ndarray
    em_cost: float
    eps: float
    protected: tuple[int, ...]
    reference: tuple[int, ...]
    kind: ProbMetricKind = ProbMetricKind.TOTAL_VARIATION

    @property
    def protected_mixture(self) -> np.ndarray:
        """mu_S as a distribution over T (zero vector when S is empty)."""
        if not self.protected:
            return np.zeros(len(self.reference))
        return self.assignment.mean(axis=0)


@dataclass(frozen=True)
class ComposedMap:
    """The final mapping over all individuals and the T-only solution it extends."""
    map: StochasticMap
    inner: StochasticMap
    plan: AaPlan
    kind: ProbMetricKind


@dataclass(frozen=True)
class AaReport:
    """Guarantees of a composed map, recomputed from its rows."""
    parity_gap: float
    within_s_violation: float
    within_t_violation: float
    cross_violation: float
    em_cost: float
    eps: float
    true_metric: bool
    tol: float

    @property
    def parity_ok(self) -> bool:
        return self.parity_gap <= self.eps + self.tol

    @property
    def within_ok(self) -> bool:
        return max(self.within_s_violation, self.within_t_violation) <= self.tol

    @property
    def cross_ok(self) -> bool:
        return self.cross_violation <= self.em_cost + self.tol

    @property
    def ok(self) -> bool:
        # The average cross-group bound relies on the triangle inequality.
        return self.parity_ok and self.within_ok and (self.cross_ok or not self.true_metric)


def _check_partition(n: int, s: Sequence[int], t: Sequence[int]) -> tuple[tuple[int, ...], tuple[int, ...]]:
    s_idx, t_idx = tuple(int(i) for i in s), tuple(int(i) for i in t)
    if not t_idx:
        raise ValidationError("the reference group T must not be empty")
    if len(set(s_idx)) != len(s_idx) or len(set(t_idx)) != len(t_idx):
        raise ValidationError("group members must be listed once")
    if set(s_idx) & set(t_idx):
        raise ValidationError("groups S and T must be disjoint")
    if any(i < 0 or i >= n for i in s_idx + t_idx):
        raise ValidationError("group member out of range")
    return s_idx, t_idx


def _plan_program(
    space: MetricSpace,
    s: tuple[int, ...],
    t: tuple[int, ...],
    kind: ProbMetricKind,
) -> tuple[ProgramBuilder, list[list[int]]]:
    """Variables mu_x(y) with transport costs, simplex rows and within-S constraints."""
    builder = ProgramBuilder()
    costs = space.dist[np.ix_(s, t)] / len(s)
    flat = builder.add_variables(len(s) * len(t), cost=costs.ravel(), name="mu")
    rows = [flat[i * len(t):(i + 1) * len(t)] for i in range(len(s))]
    add_simplex_constraints(builder, rows)
    add_lipschitz_constraints(builder, rows, space.dist[np.ix_(s, s)], kind)
    return builder, rows


def _parity_differences(rows: list[list[int]], t_size: int):
    """mu_S(y) - U_T(y) for every y in T, as (terms, constant) pairs."""
    weight = 1.0 / len(rows)
    return [
        ({row[j]: weight for row in rows}, -1.0 / t_size)
        for j in range(t_size)
    ]


def minimal_parity_slack(
    space: MetricSpace,
    s: Sequence[int],
    t: Sequence[int],
    kind: ProbMetricKind = ProbMetricKind.TOTAL_VARIATION,
    pivot_rule: PivotRule = PivotRule.DANTZIG,
) -> float:
    """Smallest D_tv(mu_S, U_T) reachable under the within-S constraints."""
    s_idx, t_idx = _check_partition(len(space), s, t)
    if not s_idx:
        return 0.0
    builder, rows = _plan_program(space, s_idx, t_idx, kind)
    parts = add_tv_parts(builder, _parity_differences(rows, len(t_idx)))
    program = builder.build()
    # Only the slack counts here.
    program.objective[:] = 0.0
    program.objective[parts] = 0.5
    solution = solve(program, pivot_rule)
    if not solution.is_optimal:
        raise SolverError(f"parity slack LP reported {solution.status.value}")
    return max(solution.objective_value, 0.0)


def solve_em_plus_l(
    space: MetricSpace,
    s: Sequence[int],
    t: Sequence[int],
    eps: float,
    kind: ProbMetricKind = ProbMetricKind.TOTAL_VARIATION,
    pivot_rule: PivotRule = PivotRule.DANTZIG,
) -> AaPlan:
    """Cheapest Lipschitz assignment of S onto T whose mixture is eps-close to U_T.

    Minimises E_{x in S} E_{y ~ mu_x} d(x, y) subject to D(mu_x, mu_x') <=
    d(x, x') inside S and D_tv(mu_S, U_T) <= eps. Within-S constraints under
    the relative l-infinity metric are supported but the average-violation
    guarantee is only known for total variation.

    Raises:
        ValidationError: if the groups overlap or T is empty.
        InfeasibleParityError: if no assignment meets the slack.

    """
    s_idx, t_idx = _check_partition(len(space), s, t)
    if not s_idx:
        return AaPlan(np.zeros((0, len(t_idx))), 0.0, eps, s_idx, t_idx, kind)

    builder, rows = _plan_program(space, s_idx, t_idx, kind)
    add_tv_constraint(builder, _parity_differences(rows, len(t_idx)), eps)
    log.debug(
        f"EM+L program: {len(s_idx)} protected, {len(t_idx)} reference, "
        f"{builder.num_variables} variables"
    )

    solution = solve(builder.build(), pivot_rule)
    if not solution.is_optimal:
        minimal = minimal_parity_slack(space, s_idx, t_idx, kind, pivot_rule)
        log.warning(f"Parity slack {eps:g} infeasible, minimum is {minimal:g}")
        raise InfeasibleParityError(eps, minimal)

    flat = [j for row in rows for j in row]
    assignment = StochasticMap.from_rows(
        solution.values[flat].reshape(len(s_idx), len(t_idx)), tol=SOLUTION_TOL
    ).rows
    cost = float((assignment * space.dist[np.ix_(s_idx, t_idx)]).sum() / len(s_idx))
    return AaPlan(assignment, cost, eps, s_idx, t_idx, kind)


def reweight_loss(plan: AaPlan, inst: FairnessInstance, reweight: bool = True) -> np.ndarray:
    """L'(y, a) = sum_{x in S} mu_x(y) L(x, a) + L(y, a) for y in T.

    With reweight=False the vendor is left unaware of S and L' = L on T.

    """
    own = inst.loss[list(plan.reference)]
    if not reweight or not plan.protected:
        return own.copy()
    return plan.assignment.T @ inst.loss[list(plan.protected)] + own


def compose(plan: AaPlan, inner: StochasticMap, n: int) -> StochasticMap:
    """M(y) = nu_y on T and M(x) = E_{y ~ mu_x} nu_y on S."""
    rows = np.zeros((n, inner.num_outcomes))
    rows[list(plan.reference)] = inner.rows
    if plan.protected:
        rows[list(plan.protected)] = plan.assignment @ inner.rows
    return StochasticMap.from_rows(rows)


def run_affirmative_action(
    inst: FairnessInstance,
    s: Sequence[int],
    t: Sequence[int],
    eps: float,
    kind: ProbMetricKind = ProbMetricKind.TOTAL_VARIATION,
    reweight: bool = True,
    pivot_rule: PivotRule = PivotRule.DANTZIG,
) -> ComposedMap:
    """Run the whole pipeline on an instance whose individuals are S and T.

    Raises:
        ValidationError: if S and T do not partition the individuals.
        InfeasibleParityError: propagated from the assignment stage.

    """
    n = inst.num_individuals
    s_idx, t_idx = _check_partition(n, s, t)
    if len(s_idx) + len(t_idx) != n:
        raise ValidationError("S and T must together cover every individual")

    plan = solve_em_plus_l(inst.space, s_idx, t_idx, eps, kind, pivot_rule)
    loss = reweight_loss(plan, inst, reweight)
    inner = solve_fairness(inst.restrict(t_idx, loss=loss), kind, pivot_rule).map
    log.info(f"Affirmative action: EM+L cost {plan.em_cost:.6g}, {len(s_idx)} protected")
    return ComposedMap(compose(plan, inner, n), inner, plan, kind)


def evaluate_composed(
    composed: ComposedMap,
    space: MetricSpace,
    tol: float = LIPSCHITZ_TOL,
) -> AaReport:
    """Recompute parity, within-group Lipschitz and the average cross violation.

    The cross quantity is E_{x in S} max_{y in T} max(0, D_tv(M(x), M(y)) - d(x, y)),
    which never exceeds the EM+L cost on a true metric.

    """
    m = composed.map
    plan = composed.plan
    s_idx, t_idx = list(plan.protected), list(plan.reference)
    n = len(space)

    if s_idx:
        gap = parity_gap(
            m,
            GroupDistribution.uniform_over(n, s_idx),
            GroupDistribution.uniform_over(n, t_idx),
        )
        within_s = check_lipschitz(m.subset(s_idx), space.subspace(s_idx), composed.kind).max_violation
        tv = pairwise_distances(m, ProbMetricKind.TOTAL_VARIATION)
        excess = np.maximum(tv[np.ix_(s_idx, t_idx)] - space.dist[np.ix_(s_idx, t_idx)], 0.0)
        cross = float(excess.max(axis=1).mean())
    else:
        gap, within_s, cross = 0.0, 0.0, 0.0
    within_t = check_lipschitz(m.subset(t_idx), space.subspace(t_idx), composed.kind).max_violation

    return AaReport(
        parity_gap=gap,
        within_s_violation=within_s,
        within_t_violation=within_t,
        cross_violation=cross,
        em_cost=plan.em_cost,
        eps=plan.eps,
        true_metric=space.is_true_metric,
        tol=tol,
    )


def solve_parity_constrained(
    inst: FairnessInstance,
    s: Sequence[int],
    t: Sequence[int],
    eps: float,
    kind: ProbMetricKind = ProbMetricKind.TOTAL_VARIATION,
    pivot_rule: PivotRule = PivotRule.DANTZIG,
) -> FairSolution:
    """Fairness LP with parity D_tv(mu_S, mu_T) <= eps and no S x T constraints.

    Every other pair keeps its Lipschitz constraint. The constant maps stay
    feasible, so the program always has an optimum for eps >= 0.

    """
    n, k = inst.num_individuals, inst.num_outcomes
    s_idx, t_idx = _check_partition(n, s, t)
    if not s_idx:
        raise ValidationError("the protected group S must not be empty")

    builder = ProgramBuilder()
    costs = inst.base.weights[:, None] * inst.loss
    flat = builder.add_variables(n * k, cost=costs.ravel(), name="mu")
    rows = [flat[x * k:(x + 1) * k] for x in range(n)]
    add_simplex_constraints(builder, rows)

    cross = {(i, j) for i in s_idx for j in t_idx} | {(j, i) for i in s_idx for j in t_idx}
    pairs = [(i, j) for i in range(n) for j in range(i + 1, n) if (i, j) not in cross]
    add_lipschitz_constraints(builder, rows, inst.space.dist, kind, pairs)

    differences = [
        (
            {**{rows[x][a]: 1.0 / len(s_idx) for x in s_idx},
             **{rows[y][a]: -1.0 / len(t_idx) for y in t_idx}},
            0.0,
        )
        for a in range(k)
    ]
    add_tv_constraint(builder, differences, eps)

    solution = solve(builder.build(), pivot_rule)
    if not solution.is_optimal:
        raise SolverError(f"parity-constrained LP reported {solution.status.value}")
    m = StochasticMap.from_rows(solution.values[: n * k].reshape(n, k), tol=SOLUTION_TOL)
    return FairSolution(m, mapping_loss(m, inst), kind)


def two_cluster_instance(
    protected_near: int = 2,
    protected_far: int = 0,
    reference_near: int = 2,
    reference_far: int = 16,
    within: float = 0.05,
    across: float = 1.0,
) -> tuple[FairnessInstance, tuple[int, ...], tuple[int, ...]]:
    """Two tight clusters far apart, with S concentrated in the smaller one.

    Individuals of cluster 0 prefer outcome "ad0" and those of cluster 1
    "ad1" (loss 0 for the preferred outcome, 1 otherwise). Returns the
    instance with S listed first, then the indices of S and of T.

    """
    if within < 0 or across < 0:
        raise ValidationError("distances must be nonnegative")
    layout = [
        ("s", 0, protected_near),
        ("s", 1, protected_far),
        ("t", 0, reference_near),
        ("t", 1, reference_far),
    ]
    ids: list[str] = []
    clusters: list[int] = []
    for group, cluster, count in layout:
        for i in range(count):
            ids.append(f"{group}{cluster}_{i}")
            clusters.append(cluster)

    labels = np.array(clusters)
    same = labels[:, None] == labels[None, :]
    dist = np.where(same, within, across)
    np.fill_diagonal(dist, 0.0)
    loss = np.column_stack([labels == 1, labels == 0]).astype(float)

    inst = FairnessInstance(
        space=MetricSpace(tuple(ids), dist).verify_triangle(),
        outcomes=("ad0", "ad1"),
        loss=loss,
    )
    n_protected = protected_near + protected_far
    return inst, tuple(range(n_protected)), tuple(range(n_protected, len(ids)))
