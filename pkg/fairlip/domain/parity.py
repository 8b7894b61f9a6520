"""Statistical parity, bias of Lipschitz mappings and Earthmover distances.

The bias between two groups is the largest parity gap any Lipschitz mapping
into two outcomes can produce. Under the total variation metric it is bounded
by the Earthmover distance between the groups, with equality when the metric
is a true metric and no distance exceeds 1.

"""

import logging
from collections.abc import Iterable
from dataclasses import dataclass
from enum import Enum

import numpy as np

from fairlip.data.models import (
    LIPSCHITZ_TOL,
    GroupDistribution,
    MetricSpace,
    ProbMetricKind,
    StochasticMap,
)
from fairlip.data.probability import group_mixture, tv_distance
from fairlip.domain.constraints import ratio_factor
from fairlip.domain.lp import PivotRule, ProgramBuilder, Relation, solve
from fairlip.errors import SolverError, UnverifiedMetricError, ValidationError

log = logging.getLogger(__name__)

# Outcomes whose mixtures differ by less than this do not favour either group.
FAVOUR_TOL = 1e-12


class EarthmoverForm(Enum):
    """Earthmover LP with explicit marginals, or the net-flow form for metrics."""
    GENERAL = "general"
    METRIC = "metric"


@dataclass(frozen=True)
class TransportPlan:
    """Optimal flow h[x][y] between two groups and its cost."""
    flow: np.ndarray
    cost: float
    form: EarthmoverForm


@dataclass(frozen=True)
class BiasReport:
    """Largest achievable parity gap and a binary mapping achieving it."""
    value: float
    witness: StochasticMap
    kind: ProbMetricKind


@dataclass(frozen=True)
class ParityConsequences:
    """Group-level consequences of parity for a set of outcomes.

    `posterior_gap` is None when no individual of either group can reach
    the outcome set.

    """
    outcome_gap: float
    posterior_gap: float | None

    @property
    def posterior_defined(self) -> bool:
        return self.posterior_gap is not None


@dataclass(frozen=True)
class EmTvReport:
    """Both sides of the bias / Earthmover comparison for one pair of groups."""
    bias: float
    earthmover: float
    relaxed: float
    bounded_distances: bool
    true_metric: bool
    tol: float

    @property
    def upper_bound_holds(self) -> bool:
        return self.bias <= self.earthmover + self.tol

    @property
    def equality_expected(self) -> bool:
        return self.bounded_distances and self.true_metric

    @property
    def equality_holds(self) -> bool:
        return abs(self.bias - self.earthmover) <= self.tol

    @property
    def ok(self) -> bool:
        return self.upper_bound_holds and (self.equality_holds or not self.equality_expected)


def _check_groups(n: int, *groups: GroupDistribution) -> None:
    for g in groups:
        if len(g) != n:
            raise ValidationError("group distribution is not aligned with the individuals")


def parity_gap(m: StochasticMap, s: GroupDistribution, t: GroupDistribution) -> float:
    """D_tv(mu_S, mu_T), the bias of the mapping between the two groups."""
    return tv_distance(group_mixture(m, s), group_mixture(m, t))


def parity_consequences(
    m: StochasticMap,
    s: GroupDistribution,
    t: GroupDistribution,
    outcomes: Iterable[int],
) -> ParityConsequences:
    """How differently the groups experience a set of outcomes O.

    The first quantity is |Pr[M(x) in O | x in S] - Pr[M(x) in O | x in T]|.
    The second is |Pr[x in S | M(x) in O] - Pr[x in T | M(x) in O]| with x
    drawn from the balanced mixture (S + T) / 2 and then a ~ mu_x; it equals
    the first divided by 2 Pr[M(x) in O].

    """
    selected = sorted(set(outcomes))
    if any(a < 0 or a >= m.num_outcomes for a in selected):
        raise ValidationError("outcome set is not a subset of the outcomes")

    reach_s = group_mixture(m, s).mass(selected)
    reach_t = group_mixture(m, t).mass(selected)
    outcome_gap = abs(reach_s - reach_t)

    total = reach_s + reach_t
    if total <= 0.0:
        return ParityConsequences(outcome_gap, None)
    return ParityConsequences(outcome_gap, abs(reach_s - reach_t) / total)


def favoured_outcomes(m: StochasticMap, s: GroupDistribution, t: GroupDistribution) -> tuple[int, ...]:
    """Outcomes more likely under S's mixture than under T's."""
    diff = group_mixture(m, s).probs - group_mixture(m, t).probs
    return tuple(int(a) for a in np.flatnonzero(diff > FAVOUR_TOL))


def binarize(m: StochasticMap, s: GroupDistribution, t: GroupDistribution) -> StochasticMap:
    """Collapse outcomes to {favoured by S, the rest}.

    The result is Lipschitz whenever m is (for both metrics) and has the same
    parity gap between S and T.

    """
    favoured = list(favoured_outcomes(m, s, t))
    rest = [a for a in range(m.num_outcomes) if a not in favoured]
    rows = np.column_stack([
        m.rows[:, favoured].sum(axis=1),
        m.rows[:, rest].sum(axis=1),
    ])
    return StochasticMap.from_rows(rows)


def _binary_witness(first: np.ndarray) -> StochasticMap:
    first = np.clip(first, 0.0, 1.0)
    return StochasticMap.from_rows(np.column_stack([first, 1.0 - first]))


def bias_tv(
    space: MetricSpace,
    s: GroupDistribution,
    t: GroupDistribution,
    pivot_rule: PivotRule = PivotRule.DANTZIG,
) -> BiasReport:
    """Bias under the total variation metric.

    Maximises mu_S(0) - mu_T(0) over mu_x(0) in [0, 1] with
    |mu_x(0) - mu_y(0)| <= d(x, y).

    """
    n = len(space)
    _check_groups(n, s, t)
    builder = ProgramBuilder()
    mu = builder.add_variables(n, cost=-(s.weights - t.weights), lower=0.0, upper=1.0, name="mu0")
    for i in range(n):
        for j in range(i + 1, n):
            d = float(space.dist[i, j])
            if d == 0.0:
                builder.add_constraint({mu[i]: 1.0, mu[j]: -1.0}, Relation.EQ, 0.0)
            elif d < 1.0:
                builder.add_constraint({mu[i]: 1.0, mu[j]: -1.0}, Relation.LE, d)
                builder.add_constraint({mu[j]: 1.0, mu[i]: -1.0}, Relation.LE, d)

    solution = solve(builder.build(), pivot_rule)
    if not solution.is_optimal:
        raise SolverError(f"bias LP reported {solution.status.value}")

    witness = _binary_witness(solution.values)
    value = float((s.weights - t.weights) @ witness.rows[:, 0])
    return BiasReport(max(value, 0.0), witness, ProbMetricKind.TOTAL_VARIATION)


def bias_inf(
    space: MetricSpace,
    s: GroupDistribution,
    t: GroupDistribution,
    pivot_rule: PivotRule = PivotRule.DANTZIG,
) -> BiasReport:
    """Bias under the relative l-infinity metric, from its primal LP.

    Variables are mu_x(0), mu_x(1) with mu_x(a) <= e^d(x,y) mu_y(a) for every
    ordered pair and both outcomes.

    """
    n = len(space)
    _check_groups(n, s, t)
    builder = ProgramBuilder()
    first = builder.add_variables(n, cost=-(s.weights - t.weights), name="mu0")
    second = builder.add_variables(n, name="mu1")
    for x in range(n):
        builder.add_constraint({first[x]: 1.0, second[x]: 1.0}, Relation.EQ, 1.0)

    for x in range(n):
        for y in range(n):
            if x == y:
                continue
            d = float(space.dist[x, y])
            if d == 0.0:
                if x < y:
                    builder.add_constraint({first[x]: 1.0, first[y]: -1.0}, Relation.EQ, 0.0)
                continue
            factor = ratio_factor(d)
            builder.add_constraint({first[x]: factor, first[y]: -1.0}, Relation.LE, 0.0)
            builder.add_constraint({second[x]: factor, second[y]: -1.0}, Relation.LE, 0.0)

    solution = solve(builder.build(), pivot_rule)
    if not solution.is_optimal:
        raise SolverError(f"bias LP reported {solution.status.value}")

    values = solution.values
    witness = StochasticMap.from_rows(np.column_stack([values[first], values[second]]), tol=1e-6)
    value = float((s.weights - t.weights) @ witness.rows[:, 0])
    return BiasReport(max(value, 0.0), witness, ProbMetricKind.RELATIVE_LINF)


def bias_relaxed(
    space: MetricSpace,
    s: GroupDistribution,
    t: GroupDistribution,
    pivot_rule: PivotRule = PivotRule.DANTZIG,
) -> float:
    """The total variation bias LP without the upper bound mu_x(0) <= 1.

    Its dual is the net-flow Earthmover program, so on a true metric it
    equals d_EM(S, T) whatever the scale of the distances.

    """
    n = len(space)
    _check_groups(n, s, t)
    builder = ProgramBuilder()
    mu = builder.add_variables(n, cost=-(s.weights - t.weights), name="mu0")
    for i in range(n):
        for j in range(i + 1, n):
            d = float(space.dist[i, j])
            if d == 0.0:
                builder.add_constraint({mu[i]: 1.0, mu[j]: -1.0}, Relation.EQ, 0.0)
            else:
                builder.add_constraint({mu[i]: 1.0, mu[j]: -1.0}, Relation.LE, d)
                builder.add_constraint({mu[j]: 1.0, mu[i]: -1.0}, Relation.LE, d)

    solution = solve(builder.build(), pivot_rule)
    if not solution.is_optimal:
        raise SolverError(f"relaxed bias LP reported {solution.status.value}")
    return max(-solution.objective_value, 0.0)


def earthmover(
    space: MetricSpace,
    s: GroupDistribution,
    t: GroupDistribution,
    form: EarthmoverForm = EarthmoverForm.GENERAL,
    pivot_rule: PivotRule = PivotRule.DANTZIG,
) -> TransportPlan:
    """Cheapest transport of S onto T with per-unit cost d.

    The general form fixes both marginals of the flow. The metric form only
    balances net flow, sum_y h(x,y) - sum_y h(y,x) = S(x) - T(x), and needs a
    verified metric.

    Raises:
        UnverifiedMetricError: metric form on a space not known to satisfy
            the triangle inequality.

    """
    n = len(space)
    _check_groups(n, s, t)
    if form is EarthmoverForm.METRIC and not space.is_true_metric:
        raise UnverifiedMetricError(
            "the metric Earthmover form needs a space whose triangle inequality was verified"
        )

    builder = ProgramBuilder()
    flow = builder.add_variables(n * n, cost=space.dist.ravel(), name="h")

    def h(x: int, y: int) -> int:
        return flow[x * n + y]

    if form is EarthmoverForm.GENERAL:
        for x in range(n):
            builder.add_constraint({h(x, y): 1.0 for y in range(n)}, Relation.EQ, s.weights[x])
        for y in range(n):
            builder.add_constraint({h(x, y): 1.0 for x in range(n)}, Relation.EQ, t.weights[y])
    else:
        for x in range(n):
            builder.set_bounds(h(x, x), 0.0, 0.0)
            terms: dict[int, float] = {}
            for y in range(n):
                if y != x:
                    terms[h(x, y)] = terms.get(h(x, y), 0.0) + 1.0
                    terms[h(y, x)] = terms.get(h(y, x), 0.0) - 1.0
            builder.add_constraint(terms, Relation.EQ, s.weights[x] - t.weights[x])

    solution = solve(builder.build(), pivot_rule)
    if not solution.is_optimal:
        raise SolverError(f"Earthmover LP reported {solution.status.value}")

    plan = solution.values.reshape(n, n)
    cost = float((plan * space.dist).sum())
    log.debug(f"Earthmover ({form.value}) cost {cost:.12g}")
    return TransportPlan(plan, cost, form)


def verify_em_tv(
    space: MetricSpace,
    s: GroupDistribution,
    t: GroupDistribution,
    tol: float = LIPSCHITZ_TOL,
) -> EmTvReport:
    """Compare the total variation bias with the Earthmover distance.

    The bias never exceeds the Earthmover cost; when every distance is at
    most 1 and the triangle inequality holds the two coincide.

    """
    return EmTvReport(
        bias=bias_tv(space, s, t).value,
        earthmover=earthmover(space, s, t).cost,
        relaxed=bias_relaxed(space, s, t),
        bounded_distances=space.max_distance <= 1.0,
        true_metric=space.is_true_metric,
        tol=tol,
    )
