"""The Fairness LP: minimise the vendor's expected loss over Lipschitz mappings."""

import logging
from collections.abc import Callable, Sequence
from dataclasses import dataclass

import numpy as np

from fairlip.data.models import (
    FairnessInstance,
    MetricSpace,
    ProbMetricKind,
    StochasticMap,
)
from fairlip.domain.constraints import add_lipschitz_constraints, add_simplex_constraints
from fairlip.domain.lp import LinearProgram, PivotRule, ProgramBuilder, solve
from fairlip.errors import SolverError

log = logging.getLogger(__name__)

# LP rows are accepted as distributions within this tolerance, then renormalised.
SOLUTION_TOL = 1e-6

# Relative l-infinity solutions drop entries below this before renormalising.
DINF_ZERO = 1e-10


@dataclass(frozen=True)
class FairSolution:
    """An optimal Lipschitz mapping and its expected loss opt(I).

    Optima are generally not unique; the solver's deterministic pivoting
    picks the vertex.

    """
    map: StochasticMap
    opt_value: float
    kind: ProbMetricKind


def mapping_loss(m: StochasticMap, inst: FairnessInstance) -> float:
    """Expected loss E_{x~base} E_{a~mu_x} L(x, a) of any mapping."""
    per_individual = (m.rows * inst.loss).sum(axis=1)
    return float(inst.base.weights @ per_individual)


def constant_map_loss(inst: FairnessInstance) -> tuple[int, float]:
    """Best outcome for a constant point-mass map and its expected loss."""
    expected = inst.base.weights @ inst.loss
    best = int(np.argmin(expected))
    return best, float(expected[best])


def _mu_rows(n: int, k: int, offset: int = 0) -> list[list[int]]:
    return [[offset + x * k + a for a in range(k)] for x in range(n)]


def build_fairness_lp(inst: FairnessInstance, kind: ProbMetricKind) -> LinearProgram:
    """Build the Fairness LP of an instance.

    The first n*k variables are mu_x(a), individual-major. Total variation
    pairs get 2k auxiliary part variables and one budget row (omitted when
    d >= 1); relative l-infinity pairs get ratio rows in both directions.

    """
    n, k = inst.num_individuals, inst.num_outcomes
    builder = ProgramBuilder()
    costs = inst.base.weights[:, None] * inst.loss
    builder.add_variables(n * k, cost=costs.ravel(), name="mu")

    rows = _mu_rows(n, k)
    add_simplex_constraints(builder, rows)
    add_lipschitz_constraints(builder, rows, inst.space.dist, kind)

    log.debug(
        f"Fairness LP ({kind.value}): {builder.num_variables} variables, "
        f"{builder.num_constraints} constraints"
    )
    return builder.build()


def solve_fairness(
    inst: FairnessInstance,
    kind: ProbMetricKind,
    pivot_rule: PivotRule = PivotRule.DANTZIG,
) -> FairSolution:
    """Compute an optimal (D, d)-Lipschitz mapping and opt(I).

    Raises:
        SolverError: if the LP is not solved to optimality, which cannot
            happen for a valid instance since constant maps are feasible.

    """
    n, k = inst.num_individuals, inst.num_outcomes
    solution = solve(build_fairness_lp(inst, kind), pivot_rule)
    if not solution.is_optimal:
        raise SolverError(f"Fairness LP reported {solution.status.value}")

    rows = solution.values[: n * k].reshape(n, k)
    if kind is ProbMetricKind.RELATIVE_LINF:
        rows = np.where(rows < DINF_ZERO, 0.0, rows)
    m = StochasticMap.from_rows(rows, tol=SOLUTION_TOL)
    return FairSolution(m, mapping_loss(m, inst), kind)


def dp_instance(
    databases: Sequence[frozenset],
    query: Callable[[frozenset], float],
    answers: Sequence[float],
    eps: float,
) -> FairnessInstance:
    """Differential privacy as a fairness instance.

    Databases are individuals at distance eps * |x symmetric-difference y|;
    the loss of answering a on x is |F(x) - a|. Under the relative l-infinity
    metric the Fairness LP then returns an optimal eps-differentially private
    mechanism for the query.

    """
    n = len(databases)
    dist = np.array([
        [eps * len(databases[i] ^ databases[j]) for j in range(n)]
        for i in range(n)
    ])
    ids = tuple("{" + ",".join(sorted(map(str, db))) + "}" for db in databases)
    loss = np.array([[abs(query(db) - a) for a in answers] for db in databases])
    return FairnessInstance(
        space=MetricSpace(ids, dist, is_true_metric=True),
        outcomes=tuple(f"{a:g}" for a in answers),
        loss=loss,
    )
