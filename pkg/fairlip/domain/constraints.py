"""Linear encodings of Lipschitz, ratio and total-variation constraints."""

import math
from collections.abc import Iterable, Mapping, Sequence

import numpy as np

from fairlip.data.models import ProbMetricKind
from fairlip.domain.lp import ProgramBuilder, Relation

Difference = tuple[Mapping[int, float], float]


def ratio_factor(distance: float) -> float:
    """e^-d, the left coefficient of a ratio row scaled by e^d."""
    return math.exp(-distance)


def add_tv_parts(builder: ProgramBuilder, differences: Sequence[Difference]) -> list[int]:
    """Split each difference into positive and negative parts.

    For every coordinate a, `terms . v + constant = p_a - n_a` with
    p_a, n_a >= 0. Returns the part variables; half their sum bounds the
    total variation of the differences from above.

    """
    parts: list[int] = []
    for terms, constant in differences:
        pos, neg = builder.add_variables(2, name="t")
        row = dict(terms)
        row[pos] = -1.0
        row[neg] = 1.0
        builder.add_constraint(row, Relation.EQ, -constant)
        parts += [pos, neg]
    return parts


def add_tv_constraint(
    builder: ProgramBuilder,
    differences: Sequence[Difference],
    budget: float,
) -> None:
    """Constrain 1/2 sum_a |difference_a| <= budget.

    Differences between two distributions never exceed 1 in total variation,
    so a budget of 1 or more adds nothing; a zero budget becomes equalities.

    """
    if budget >= 1.0:
        return
    if budget == 0.0:
        for terms, constant in differences:
            builder.add_constraint(terms, Relation.EQ, -constant)
        return
    parts = add_tv_parts(builder, differences)
    builder.add_constraint({j: 0.5 for j in parts}, Relation.LE, budget)


def _row_difference(first: Sequence[int], second: Sequence[int]) -> list[Difference]:
    return [({x: 1.0, y: -1.0}, 0.0) for x, y in zip(first, second)]


def add_ratio_constraints(
    builder: ProgramBuilder,
    first: Sequence[int],
    second: Sequence[int],
    distance: float,
) -> None:
    """mu_x(a) <= e^d mu_y(a) and mu_y(a) <= e^d mu_x(a) for every outcome.

    Rows are divided by e^d, so every coefficient lies in [0, 1]:
    e^-d mu_x(a) - mu_y(a) <= 0.

    """
    factor = ratio_factor(distance)
    for x, y in zip(first, second):
        builder.add_constraint({x: factor, y: -1.0}, Relation.LE, 0.0)
        builder.add_constraint({y: factor, x: -1.0}, Relation.LE, 0.0)


def add_lipschitz_constraints(
    builder: ProgramBuilder,
    rows: Sequence[Sequence[int]],
    dist: np.ndarray,
    kind: ProbMetricKind,
    pairs: Iterable[tuple[int, int]] | None = None,
) -> None:
    """Require D(mu_i, mu_j) <= d(i, j) between rows of LP variables.

    `rows[i]` holds the variables of individual i's distribution. Pairs are
    unordered; by default every pair is constrained. d = 0 is encoded as
    exact equality of the two rows.

    """
    n = len(rows)
    if pairs is None:
        pairs = ((i, j) for i in range(n) for j in range(i + 1, n))

    for i, j in pairs:
        d = float(dist[i, j])
        if d == 0.0:
            for terms, _ in _row_difference(rows[i], rows[j]):
                builder.add_constraint(terms, Relation.EQ, 0.0)
        elif kind is ProbMetricKind.TOTAL_VARIATION:
            add_tv_constraint(builder, _row_difference(rows[i], rows[j]), d)
        else:
            add_ratio_constraints(builder, rows[i], rows[j], d)


def add_simplex_constraints(builder: ProgramBuilder, rows: Sequence[Sequence[int]]) -> None:
    """Each row of variables is a probability vector."""
    for row in rows:
        builder.add_constraint({j: 1.0 for j in row}, Relation.EQ, 1.0)
