"""Random instance builders and brute-force oracles shared by the tests."""

import itertools
import math

import numpy as np

from fairlip.data.models import FairnessInstance, GroupDistribution, MetricSpace
from fairlip.domain.lp import LinearProgram, Relation


def random_true_metric(rng: np.random.Generator, n: int, spread: float = 0.7) -> MetricSpace:
    """Euclidean metric over n random points of [0, spread]^2.

    With the default spread every distance is below 1.

    """
    return MetricSpace.from_points(rng.random((n, 2)) * spread)


def random_metric(rng: np.random.Generator, n: int, high: float = 1.0) -> MetricSpace:
    """Symmetric matrix with zero diagonal; the triangle inequality may fail."""
    upper = np.triu(rng.random((n, n)) * high, 1)
    return MetricSpace(tuple(str(i) for i in range(n)), upper + upper.T)


def random_instance(
    rng: np.random.Generator,
    n: int,
    k: int,
    space: MetricSpace | None = None,
) -> FairnessInstance:
    space = space if space is not None else random_metric(rng, n)
    return FairnessInstance(space, tuple(f"a{i}" for i in range(k)), rng.random((n, k)))


def random_group(rng: np.random.Generator, n: int) -> GroupDistribution:
    """Random weights, some of them possibly zero."""
    weights = rng.random(n) * (rng.random(n) < 0.8)
    if weights.sum() == 0:
        weights[rng.integers(n)] = 1.0
    return GroupDistribution.from_weights(weights)


def random_distribution(rng: np.random.Generator, k: int) -> np.ndarray:
    return rng.dirichlet(np.ones(k))


def vertex_oracle(program: LinearProgram, tol: float = 1e-9) -> float | None:
    """Minimum of a bounded program by enumerating every basic solution.

    Returns None when no vertex is feasible. Only for a handful of variables.

    """
    n = program.num_variables
    equalities = []
    inequalities = []  # rows a . x <= b
    for c in program.constraints:
        if c.relation is Relation.EQ:
            equalities.append((c.coefficients, c.rhs))
        elif c.relation is Relation.LE:
            inequalities.append((c.coefficients, c.rhs))
        else:
            inequalities.append((-c.coefficients, -c.rhs))
    for j, (lower, upper) in enumerate(program.bounds):
        unit = np.zeros(n)
        unit[j] = 1.0
        if math.isfinite(lower):
            inequalities.append((-unit, -lower))
        if math.isfinite(upper):
            inequalities.append((unit, upper))

    best = None
    rank = np.linalg.matrix_rank(np.array([e[0] for e in equalities])) if equalities else 0
    free = n - int(rank)
    for chosen in itertools.combinations(range(len(inequalities)), max(free, 0)):
        rows = equalities + [inequalities[i] for i in chosen]
        a = np.array([r[0] for r in rows]).reshape(len(rows), n)
        b = np.array([r[1] for r in rows])
        if np.linalg.matrix_rank(a) < n:
            continue
        x = np.linalg.lstsq(a, b, rcond=None)[0]
        if np.any(np.abs(a @ x - b) > tol):
            continue
        if program.max_violation(x) > tol:
            continue
        value = float(program.objective @ x)
        best = value if best is None else min(best, value)
    return best


def grid_oracle_tv(inst: FairnessInstance, step: float = 0.02) -> float:
    """Fairness LP optimum over two outcomes by grid search on mu_x(0).

    Distances must be multiples of the step; feasibility is then checked on
    integer grid indices, which is exact.

    """
    n = inst.num_individuals
    ticks = int(round(1 / step))
    grid = np.arange(ticks + 1)
    budget = np.rint(np.minimum(inst.space.dist, 1.0) / step).astype(int)

    mesh = np.stack(np.meshgrid(*([grid] * n), indexing="ij"), axis=-1).reshape(-1, n)
    feasible = np.ones(len(mesh), dtype=bool)
    for i in range(n):
        for j in range(i + 1, n):
            feasible &= np.abs(mesh[:, i] - mesh[:, j]) <= budget[i, j]

    first = mesh[feasible] * step
    w = inst.base.weights
    losses = (first * inst.loss[:, 0] + (1 - first) * inst.loss[:, 1]) @ w
    return float(losses.min())
