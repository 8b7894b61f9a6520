"""Domain types: metric spaces, outcome distributions and fairness instances.

Every type is immutable once built: arrays are copied on construction and
marked read-only, so values can be shared between threads without locking.

"""

from collections.abc import Iterable, Sequence
from dataclasses import dataclass, replace
from enum import Enum

import numpy as np
from scipy.spatial.distance import cdist

from fairlip.errors import ValidationError

# Normalisation tolerance for probability vectors.
PROB_TOL = 1e-9

# Default tolerance of Lipschitz and parity checks.
LIPSCHITZ_TOL = 1e-6

# Tolerance on metric symmetry and on the zero diagonal.
METRIC_TOL = 1e-9


class ProbMetricKind(Enum):
    """Probability metric used to compare two outcome distributions."""
    TOTAL_VARIATION = "tv"
    RELATIVE_LINF = "inf"


def _frozen(values, ndim: int, what: str) -> np.ndarray:
    """Copy values into a read-only float array of the given rank."""
    try:
        array = np.array(values, dtype=float)
    except (TypeError, ValueError) as e:
        raise ValidationError(f"{what} is not numeric: {e}") from e

    if array.ndim != ndim:
        raise ValidationError(f"{what} must have {ndim} dimension(s), got {array.ndim}")
    if not np.all(np.isfinite(array)):
        raise ValidationError(f"{what} contains non-finite values")

    array.setflags(write=False)
    return array


@dataclass(frozen=True, eq=False)
class MetricSpace:
    """Individuals together with a symmetric, nonnegative distance matrix.

    The triangle inequality is not required. `is_true_metric` records whether
    it was verified (see `verify_triangle`); the Earthmover metric form and
    the nearest-neighbour extension rely on it.

    """
    ids: tuple[str, ...]
    dist: np.ndarray
    is_true_metric: bool = False

    def __post_init__(self) -> None:
        ids = tuple(str(i) for i in self.ids)
        n = len(ids)
        if n == 0:
            raise ValidationError("a metric space needs at least one individual")
        if len(set(ids)) != n:
            raise ValidationError("individual identifiers must be unique")

        dist = np.array(_frozen(self.dist, 2, "distance matrix"))
        if dist.shape != (n, n):
            raise ValidationError(
                f"distance matrix has shape {dist.shape}, expected ({n}, {n})"
            )
        if np.any(dist < 0):
            raise ValidationError("distances must be nonnegative")
        if np.any(np.abs(np.diag(dist)) > METRIC_TOL):
            raise ValidationError("d(x, x) must be 0 for every individual")
        if np.any(np.abs(dist - dist.T) > METRIC_TOL):
            raise ValidationError("distance matrix must be symmetric")

        dist = (dist + dist.T) / 2
        np.fill_diagonal(dist, 0.0)
        dist.setflags(write=False)

        object.__setattr__(self, "ids", ids)
        object.__setattr__(self, "dist", dist)

    def __len__(self) -> int:
        return len(self.ids)

    @classmethod
    def from_points(cls, points, ids: Sequence[str] | None = None) -> "MetricSpace":
        """Build the Euclidean metric over a set of coordinates."""
        coords = np.atleast_2d(np.asarray(points, dtype=float))
        if ids is None:
            ids = [str(i) for i in range(len(coords))]
        return cls(tuple(ids), cdist(coords, coords), is_true_metric=True)

    @property
    def max_distance(self) -> float:
        """Largest pairwise distance."""
        return float(self.dist.max())

    def index_of(self, individual: str) -> int:
        """Position of an individual in `ids`."""
        try:
            return self.ids.index(individual)
        except ValueError:
            raise ValidationError(f"unknown individual {individual!r}") from None

    def triangle_violation(self) -> float:
        """Largest excess d(x, z) - d(x, y) - d(y, z) over all triples, at least 0."""
        worst = 0.0
        for k in range(len(self)):
            detour = self.dist[:, k, None] + self.dist[None, k, :]
            worst = max(worst, float((self.dist - detour).max()))
        return worst

    def verify_triangle(self, tol: float = METRIC_TOL) -> "MetricSpace":
        """Return a copy whose `is_true_metric` flag reflects an O(n^3) check."""
        return replace(self, is_true_metric=self.triangle_violation() <= tol)

    def scaled(self, factor: float) -> "MetricSpace":
        """Multiply every distance by a nonnegative factor."""
        if factor < 0:
            raise ValidationError("scale factor must be nonnegative")
        return replace(self, dist=self.dist * factor)

    def subspace(self, indices: Sequence[int]) -> "MetricSpace":
        """Restrict the space to the given individuals, in that order."""
        idx = list(indices)
        return MetricSpace(
            tuple(self.ids[i] for i in idx),
            self.dist[np.ix_(idx, idx)],
            is_true_metric=self.is_true_metric,
        )


@dataclass(frozen=True, eq=False)
class OutcomeDistribution:
    """A probability vector over the outcome set."""
    probs: np.ndarray

    def __post_init__(self) -> None:
        probs = _frozen(self.probs, 1, "outcome distribution")
        if probs.size == 0:
            raise ValidationError("an outcome distribution needs at least one outcome")
        if np.any(probs < 0):
            raise ValidationError("probabilities must be nonnegative")
        if abs(probs.sum() - 1.0) > PROB_TOL:
            raise ValidationError(f"probabilities sum to {probs.sum()!r}, not 1")
        object.__setattr__(self, "probs", probs)

    def __len__(self) -> int:
        return self.probs.size

    @classmethod
    def uniform(cls, k: int) -> "OutcomeDistribution":
        return cls(np.full(k, 1.0 / k))

    @classmethod
    def point_mass(cls, k: int, outcome: int) -> "OutcomeDistribution":
        probs = np.zeros(k)
        probs[outcome] = 1.0
        return cls(probs)

    def mass(self, outcomes: Iterable[int]) -> float:
        """Probability of a set of outcomes."""
        return float(self.probs[list(outcomes)].sum())


def normalized_rows(rows, tol: float) -> np.ndarray:
    """Clip tiny negatives and renormalise rows that are stochastic within tol."""
    matrix = np.array(rows, dtype=float)
    if matrix.ndim != 2:
        raise ValidationError("rows must form a matrix")
    if np.any(matrix < -tol):
        raise ValidationError("rows contain negative probabilities")
    matrix = np.clip(matrix, 0.0, None)
    sums = matrix.sum(axis=1)
    if np.any(np.abs(sums - 1.0) > tol):
        raise ValidationError("rows are not normalised")
    return matrix / sums[:, None]


@dataclass(frozen=True, eq=False)
class StochasticMap:
    """A randomized classifier: one outcome distribution per individual.

    Rows are stored as a dense (individuals x outcomes) matrix; `row` gives the
    distribution of a single individual.

    """
    rows: np.ndarray

    def __post_init__(self) -> None:
        rows = _frozen(self.rows, 2, "mapping")
        if rows.shape[1] == 0:
            raise ValidationError("a mapping needs at least one outcome")
        if np.any(rows < 0):
            raise ValidationError("mapping rows must be nonnegative")
        if np.any(np.abs(rows.sum(axis=1) - 1.0) > PROB_TOL):
            raise ValidationError("mapping rows must sum to 1")
        object.__setattr__(self, "rows", rows)

    def __len__(self) -> int:
        return self.rows.shape[0]

    @classmethod
    def from_rows(cls, rows, tol: float = PROB_TOL) -> "StochasticMap":
        """Build a map from rows that are stochastic up to tol (e.g. LP output)."""
        return cls(normalized_rows(rows, tol))

    @classmethod
    def constant(cls, n: int, dist: OutcomeDistribution) -> "StochasticMap":
        """Map every individual to the same distribution."""
        return cls(np.tile(dist.probs, (n, 1)))

    @property
    def num_outcomes(self) -> int:
        return self.rows.shape[1]

    def row(self, i: int) -> OutcomeDistribution:
        return OutcomeDistribution(self.rows[i])

    def subset(self, indices: Sequence[int]) -> "StochasticMap":
        return StochasticMap(self.rows[list(indices)])

    def sample(self, i: int, rng: np.random.Generator) -> int:
        """Draw an outcome index for individual i."""
        return int(rng.choice(self.num_outcomes, p=self.rows[i]))


@dataclass(frozen=True, eq=False)
class GroupDistribution:
    """A distribution over individuals, such as a protected group S."""
    weights: np.ndarray

    def __post_init__(self) -> None:
        weights = _frozen(self.weights, 1, "group weights")
        if weights.size == 0:
            raise ValidationError("a group distribution needs at least one individual")
        if np.any(weights < 0):
            raise ValidationError("group weights must be nonnegative")
        if abs(weights.sum() - 1.0) > PROB_TOL:
            raise ValidationError(f"group weights sum to {weights.sum()!r}, not 1")
        object.__setattr__(self, "weights", weights)

    def __len__(self) -> int:
        return self.weights.size

    @classmethod
    def uniform(cls, n: int) -> "GroupDistribution":
        return cls(np.full(n, 1.0 / n))

    @classmethod
    def uniform_over(cls, n: int, members: Iterable[int]) -> "GroupDistribution":
        """Uniform distribution over a nonempty subset, such as U_T."""
        weights = np.zeros(n)
        members = sorted(set(members))
        if not members:
            raise ValidationError("a group needs at least one member")
        weights[members] = 1.0 / len(members)
        return cls(weights)

    @classmethod
    def point_mass(cls, n: int, i: int) -> "GroupDistribution":
        return cls.uniform_over(n, [i])

    @classmethod
    def from_weights(cls, weights) -> "GroupDistribution":
        """Normalise arbitrary nonnegative weights."""
        array = np.asarray(weights, dtype=float)
        total = array.sum()
        if not np.isfinite(total) or total <= 0:
            raise ValidationError("group weights must have positive total mass")
        return cls(array / total)

    @property
    def support(self) -> tuple[int, ...]:
        """Individuals with positive weight."""
        return tuple(int(i) for i in np.flatnonzero(self.weights > 0))

    def restricted(self, indices: Sequence[int]) -> "GroupDistribution":
        """Renormalised restriction to a subset, uniform if it carries no mass."""
        sub = self.weights[list(indices)]
        total = sub.sum()
        if total <= 0:
            return GroupDistribution.uniform(len(sub))
        if abs(total - 1.0) <= 1e-12:
            return GroupDistribution(sub)
        return GroupDistribution(sub / total)


@dataclass(frozen=True, eq=False)
class FairnessInstance:
    """A metric space, an outcome set, the vendor loss and the base population.

    `base` is the distribution used for the expectation over individuals; it
    defaults to uniform.

    """
    space: MetricSpace
    outcomes: tuple[str, ...]
    loss: np.ndarray
    base: GroupDistribution | None = None

    def __post_init__(self) -> None:
        outcomes = tuple(str(a) for a in self.outcomes)
        if not outcomes:
            raise ValidationError("an instance needs at least one outcome")
        if len(set(outcomes)) != len(outcomes):
            raise ValidationError("outcome identifiers must be unique")

        loss = _frozen(self.loss, 2, "loss matrix")
        n = len(self.space)
        if loss.shape != (n, len(outcomes)):
            raise ValidationError(
                f"loss matrix has shape {loss.shape}, expected ({n}, {len(outcomes)})"
            )

        base = self.base if self.base is not None else GroupDistribution.uniform(n)
        if len(base) != n:
            raise ValidationError("base distribution is not aligned with the individuals")

        object.__setattr__(self, "outcomes", outcomes)
        object.__setattr__(self, "loss", loss)
        object.__setattr__(self, "base", base)

    @property
    def num_individuals(self) -> int:
        return len(self.space)

    @property
    def num_outcomes(self) -> int:
        return len(self.outcomes)

    def restrict(self, indices: Sequence[int], loss=None) -> "FairnessInstance":
        """Sub-instance over the given individuals, optionally with a new loss."""
        idx = list(indices)
        return FairnessInstance(
            space=self.space.subspace(idx),
            outcomes=self.outcomes,
            loss=self.loss[idx] if loss is None else loss,
            base=self.base.restricted(idx),
        )
