"""Probability metrics, the Lipschitz check, mixtures and post-processing."""

from dataclasses import dataclass

import numpy as np

from fairlip.data.models import (
    LIPSCHITZ_TOL,
    PROB_TOL,
    GroupDistribution,
    MetricSpace,
    OutcomeDistribution,
    ProbMetricKind,
    StochasticMap,
)
from fairlip.errors import DimensionMismatchError, ValidationError

ProbabilityVector = OutcomeDistribution | np.ndarray


def _as_probs(dist: ProbabilityVector) -> np.ndarray:
    if isinstance(dist, OutcomeDistribution):
        return dist.probs
    return np.asarray(dist, dtype=float)


def _pair(p: ProbabilityVector, q: ProbabilityVector) -> tuple[np.ndarray, np.ndarray]:
    p, q = _as_probs(p), _as_probs(q)
    if p.shape != q.shape:
        raise DimensionMismatchError(
            f"distributions over {p.shape[-1]} and {q.shape[-1]} outcomes"
        )
    return p, q


def tv_distance(p: ProbabilityVector, q: ProbabilityVector) -> float:
    """Total variation distance, half the l1 distance; lies in [0, 1]."""
    p, q = _pair(p, q)
    return float(0.5 * np.abs(p - q).sum())


def _log_ratio_matrix(logs_a: np.ndarray, logs_b: np.ndarray) -> np.ndarray:
    """Absolute log-ratios with 0/0 mapped to 0 and x/0 mapped to +inf."""
    with np.errstate(invalid="ignore"):
        ratios = np.abs(logs_a - logs_b)
    return np.where(np.isnan(ratios), 0.0, ratios)


def _safe_log(probs: np.ndarray) -> np.ndarray:
    with np.errstate(divide="ignore"):
        return np.log(probs)


def dinf_distance(p: ProbabilityVector, q: ProbabilityVector) -> float:
    """Relative l-infinity metric: the largest absolute log-ratio over outcomes.

    Outcomes where both probabilities vanish are skipped; an outcome with
    exactly one zero makes the distance infinite.

    """
    p, q = _pair(p, q)
    if p.size == 0:
        return 0.0
    return float(_log_ratio_matrix(_safe_log(p), _safe_log(q)).max())


def distance(kind: ProbMetricKind, p: ProbabilityVector, q: ProbabilityVector) -> float:
    """Dispatch to the probability metric named by kind."""
    if kind is ProbMetricKind.TOTAL_VARIATION:
        return tv_distance(p, q)
    return dinf_distance(p, q)


def pairwise_distances(m: StochasticMap, kind: ProbMetricKind) -> np.ndarray:
    """Matrix of D(mu_x, mu_y) over all pairs of rows."""
    rows = m.rows
    if kind is ProbMetricKind.TOTAL_VARIATION:
        return 0.5 * np.abs(rows[:, None, :] - rows[None, :, :]).sum(axis=2)

    logs = _safe_log(rows)
    return _log_ratio_matrix(logs[:, None, :], logs[None, :, :]).max(axis=2)


@dataclass(frozen=True)
class LipschitzReport:
    """Outcome of a Lipschitz check.

    `max_violation` is the largest D(mu_x, mu_y) - d(x, y) over distinct pairs
    and `pair` the pair achieving it (None with fewer than two individuals).

    """
    kind: ProbMetricKind
    max_violation: float
    pair: tuple[int, int] | None
    tol: float

    @property
    def is_lipschitz(self) -> bool:
        return self.max_violation <= self.tol


def _check_aligned(m: StochasticMap, space: MetricSpace) -> None:
    if len(m) != len(space):
        raise ValidationError(
            f"mapping has {len(m)} rows but the space has {len(space)} individuals"
        )


def check_lipschitz(
    m: StochasticMap,
    space: MetricSpace,
    kind: ProbMetricKind,
    tol: float = LIPSCHITZ_TOL,
) -> LipschitzReport:
    """Find the worst violation of D(mu_x, mu_y) <= d(x, y)."""
    _check_aligned(m, space)
    n = len(space)
    if n < 2:
        return LipschitzReport(kind, 0.0, None, tol)

    with np.errstate(invalid="ignore"):
        excess = pairwise_distances(m, kind) - space.dist
    np.fill_diagonal(excess, -np.inf)
    flat = int(np.argmax(excess))
    i, j = divmod(flat, n)
    return LipschitzReport(kind, float(excess[i, j]), (i, j), tol)


def group_mixture(m: StochasticMap, g: GroupDistribution) -> OutcomeDistribution:
    """The outcome distribution mu_G(a) = E_{x~G} mu_x(a)."""
    if len(g) != len(m):
        raise ValidationError("group distribution is not aligned with the mapping")
    mixture = g.weights @ m.rows
    return OutcomeDistribution(mixture / mixture.sum())


def postprocess(m: StochasticMap, channel) -> StochasticMap:
    """Compose the map with a randomized function given as a row-stochastic matrix."""
    matrix = np.asarray(channel, dtype=float)
    if matrix.ndim != 2 or matrix.shape[0] != m.num_outcomes:
        raise ValidationError(
            f"channel must have {m.num_outcomes} rows, one per input outcome"
        )
    if (
        np.any(matrix < 0)
        or not np.all(np.isfinite(matrix))
        or np.any(np.abs(matrix.sum(axis=1) - 1.0) > PROB_TOL)
    ):
        raise ValidationError("channel is not row-stochastic")
    return StochasticMap.from_rows(m.rows @ matrix)
