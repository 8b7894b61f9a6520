"""Exponential mechanism over a metric space and the tools to study its loss.

The mechanism maps x to the distribution over V itself with weights
e^(-scale * d(x, y)). Its expected distance to the true individual stays
bounded on well separated spaces of low doubling dimension; the helpers
here (ball profiles, lattices, nets and nearest-neighbour extension) make
that measurable on small spaces.

"""

import logging
import math
from collections.abc import Sequence
from dataclasses import dataclass

import numpy as np
from scipy.special import logsumexp

from fairlip.data.models import METRIC_TOL, MetricSpace, ProbMetricKind, StochasticMap
from fairlip.data.probability import pairwise_distances
from fairlip.errors import ValidationError

log = logging.getLogger(__name__)

# Rows closer than this in D_inf count as identical for pairs at distance 0.
IDENTICAL_ROWS_TOL = 1e-12


@dataclass(frozen=True)
class ExpMechMap:
    """Mechanism rows, the exponent multiplier and the normalisers Z_x."""
    map: StochasticMap
    scale: float
    normalizers: np.ndarray


@dataclass(frozen=True)
class BallProfile:
    """Average closed-ball sizes E_x |B(x, R)| for a list of radii.

    `doubling_exponents[i]` is log2(E_x |B(x, 2R)| / E_x |B(x, R)|) for
    R = radii[i]. `separation_eps` is the supremum of the radii at which
    every ball holds a single point (inf for a one-point space).

    """
    radii: tuple[float, ...]
    avg_counts: np.ndarray
    separation_eps: float
    doubling_exponents: np.ndarray

    @property
    def estimated_dimension(self) -> float:
        """Largest empirical doubling exponent over the profiled radii."""
        if self.doubling_exponents.size == 0:
            return 0.0
        return float(self.doubling_exponents.max())


def exp_mechanism(space: MetricSpace, scale: float = 1.0) -> ExpMechMap:
    """Rows e^(-scale d(x, y)) / Z_x with Z_x = sum_y e^(-scale d(x, y)).

    Computed in log space, so very distant points underflow to 0 instead of
    breaking the normalisation.

    """
    if not scale > 0 or not math.isfinite(scale):
        raise ValidationError(f"scale must be a positive number, got {scale!r}")

    logits = -scale * space.dist
    log_z = logsumexp(logits, axis=1)
    rows = np.exp(logits - log_z[:, None])
    log.debug(f"Exponential mechanism over {len(space)} points, scale {scale:g}")
    return ExpMechMap(StochasticMap(rows), float(scale), np.exp(log_z))


def lipschitz_constant(m: ExpMechMap | StochasticMap, space: MetricSpace) -> float:
    """Smallest c with D_inf(row_x, row_y) <= c d(x, y) over all pairs.

    Pairs at distance 0 contribute 0 when their rows coincide and make the
    constant infinite otherwise.

    """
    rows = m.map if isinstance(m, ExpMechMap) else m
    n = len(space)
    if n < 2:
        return 0.0

    divergence = pairwise_distances(rows, ProbMetricKind.RELATIVE_LINF)
    off = ~np.eye(n, dtype=bool)
    zero = (space.dist == 0) & off
    if np.any(divergence[zero] > IDENTICAL_ROWS_TOL):
        return math.inf

    positive = (space.dist > 0) & off
    if not np.any(positive):
        return 0.0
    return float((divergence[positive] / space.dist[positive]).max())


def mapping_distance_loss(m: StochasticMap, space: MetricSpace) -> float:
    """E_{x uniform} E_{y ~ M(x)} d(x, y) for a map whose outcomes are V itself."""
    if m.rows.shape != space.dist.shape:
        raise ValidationError("mapping outcomes must be the individuals of the space")
    return float((m.rows * space.dist).sum(axis=1).mean())


def expected_loss(m: ExpMechMap, space: MetricSpace) -> float:
    """Average distance between an individual and the mechanism's output."""
    return mapping_distance_loss(m.map, space)


def _avg_ball_size(space: MetricSpace, radius: float) -> float:
    return float((space.dist <= radius + METRIC_TOL).sum(axis=1).mean())


def separation_eps(space: MetricSpace) -> float:
    """Supremum of the eps for which every closed eps-ball is a single point."""
    n = len(space)
    if n < 2:
        return math.inf
    off = space.dist[~np.eye(n, dtype=bool)]
    return float(off.min())


def ball_profile(space: MetricSpace, radii: Sequence[float]) -> BallProfile:
    """Exact average ball sizes by enumeration of every pair."""
    radii = tuple(float(r) for r in radii)
    if any(r < 0 for r in radii):
        raise ValidationError("radii must be nonnegative")
    if any(b < a for a, b in zip(radii, radii[1:])):
        raise ValidationError("radii must be sorted in ascending order")

    counts = np.array([_avg_ball_size(space, r) for r in radii])
    doubled = np.array([_avg_ball_size(space, 2 * r) for r in radii])
    exponents = np.log2(doubled / counts) if radii else np.zeros(0)
    return BallProfile(radii, counts, separation_eps(space), exponents)


def _nearest(space: MetricSpace, subset: Sequence[int]) -> np.ndarray:
    """Position in subset of each individual's nearest member, lowest index on ties."""
    members = np.asarray(subset, dtype=int)
    dist = space.dist[:, members]
    closest = dist == dist.min(axis=1, keepdims=True)
    keys = np.where(closest, members[None, :], len(space))
    return np.argmin(keys, axis=1)


def _check_subset(space: MetricSpace, subset: Sequence[int]) -> list[int]:
    idx = [int(i) for i in subset]
    if not idx:
        raise ValidationError("the subset must not be empty")
    if any(i < 0 or i >= len(space) for i in idx) or len(set(idx)) != len(idx):
        raise ValidationError("subset must list distinct individuals of the space")
    return idx


def extend_from_subset(
    space: MetricSpace,
    subset: Sequence[int],
    inner: StochasticMap,
) -> StochasticMap:
    """Give every individual the row of its nearest subset member.

    If inner is (D_inf, d)-Lipschitz on the subset and every point lies
    within eps of it, the extension satisfies D_inf <= d + 2 eps on a true
    metric.

    """
    idx = _check_subset(space, subset)
    if len(inner) != len(idx):
        raise ValidationError(
            f"inner mapping has {len(inner)} rows for a subset of {len(idx)} individuals"
        )
    return StochasticMap(inner.rows[_nearest(space, idx)])


def covering_radius(space: MetricSpace, subset: Sequence[int]) -> float:
    """max_x min_{x' in subset} d(x, x')."""
    idx = _check_subset(space, subset)
    return float(space.dist[:, idx].min(axis=1).max())


def well_separated_subset(space: MetricSpace, eps: float) -> tuple[int, ...]:
    """Greedy eps-net in index order.

    Members are pairwise more than eps apart and every individual lies within
    eps of some member.

    """
    if eps < 0:
        raise ValidationError("eps must be nonnegative")
    chosen: list[int] = []
    for x in range(len(space)):
        if all(space.dist[x, y] > eps for y in chosen):
            chosen.append(x)
    return tuple(chosen)


def lattice_space(side: int, dim: int, spacing: float = 1.0) -> MetricSpace:
    """Euclidean grid with side points per axis, ids like "0,3"."""
    if side < 1 or dim < 1:
        raise ValidationError("a lattice needs at least one point per axis and one axis")
    if not spacing > 0:
        raise ValidationError("lattice spacing must be positive")
    coords = np.indices((side,) * dim).reshape(dim, -1).T
    ids = [",".join(str(c) for c in point) for point in coords]
    return MetricSpace.from_points(coords * spacing, ids)
