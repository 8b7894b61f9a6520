"""Dense linear programs and a two-phase primal simplex solver.

Programs are small (a few hundred variables), so the solver works on a dense
tableau, refactorised from the original rows every few dozen pivots and before
any verdict. Pivoting is deterministic: Dantzig's rule with lowest-index ties
and the largest pivot among tied ratios, and Bland's rule whenever the solver
stalls on a degenerate vertex. `PivotRule.BLAND` forces Bland's rule
throughout.

"""

import logging
import math
from collections.abc import Mapping, Sequence
from dataclasses import dataclass, field
from enum import Enum

import numpy as np

from fairlip.errors import MalformedProgramError, SolverError

log = logging.getLogger(__name__)

# A constraint counts as satisfied within this slack. Optimal solutions are
# checked against it, and so is the phase one residual.
FEASIBILITY_TOL = 1e-9

# Reduced costs above -COST_TOL are treated as nonnegative.
COST_TOL = 1e-10

# Pivots must exceed PIVOT_TOL times the largest entry of their column.
PIVOT_TOL = 1e-11

# Ratios within this (relative) distance of the minimum are ties.
RATIO_TIE = 1e-12

# Pivots between two refactorisations of the tableau from the original rows.
REFRESH_INTERVAL = 50

# Consecutive degenerate pivots before switching to Bland's rule.
DEGENERATE_RUN = 20

# Basic values below ZERO_SNAP are round-off and reported as exactly 0.
ZERO_SNAP = 1e-12


class Relation(Enum):
    """Relation between a constraint's left-hand side and its right-hand side."""
    LE = "<="
    EQ = "="
    GE = ">="


class LpStatus(Enum):
    """Result of a solve."""
    OPTIMAL = "optimal"
    INFEASIBLE = "infeasible"
    UNBOUNDED = "unbounded"


class PivotRule(Enum):
    """Entering-variable selection."""
    DANTZIG = "dantzig"
    BLAND = "bland"


@dataclass
class Constraint:
    coefficients: np.ndarray
    relation: Relation
    rhs: float


@dataclass
class LinearProgram:
    """Minimise objective . v subject to linear constraints and variable bounds.

    Bounds default to [0, +inf). Constraints can be added as dense vectors or
    as sparse `{variable: coefficient}` mappings.

    """
    objective: np.ndarray
    constraints: list[Constraint] = field(default_factory=list)
    bounds: list[tuple[float, float]] | None = None
    names: list[str] | None = None

    def __post_init__(self) -> None:
        self.objective = np.asarray(self.objective, dtype=float)
        if self.bounds is None:
            self.bounds = [(0.0, math.inf)] * self.num_variables

    @property
    def num_variables(self) -> int:
        return int(self.objective.size)

    @property
    def num_constraints(self) -> int:
        return len(self.constraints)

    def add_constraint(
        self,
        terms: Mapping[int, float] | Sequence[float] | np.ndarray,
        relation: Relation | str,
        rhs: float,
    ) -> None:
        """Append a constraint; relation may also be given as '<=', '=' or '>='."""
        if isinstance(terms, Mapping):
            coefficients = np.zeros(self.num_variables)
            for j, value in terms.items():
                coefficients[j] += value
        else:
            coefficients = np.asarray(terms, dtype=float)
        self.constraints.append(Constraint(coefficients, Relation(relation), float(rhs)))

    def set_bounds(self, j: int, lower: float, upper: float) -> None:
        self.bounds[j] = (float(lower), float(upper))

    def validate(self) -> None:
        """Raise MalformedProgramError unless the program is well formed."""
        n = self.num_variables
        if self.objective.ndim != 1:
            raise MalformedProgramError("objective must be a vector")
        if not np.all(np.isfinite(self.objective)):
            raise MalformedProgramError("objective contains non-finite values")
        if len(self.bounds) != n:
            raise MalformedProgramError(f"{len(self.bounds)} bounds for {n} variables")
        for j, (lower, upper) in enumerate(self.bounds):
            if math.isnan(lower) or math.isnan(upper) or lower > upper:
                raise MalformedProgramError(f"invalid bounds for variable {j}")
            if lower == math.inf or upper == -math.inf:
                raise MalformedProgramError(f"empty bounds for variable {j}")
        for i, constraint in enumerate(self.constraints):
            if constraint.coefficients.shape != (n,):
                raise MalformedProgramError(
                    f"constraint {i} has {constraint.coefficients.size} coefficients, expected {n}"
                )
            if not np.all(np.isfinite(constraint.coefficients)):
                raise MalformedProgramError(f"constraint {i} has non-finite coefficients")
            if not math.isfinite(constraint.rhs):
                raise MalformedProgramError(f"constraint {i} has a non-finite right-hand side")

    def max_violation(self, values: np.ndarray) -> float:
        """Largest amount by which values break a constraint or a bound."""
        values = np.asarray(values, dtype=float)
        worst = 0.0
        for constraint in self.constraints:
            lhs = float(constraint.coefficients @ values)
            if constraint.relation is Relation.LE:
                gap = lhs - constraint.rhs
            elif constraint.relation is Relation.GE:
                gap = constraint.rhs - lhs
            else:
                gap = abs(lhs - constraint.rhs)
            worst = max(worst, gap)
        for value, (lower, upper) in zip(values, self.bounds):
            worst = max(worst, lower - value, value - upper)
        return worst


@dataclass(frozen=True)
class LpSolution:
    """Status, variable values and objective value of a solve.

    Values are NaN unless the status is optimal; the objective of an
    unbounded program is -inf.

    """
    status: LpStatus
    values: np.ndarray
    objective_value: float
    iterations: int = 0

    @property
    def is_optimal(self) -> bool:
        return self.status is LpStatus.OPTIMAL


@dataclass
class _System:
    """Standard-form rows a tableau is derived from."""
    matrix: np.ndarray
    rhs: np.ndarray
    costs: np.ndarray


def _pivot(tableau: np.ndarray, row: int, col: int) -> None:
    tableau[row] /= tableau[row, col]
    factors = tableau[:, col].copy()
    factors[row] = 0.0
    touched = np.flatnonzero(factors)
    if touched.size:
        tableau[touched] -= np.outer(factors[touched], tableau[row])
    tableau[:, col] = 0.0
    tableau[row, col] = 1.0


def _refresh(tableau: np.ndarray, basis: list[int], system: _System) -> None:
    """Recompute the tableau from the original rows and the current basis."""
    if not basis:
        tableau[-1, :-1] = system.costs
        tableau[-1, -1] = 0.0
        return
    augmented = np.column_stack([system.matrix, system.rhs])
    try:
        body = np.linalg.solve(system.matrix[:, basis], augmented)
    except np.linalg.LinAlgError:
        log.debug("Singular basis matrix, keeping the pivoted tableau")
        return
    basic_costs = system.costs[basis]
    tableau[:-1] = body
    tableau[:-1, basis] = np.eye(len(basis))
    tableau[-1, :-1] = system.costs - basic_costs @ body[:, :-1]
    tableau[-1, basis] = 0.0
    tableau[-1, -1] = -float(basic_costs @ body[:, -1])


def _run_simplex(
    tableau: np.ndarray,
    basis: list[int],
    system: _System,
    rule: PivotRule,
    max_iterations: int,
) -> tuple[LpStatus, int]:
    """Pivot until optimal or unbounded; the last row holds reduced costs.

    Both verdicts are only returned on a freshly refactorised tableau.

    """
    m = tableau.shape[0] - 1
    degenerate = 0
    stale = 0
    for iteration in range(max_iterations):
        if stale >= REFRESH_INTERVAL:
            _refresh(tableau, basis, system)
            stale = 0

        costs = tableau[-1, :-1]
        bland = rule is PivotRule.BLAND or degenerate >= DEGENERATE_RUN
        negative = np.flatnonzero(costs < -COST_TOL)
        if negative.size == 0:
            if stale:
                _refresh(tableau, basis, system)
                stale = 0
                continue
            return LpStatus.OPTIMAL, iteration
        col = int(negative[0]) if bland else int(np.argmin(costs))

        column = tableau[:m, col]
        limit = PIVOT_TOL * max(1.0, float(np.abs(column).max(initial=0.0)))
        eligible = np.flatnonzero(column > limit)
        if eligible.size == 0:
            if stale:
                _refresh(tableau, basis, system)
                stale = 0
                continue
            return LpStatus.UNBOUNDED, iteration

        ratios = np.maximum(tableau[eligible, -1], 0.0) / column[eligible]
        best = float(ratios.min())
        ties = eligible[ratios <= best + RATIO_TIE * max(1.0, best)]
        if bland:
            row = int(min(ties, key=lambda r: basis[r]))
        else:
            # Largest pivot among ties, then the lowest basic index.
            row = int(max(ties, key=lambda r: (column[r], -basis[r])))

        if best <= 1e-12:
            degenerate += 1
            if degenerate == DEGENERATE_RUN and rule is PivotRule.DANTZIG:
                log.debug("Degenerate stall, switching to Bland's rule")
        else:
            degenerate = 0

        _pivot(tableau, row, col)
        basis[row] = col
        stale += 1

    raise SolverError(f"simplex did not converge within {max_iterations} pivots")


def _substitute_bounds(program: LinearProgram):
    """Rewrite variables as x = shift + P y with y >= 0.

    Returns the shift, the substitution matrix and the upper-bound rows that
    must be added on the new variables.

    """
    n = program.num_variables
    shift = np.zeros(n)
    columns: list[tuple[int, float]] = []
    upper_rows: list[tuple[int, float]] = []

    for j, (lower, upper) in enumerate(program.bounds):
        if math.isfinite(lower):
            shift[j] = lower
            columns.append((j, 1.0))
            if math.isfinite(upper):
                upper_rows.append((len(columns) - 1, upper - lower))
        elif math.isfinite(upper):
            shift[j] = upper
            columns.append((j, -1.0))
        else:
            columns.append((j, 1.0))
            columns.append((j, -1.0))

    substitution = np.zeros((n, len(columns)))
    for k, (j, sign) in enumerate(columns):
        substitution[j, k] = sign
    return shift, substitution, upper_rows


def solve(
    program: LinearProgram,
    pivot_rule: PivotRule = PivotRule.DANTZIG,
    max_iterations: int | None = None,
) -> LpSolution:
    """Solve a linear program with the two-phase simplex method.

    An optimal solution is recomputed from the final basis and checked against
    every constraint and bound of the program.

    Raises:
        MalformedProgramError: if the program is not well formed.
        SolverError: if the pivot limit is reached, or if the final basis
            breaks a constraint by more than FEASIBILITY_TOL.

    """
    program.validate()
    n = program.num_variables
    shift, substitution, upper_rows = _substitute_bounds(program)
    ny = substitution.shape[1]

    rows: list[np.ndarray] = []
    relations: list[Relation] = []
    rhs: list[float] = []
    for constraint in program.constraints:
        rows.append(constraint.coefficients @ substitution)
        relations.append(constraint.relation)
        rhs.append(constraint.rhs - float(constraint.coefficients @ shift))
    for k, limit in upper_rows:
        row = np.zeros(ny)
        row[k] = 1.0
        rows.append(row)
        relations.append(Relation.LE)
        rhs.append(limit)

    # Make every right-hand side nonnegative.
    for i in range(len(rows)):
        if rhs[i] < 0:
            rows[i] = -rows[i]
            rhs[i] = -rhs[i]
            if relations[i] is Relation.LE:
                relations[i] = Relation.GE
            elif relations[i] is Relation.GE:
                relations[i] = Relation.LE

    m = len(rows)
    num_slack = sum(1 for r in relations if r is not Relation.EQ)
    num_art = sum(1 for r in relations if r is not Relation.LE)
    art_start = ny + num_slack
    width = art_start + num_art

    matrix = np.zeros((m, width))
    basis: list[int] = []
    slack = ny
    art = art_start
    for i in range(m):
        matrix[i, :ny] = rows[i]
        if relations[i] is Relation.LE:
            matrix[i, slack] = 1.0
            basis.append(slack)
            slack += 1
        elif relations[i] is Relation.GE:
            matrix[i, slack] = -1.0
            matrix[i, art] = 1.0
            basis.append(art)
            slack += 1
            art += 1
        else:
            matrix[i, art] = 1.0
            basis.append(art)
            art += 1
    b = np.array(rhs, dtype=float)

    tableau = np.zeros((m + 1, width + 1))
    tableau[:m, :width] = matrix
    tableau[:m, -1] = b

    if max_iterations is None:
        max_iterations = max(10_000, 50 * (m + width))

    log.debug(f"Solving LP with {n} variables, {m} rows, {num_art} artificials")

    objective = np.zeros(width)
    objective[:ny] = program.objective @ substitution

    # Phase one: minimise the sum of the artificial variables.
    iterations = 0
    if num_art:
        phase_one = np.zeros(width)
        phase_one[art_start:] = 1.0
        system = _System(matrix, b, phase_one)
        _refresh(tableau, basis, system)
        _, iterations = _run_simplex(tableau, basis, system, pivot_rule, max_iterations)
        residual = float(sum(abs(tableau[i, -1]) for i, j in enumerate(basis) if j >= art_start))
        if residual > FEASIBILITY_TOL:
            log.debug(f"Phase one residual {residual:g}, program infeasible")
            return LpSolution(LpStatus.INFEASIBLE, np.full(n, np.nan), math.nan, iterations)

        keep = []
        for i in range(m):
            if basis[i] >= art_start:
                entries = np.abs(tableau[i, :art_start])
                limit = PIVOT_TOL * max(1.0, float(entries.max(initial=0.0)))
                if not np.any(entries > limit):
                    continue
                col = int(np.argmax(entries))
                _pivot(tableau, i, col)
                basis[i] = col
            keep.append(i)
        if len(keep) < m:
            log.debug(f"Dropping {m - len(keep)} redundant equality rows")
        columns = list(range(art_start)) + [width]
        tableau = tableau[np.ix_(keep + [m], columns)]
        basis = [basis[i] for i in keep]
        system = _System(matrix[np.ix_(keep, range(art_start))], b[keep], objective[:art_start])
    else:
        system = _System(matrix, b, objective)

    # Phase two: the original objective over the feasible basis.
    _refresh(tableau, basis, system)
    status, more = _run_simplex(tableau, basis, system, pivot_rule, max_iterations)
    iterations += more
    if status is LpStatus.UNBOUNDED:
        return LpSolution(LpStatus.UNBOUNDED, np.full(n, np.nan), -math.inf, iterations)

    y = np.zeros(tableau.shape[1] - 1)
    for i, j in enumerate(basis):
        y[j] = tableau[i, -1]
    y = y[:ny]
    y[y < ZERO_SNAP] = 0.0
    values = shift + substitution @ y

    violation = program.max_violation(values)
    if violation > FEASIBILITY_TOL:
        raise SolverError(f"optimal basis breaks a constraint by {violation:.3g}")

    value = float(program.objective @ values)
    log.debug(f"LP optimal after {iterations} pivots, objective {value:.12g}")
    return LpSolution(LpStatus.OPTIMAL, values, value, iterations)


class ProgramBuilder:
    """Allocate variables and sparse constraints, then build a LinearProgram."""

    def __init__(self) -> None:
        self._costs: list[float] = []
        self._bounds: list[tuple[float, float]] = []
        self._names: list[str] = []
        self._rows: list[tuple[dict[int, float], Relation, float]] = []

    @property
    def num_variables(self) -> int:
        return len(self._costs)

    @property
    def num_constraints(self) -> int:
        return len(self._rows)

    def add_variables(
        self,
        count: int,
        cost: float | Sequence[float] | np.ndarray = 0.0,
        lower: float = 0.0,
        upper: float = math.inf,
        name: str = "v",
    ) -> list[int]:
        """Allocate count variables and return their indices."""
        costs = np.broadcast_to(np.asarray(cost, dtype=float), (count,))
        start = len(self._costs)
        self._costs.extend(float(c) for c in costs)
        self._bounds.extend([(lower, upper)] * count)
        self._names.extend(f"{name}[{i}]" for i in range(count))
        return list(range(start, start + count))

    def set_bounds(self, j: int, lower: float, upper: float) -> None:
        self._bounds[j] = (float(lower), float(upper))

    def add_constraint(self, terms: Mapping[int, float], relation: Relation | str, rhs: float) -> None:
        self._rows.append((dict(terms), Relation(relation), float(rhs)))

    def build(self) -> LinearProgram:
        program = LinearProgram(
            np.array(self._costs, dtype=float),
            bounds=list(self._bounds),
            names=list(self._names),
        )
        for terms, relation, rhs in self._rows:
            program.add_constraint(terms, relation, rhs)
        return program
