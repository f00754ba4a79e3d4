"""
Solvers for the gram selection program

    solve_lp             LP relaxation through scipy's HiGHS backend
    round_deterministic  threshold rounding s_min / (s_max * m*)
    round_randomized     coordinate-wise coin flips against the LP values
    solve_ip_exact       dominance presolve, then exhaustive enumeration or
                         depth-first branch-and-bound on the LP bound
"""

import logging
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import linprog

from logic.config import EXHAUSTIVE_MAX_COLUMNS, LP_TOLERANCE, NODE_LIMIT, TIE_TOLERANCE
from logic.errors import IncompleteSearchError, InvariantViolation, SolverError

logger = logging.getLogger(__name__)

INTEGRALITY_TOLERANCE = 1e-6
ENUMERATION_CHUNK = 4096


@dataclass(frozen=True)
class FractionalSolution:
    x: np.ndarray
    objective: float
    status: int = 0
    iterations: int = 0
    problem: object = field(default=None, compare=False, repr=False)


@dataclass(frozen=True)
class BinarySolution:
    x: np.ndarray
    objective: float
    feasible: bool
    per_row_slack: np.ndarray
    nodes: int = 0

    def selected(self, grams):
        return tuple(g for g, bit in zip(grams, self.x) if bit)

    @property
    def violated_rows(self):
        return np.flatnonzero(self.per_row_slack < -LP_TOLERANCE)


def evaluate_binary(p, x, nodes=0):
    """Objective, slack and feasibility of a 0/1 vector"""
    x = np.asarray(x, dtype=np.int8)
    slack = p.A @ x.astype(float) - p.b if p.n_rows else np.zeros(0)
    return BinarySolution(
        x=x,
        objective=float(p.c @ x) if p.n_cols else 0.0,
        feasible=bool(np.all(slack >= -LP_TOLERANCE)),
        per_row_slack=slack,
        nodes=nodes,
    )


def _linprog(c, A, b, lower, upper):
    bounds = np.column_stack([lower, upper])
    if A.shape[0] == 0:
        return linprog(c, bounds=bounds, method="highs")
    return linprog(c, A_ub=-A, b_ub=-b, bounds=bounds, method="highs")


# ============================
# LP RELAXATION AND ROUNDING
# ============================

def solve_lp(p, tol=LP_TOLERANCE):
    """
    Solve the LP relaxation with 0 <= x <= 1

    Raises:
        InvariantViolation: the relaxation is infeasible (all-ones is always feasible
            for a well-formed instance)
        SolverError: any other non-optimal status
    """
    n = p.n_cols
    if n == 0:
        return FractionalSolution(np.zeros(0), 0.0, problem=p)

    res = _linprog(p.c, p.A, p.b, np.zeros(n), np.ones(n))
    if res.status == 2:
        raise InvariantViolation("LP relaxation is infeasible")
    if res.status != 0:
        raise SolverError(res.status, res.message)

    x = np.clip(res.x, 0.0, 1.0)
    if p.n_rows:
        residual = (p.A @ x - p.b).min()
        if residual < -tol * max(1.0, float(p.b.max())):
            raise SolverError("residual", f"constraint residual {residual:.3g} beyond tolerance")
    return FractionalSolution(x, float(p.c @ x), res.status, int(getattr(res, "nit", 0)), p)


def rounding_threshold(p):
    """s_min / (s_max * m*); rows with no columns make nothing worth rounding up"""
    if p.m_star == 0:
        return 1.0
    return p.s_min / (p.s_max * p.m_star)


def round_deterministic(xl, p=None):
    p = p if p is not None else xl.problem
    threshold = rounding_threshold(p)
    return evaluate_binary(p, (xl.x > threshold).astype(np.int8))


def round_randomized(xl, seed, p=None):
    """
    Keep each gram with probability equal to its LP value

    The draw u_g comes from numpy's default generator seeded with seed, so the
    same seed always yields the same vector. Rows may end up violated; see
    per_row_slack.
    """
    p = p if p is not None else xl.problem
    rng = np.random.default_rng(seed)
    u = rng.random(len(xl.x))
    return evaluate_binary(p, (xl.x >= u).astype(np.int8))


# ============================
# EXACT SOLVER
# ============================

def _tie_key(objective, x, grams):
    return (len(np.flatnonzero(x)), tuple(sorted(g for g, bit in zip(grams, x) if bit)))


class _Incumbent:
    """Best 0/1 vector so far under objective, then size, then sorted gram tuple"""

    def __init__(self, grams):
        self.grams = grams
        self.x = None
        self.objective = np.inf

    def offer(self, x, objective):
        if self.x is None or objective < self.objective - TIE_TOLERANCE:
            self.x, self.objective = x.copy(), objective
            return
        if objective <= self.objective + TIE_TOLERANCE:
            if _tie_key(objective, x, self.grams) < _tie_key(self.objective, self.x, self.grams):
                self.x, self.objective = x.copy(), min(objective, self.objective)


def _dominance_presolve(p, tol=TIE_TOLERANCE):
    """
    Columns that survive dominance on a covering instance

    v is dropped when some u covers every row of v and is cheaper, or equally
    cheap with a smaller gram. Columns without rows are dropped too.
    """
    csc = p.A.tocsc()
    rows_of = [frozenset(csc.indices[csc.indptr[j]:csc.indptr[j + 1]].tolist()) for j in range(p.n_cols)]
    c, grams = p.c, p.grams
    kept = []
    for v in range(p.n_cols):
        rv = rows_of[v]
        if not rv:
            continue
        dominated = False
        for u in p.row_columns(min(rv)):
            if u == v or not rv <= rows_of[u]:
                continue
            if c[u] < c[v] - tol or (abs(c[u] - c[v]) <= tol and grams[u] < grams[v]):
                dominated = True
                break
        if not dominated:
            kept.append(v)
    return np.array(kept, dtype=int)


def _enumerate(c, A, b, grams):
    k = len(c)
    best = _Incumbent(grams)
    shifts = np.arange(k)
    total = 1 << k
    for start in range(0, total, ENUMERATION_CHUNK):
        masks = np.arange(start, min(start + ENUMERATION_CHUNK, total), dtype=np.int64)
        X = ((masks[:, None] >> shifts) & 1).astype(float)
        if A.shape[0]:
            feasible = np.all((A @ X.T) >= (b[:, None] - LP_TOLERANCE), axis=0)
        else:
            feasible = np.ones(len(masks), dtype=bool)
        if not feasible.any():
            continue
        objectives = X[feasible] @ c
        low = objectives.min()
        for row in np.flatnonzero(objectives <= low + TIE_TOLERANCE):
            best.offer(X[feasible][row].astype(np.int8), float(objectives[row]))
    return best, total


def _branch_and_bound(c, A, b, grams, node_limit):
    n = len(c)
    best = _Incumbent(grams)
    ones = np.ones(n, dtype=np.int8)
    if A.shape[0] == 0 or np.all(A @ ones >= b - LP_TOLERANCE):
        best.offer(ones, float(c.sum()))

    stack = [(np.zeros(n), np.ones(n))]
    nodes = 0
    while stack:
        lower, upper = stack.pop()
        nodes += 1
        if nodes > node_limit:
            return best, nodes, False

        res = _linprog(c, A, b, lower, upper)
        if res.status == 2:
            continue
        if res.status != 0:
            raise SolverError(res.status, res.message)
        if res.fun > best.objective + LP_TOLERANCE:
            continue

        x = res.x
        distance = np.abs(x - np.round(x))
        if distance.max() <= INTEGRALITY_TOLERANCE:
            xi = np.round(x).astype(np.int8)
            objective = float(c @ xi)
            best.offer(xi, objective)
            # a tied optimum can still hide in this box; split on the first free variable
            free = np.flatnonzero(lower < upper)
            if free.size == 0 or objective > best.objective + TIE_TOLERANCE:
                continue
            j = int(free[0])
        else:
            # most fractional variable, lowest index on ties
            j = int(np.argmin(np.abs(x - 0.5)))
        down_upper = upper.copy()
        down_upper[j] = 0.0
        up_lower = lower.copy()
        up_lower[j] = 1.0
        stack.append((lower, down_upper))
        stack.append((up_lower, upper))
    return best, nodes, True


def solve_ip_exact(p, node_limit=NODE_LIMIT):
    """
    Optimal 0/1 selection

    Ties on the objective go to fewer grams, then to the lexicographically
    smallest sorted gram tuple.

    Raises:
        IncompleteSearchError: node_limit reached; the best incumbent is attached
    """
    n = p.n_cols
    if p.n_rows == 0 or n == 0:
        return evaluate_binary(p, np.zeros(n, dtype=np.int8))

    keep = _dominance_presolve(p) if p.is_cover() else np.arange(n)
    A = p.A[:, keep]
    c = p.c[keep]
    grams = tuple(p.grams[j] for j in keep)
    logger.debug("exact solve over %d of %d columns", len(keep), n)

    if len(keep) <= EXHAUSTIVE_MAX_COLUMNS:
        best, nodes = _enumerate(c, A, p.b, grams)
        complete = True
    else:
        best, nodes, complete = _branch_and_bound(c, A, p.b, grams, node_limit)

    x = np.zeros(n, dtype=np.int8)
    if best.x is not None:
        x[keep] = best.x
    solution = evaluate_binary(p, x, nodes)
    if not complete:
        raise IncompleteSearchError(solution if best.x is not None else None, nodes)
    if best.x is None:
        raise InvariantViolation("covering instance has no feasible 0/1 solution")
    return solution
