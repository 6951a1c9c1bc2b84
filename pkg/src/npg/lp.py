"""Dense tableau simplex and the weighted l1 "tube" linear program.

Two solvers share one tableau layout (constraint rows, then the reduced-cost
row; right-hand side in the last column):

* :func:`solve_standard_form` -- two-phase primal simplex with Bland's rule
  for ``min c'x  s.t.  A x = b, x >= 0``.
* :func:`solve_l1_tube` / :class:`TubeSolver` -- the problem
  ``min ||w o beta||_1  s.t.  |A beta - b| <= t`` written with
  ``beta = u - v`` and two slack blocks. The all-slack basis is dual feasible
  because ``w > 0``, so a dual simplex (Bland-type smallest-index rules)
  needs no phase 1 and can be warm-started when ``t`` shrinks along a
  regularization path.
"""

import enum
from dataclasses import dataclass

import numpy as np
from numba import njit

from .errors import DimensionMismatch, InvalidInput, LPError

FEAS_TOL = 1e-9
PIVOT_TOL = 1e-9


class LpStatus(enum.Enum):
    OPTIMAL = "Optimal"
    INFEASIBLE = "Infeasible"
    UNBOUNDED = "Unbounded"
    ITERATION_LIMIT = "IterationLimit"


_RULES = {"bland": 0, "dantzig": 1}
_STATUS = {0: LpStatus.OPTIMAL, 1: LpStatus.INFEASIBLE, 2: LpStatus.UNBOUNDED,
           3: LpStatus.ITERATION_LIMIT}


@dataclass
class LpSolution:
    x: np.ndarray
    objective: float
    status: LpStatus
    iterations: int = 0

    @property
    def optimal(self):
        return self.status is LpStatus.OPTIMAL

    def raise_for_status(self):
        if not self.optimal:
            raise LPError(self.status)
        return self


@dataclass(frozen=True)
class L1ConstrainedProblem:
    """``min sum_j w_j |beta_j|  s.t.  |A beta - b| <= t`` entrywise."""

    A: np.ndarray
    b: np.ndarray
    tube_widths: np.ndarray
    objective_weights: np.ndarray = None

    def __post_init__(self):
        A = np.atleast_2d(np.asarray(self.A, dtype=float))
        m, q = A.shape
        b = np.asarray(self.b, dtype=float).reshape(-1)
        t = np.broadcast_to(np.asarray(self.tube_widths, dtype=float), (m,)).copy()
        w = self.objective_weights
        w = np.ones(q) if w is None else np.broadcast_to(np.asarray(w, dtype=float), (q,)).copy()
        if b.shape != (m,):
            raise DimensionMismatch("b has length %d, A has %d rows" % (b.size, m))
        if np.any(t < 0) or not np.all(np.isfinite(t)):
            raise InvalidInput("tube widths must be finite and nonnegative")
        if np.any(w <= 0) or not np.all(np.isfinite(w)):
            raise InvalidInput("objective weights must be finite and positive")
        if not (np.all(np.isfinite(A)) and np.all(np.isfinite(b))):
            raise InvalidInput("A and b must be finite")
        object.__setattr__(self, "A", A)
        object.__setattr__(self, "b", b)
        object.__setattr__(self, "tube_widths", t)
        object.__setattr__(self, "objective_weights", w)


# ---------------------------------------------------------------------------
# kernels


@njit(cache=True)
def _pivot(T, r, j):
    piv = T[r, j]
    ncol = T.shape[1]
    for k in range(ncol):
        T[r, k] /= piv
    T[r, j] = 1.0
    for i in range(T.shape[0]):
        if i == r:
            continue
        f = T[i, j]
        if f != 0.0:
            for k in range(ncol):
                T[i, k] -= f * T[r, k]
            T[i, j] = 0.0


@njit(cache=True)
def _primal_bland(T, basis, ncols, max_iter, tol, ptol):
    """Primal simplex, Bland's rule. Columns >= ncols are never entered.

    Returns (status, iterations); status 0 optimal, 2 unbounded, 3 limit.
    """
    m = T.shape[0] - 1
    rhs = T.shape[1] - 1
    it = 0
    while True:
        j = -1
        for k in range(ncols):
            if T[m, k] < -tol:
                j = k
                break
        if j < 0:
            return 0, it
        if it >= max_iter:
            return 3, it
        r = -1
        best = 0.0
        for i in range(m):
            a = T[i, j]
            if a > ptol:
                ratio = T[i, rhs] / a
                if r < 0 or ratio < best - 1e-12 * (1.0 + abs(best)):
                    r = i
                    best = ratio
                elif ratio <= best + 1e-12 * (1.0 + abs(best)) and basis[i] < basis[r]:
                    r = i
                    best = ratio
        if r < 0:
            return 2, it
        _pivot(T, r, j)
        basis[r] = j
        it += 1


@njit(cache=True)
def _dual_simplex(T, basis, ncols, max_iter, tol, ptol, rule):
    """Dual simplex from a dual-feasible basis.

    Leaving row (``rule == 0``, Bland): the infeasible row whose basic
    variable has the smallest index. ``rule == 1`` takes the most infeasible
    row instead and falls back to the Bland choice for good after 50
    consecutive degenerate pivots. Entering column: minimum ratio
    ``d_j / -T[r, j]``, smallest index on ties. Returns (status, iterations);
    status 1 means primal infeasible.
    """
    m = T.shape[0] - 1
    rhs = T.shape[1] - 1
    it = 0
    stall = 0
    while True:
        r = -1
        if rule == 1 and stall < 50:
            worst = -tol
            for i in range(m):
                if T[i, rhs] < worst:
                    r = i
                    worst = T[i, rhs]
        else:
            for i in range(m):
                if T[i, rhs] < -tol:
                    if r < 0 or basis[i] < basis[r]:
                        r = i
        if r < 0:
            return 0, it
        if it >= max_iter:
            return 3, it
        j = -1
        best = 0.0
        for k in range(ncols):
            a = T[r, k]
            if a < -ptol:
                d = T[m, k]
                if d < 0.0:
                    d = 0.0
                ratio = d / -a
                if j < 0 or ratio < best - 1e-12 * (1.0 + best):
                    j = k
                    best = ratio
        if j < 0:
            return 1, it
        if best > 0.0:
            stall = 0
        else:
            stall += 1
        _pivot(T, r, j)
        basis[r] = j
        it += 1


# ---------------------------------------------------------------------------
# standard form


def _iteration_cap(rows, cols):
    return 50 * (rows + cols)


def solve_standard_form(c, A_eq, b_eq, max_iter=None, tol=FEAS_TOL):
    """Minimize ``c'x`` subject to ``A_eq x = b_eq``, ``x >= 0``.

    Two-phase primal simplex with Bland's rule on a dense tableau. Rows are
    sign-normalized so ``b_eq >= 0``; existing unit columns seed the initial
    basis and artificial variables cover the remaining rows. Redundant rows
    are dropped when an artificial cannot be pivoted out after phase 1.
    """
    c = np.asarray(c, dtype=float).reshape(-1)
    A = np.atleast_2d(np.asarray(A_eq, dtype=float)).copy()
    b = np.asarray(b_eq, dtype=float).reshape(-1).copy()
    m, n = A.shape
    if c.size != n or b.size != m:
        raise DimensionMismatch("inconsistent LP dimensions")
    if max_iter is None:
        max_iter = _iteration_cap(m, n)
    neg = b < 0
    A[neg] *= -1.0
    b[neg] *= -1.0

    # seed the basis with unit columns where available
    basis = np.full(m, -1, dtype=np.int64)
    nz = A != 0.0
    for j in range(n):
        col = nz[:, j]
        if col.sum() == 1:
            i = int(np.flatnonzero(col)[0])
            if basis[i] < 0 and A[i, j] == 1.0:
                basis[i] = j
    art_rows = np.flatnonzero(basis < 0)
    na = art_rows.size

    T = np.zeros((m + 1, n + na + 1))
    T[:m, :n] = A
    T[:m, -1] = b
    for k, i in enumerate(art_rows):
        T[i, n + k] = 1.0
        basis[i] = n + k

    iterations = 0
    if na:
        # phase 1: minimize the sum of artificials
        T[m, :] = 0.0
        T[m, n:n + na] = 1.0
        for i in art_rows:
            T[m, :] -= T[i, :]
        status, it = _primal_bland(T, basis, n + na, max_iter, tol, PIVOT_TOL)
        iterations += it
        if status == 3:
            return LpSolution(np.full(n, np.nan), np.nan, LpStatus.ITERATION_LIMIT, iterations)
        if -T[m, -1] > tol * max(1.0, np.max(b, initial=0.0)):
            return LpSolution(np.full(n, np.nan), np.nan, LpStatus.INFEASIBLE, iterations)
        keep = np.ones(m, dtype=bool)
        for i in range(m):
            if basis[i] >= n:
                cand = np.flatnonzero(np.abs(T[i, :n]) > PIVOT_TOL)
                if cand.size:
                    _pivot(T, i, int(cand[0]))
                    basis[i] = int(cand[0])
                else:
                    keep[i] = False
        rows = np.concatenate([np.flatnonzero(keep), [m]])
        T = np.ascontiguousarray(np.delete(T[rows], np.s_[n:n + na], axis=1))
        basis = basis[keep]
        m = basis.size

    # phase 2 objective row
    T[m, :n] = c
    T[m, -1] = 0.0
    cb = c[basis]
    T[m, :] -= cb @ T[:m, :]
    status, it = _primal_bland(T, basis, n, max(max_iter - iterations, 0), tol, PIVOT_TOL)
    iterations += it
    x = np.zeros(n)
    x[basis] = T[:m, -1]
    x[np.abs(x) < 1e-14] = 0.0
    st = _STATUS[status]
    if st is not LpStatus.OPTIMAL:
        return LpSolution(x, np.nan, st, iterations)
    return LpSolution(x, float(c @ x), st, iterations)


# ---------------------------------------------------------------------------
# l1 tube problems


class TubeSolver:
    """Warm-startable solver for a family of tube problems sharing ``A, b, w``.

    Successive calls to :meth:`solve` with different tube widths reuse the
    previous optimal basis; decreasing widths along a path typically need
    only a few dual pivots each. Columns of ``A`` are scaled to unit max-abs
    internally.
    """

    def __init__(self, A, b, objective_weights=None, max_iter=None, rule="bland"):
        A = np.atleast_2d(np.asarray(A, dtype=float))
        m, q = A.shape
        b = np.asarray(b, dtype=float).reshape(-1)
        w = np.ones(q) if objective_weights is None else np.asarray(objective_weights, dtype=float)
        if b.size != m or w.size != q:
            raise DimensionMismatch("inconsistent tube problem dimensions")
        scale = np.max(np.abs(A), axis=0)
        scale[scale == 0.0] = 1.0
        self.A = A
        self.b = b
        self.weights = w
        self.scale = scale
        self.m, self.q = m, q
        As = A / scale
        ncols = 2 * q + 2 * m
        self._ncols = ncols
        self._T0 = np.zeros((2 * m + 1, ncols + 1))
        T0 = self._T0
        T0[:m, :q] = As
        T0[:m, q:2 * q] = -As
        T0[m:2 * m, :q] = -As
        T0[m:2 * m, q:2 * q] = As
        T0[np.arange(2 * m), 2 * q + np.arange(2 * m)] = 1.0
        T0[2 * m, :q] = w / scale
        T0[2 * m, q:2 * q] = w / scale
        self.max_iter = _iteration_cap(2 * m, ncols) if max_iter is None else max_iter
        if rule not in _RULES:
            raise ValueError("rule must be one of %s" % sorted(_RULES))
        self._rule = _RULES[rule]
        self.reset()

    def reset(self):
        self._T = self._T0.copy()
        self._basis = 2 * self.q + np.arange(2 * self.m, dtype=np.int64)

    def _rhs0(self, t):
        return np.concatenate([self.b + t, t - self.b])

    def _refactor(self, rhs0):
        m2 = 2 * self.m
        B = self._T0[:m2, :self._ncols][:, self._basis]
        T = self._T0.copy()
        T[:m2, -1] = rhs0
        T[:m2] = np.linalg.solve(B, T[:m2])
        cb = self._T0[m2, self._basis]
        T[m2] -= cb @ T[:m2]
        self._T = T

    def solve(self, tube_widths):
        t = np.broadcast_to(np.asarray(tube_widths, dtype=float), (self.m,))
        if np.any(t < 0):
            raise InvalidInput("tube widths must be nonnegative")
        q, m2 = self.q, 2 * self.m
        if np.all(np.abs(self.b) <= t):
            # zero is feasible and l1-minimal
            self.reset()
            self._T[:m2, -1] = self._rhs0(t)
            return LpSolution(np.zeros(q), 0.0, LpStatus.OPTIMAL, 0)
        rhs0 = self._rhs0(t)
        T = self._T
        # columns of the initial slack identity hold B^{-1}
        binv = T[:m2, 2 * q:2 * q + m2]
        T[:m2, -1] = binv @ rhs0
        status, it = _dual_simplex(T, self._basis, self._ncols, self.max_iter, FEAS_TOL,
                                  PIVOT_TOL, self._rule)
        if status == 0 and not self._feasible(t):
            self._refactor(rhs0)
            status, it2 = _dual_simplex(self._T, self._basis, self._ncols, self.max_iter,
                                        FEAS_TOL, PIVOT_TOL, self._rule)
            it += it2
        beta = self._beta()
        st = _STATUS[status]
        if st is not LpStatus.OPTIMAL:
            self.reset()
            return LpSolution(beta, np.nan, st, it)
        return LpSolution(beta, float(self.weights @ np.abs(beta)), st, it)

    def _beta(self):
        q = self.q
        x = np.zeros(self._ncols)
        x[self._basis] = self._T[:-1, -1]
        beta = (x[:q] - x[q:2 * q]) / self.scale
        beta[np.abs(beta) < 1e-15] = 0.0
        return beta

    def _feasible(self, t, tol=1e-7):
        beta = self._beta()
        resid = np.abs(self.A @ beta - self.b) - t
        return np.max(resid, initial=-np.inf) <= tol * max(1.0, np.max(np.abs(self.b)))


def _tube_standard_form(A, b, t, w):
    m, q = A.shape
    I = np.eye(m)
    Z = np.zeros((m, m))
    A_eq = np.block([[A, -A, I, Z], [-A, A, Z, I]])
    b_eq = np.concatenate([b + t, t - b])
    c = np.concatenate([w, w, np.zeros(2 * m)])
    return c, A_eq, b_eq


def solve_l1_tube(problem, method="dual", max_iter=None, rule="bland"):
    """Solve ``min ||w o beta||_1  s.t.  |A beta - b| <= t``.

    ``method="dual"`` runs the dual simplex from the all-slack basis
    (:class:`TubeSolver`); ``method="primal"`` hands the same reformulation to
    :func:`solve_standard_form`. Returns an :class:`LpSolution` whose ``x`` is
    ``beta``; the zero vector is returned directly when ``|b| <= t``.
    """
    if not isinstance(problem, L1ConstrainedProblem):
        raise TypeError("expected an L1ConstrainedProblem")
    A, b, t, w = problem.A, problem.b, problem.tube_widths, problem.objective_weights
    q = A.shape[1]
    if np.all(np.abs(b) <= t):
        return LpSolution(np.zeros(q), 0.0, LpStatus.OPTIMAL, 0)
    if method == "dual":
        return TubeSolver(A, b, w, max_iter=max_iter, rule=rule).solve(t)
    if method != "primal":
        raise ValueError("method must be 'dual' or 'primal'")
    scale = np.max(np.abs(A), axis=0)
    scale[scale == 0.0] = 1.0
    c, A_eq, b_eq = _tube_standard_form(A / scale, b, t, w / scale)
    sol = solve_standard_form(c, A_eq, b_eq, max_iter=max_iter)
    beta = (sol.x[:q] - sol.x[q:2 * q]) / scale
    if not sol.optimal:
        return LpSolution(beta, np.nan, sol.status, sol.iterations)
    return LpSolution(beta, float(w @ np.abs(beta)), sol.status, sol.iterations)
