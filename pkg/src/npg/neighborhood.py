"""Neighborhood Dantzig selector on a correlation-type matrix.

For each node ``k`` the coefficient vector solves

    min ||w * beta||_1   subject to   |R_(k) beta - r_(k)| <= lam * w

where ``R_(k)`` drops row and column ``k`` and ``r_(k)`` is column ``k``
without its diagonal entry. Unit weights give the plain selector; the
adaptive selector uses ``w = 1 / (|beta_pilot| + 1/n)`` from a plain pilot
fit. Coefficients are turned into a precision column estimate, and the
resulting (asymmetric) matrix is symmetrized.
"""

from dataclasses import dataclass
import logging

import numpy as np

from .base import GraphSelection, PrecisionEstimate
from .errors import (DimensionMismatch, InvalidInput, LPError, NonpositiveResidual,
                     SingularSubmatrix)
from .lp import LpStatus, TubeSolver, solve_standard_form
from .rank_corr import RankCorrEstimate

log = logging.getLogger(__name__)

ZERO_TOL = 1e-8
L1_SYMMETRIZE_MAX_P = 60


@dataclass
class NeighborhoodFit:
    node: int
    beta: np.ndarray
    support: tuple
    lam: float
    adaptive: bool = False
    weights: np.ndarray = None
    iterations: int = 0

    def __post_init__(self):
        if self.adaptive != (self.weights is not None):
            raise InvalidInput("weights must be given exactly when the fit is adaptive")

    def full_beta(self):
        """Length-``p`` coefficient vector with a zero at the node itself."""
        return np.insert(self.beta, self.node, 0.0)


def _unpack(r, n=None):
    if isinstance(r, RankCorrEstimate):
        return r.r_adjusted, (r.n if n is None else n)
    r = np.asarray(r, dtype=float)
    if r.ndim != 2 or r.shape[0] != r.shape[1]:
        raise DimensionMismatch("expected a square matrix")
    return r, n


def _blocks(r, k):
    p = r.shape[0]
    if not 0 <= k < p:
        raise InvalidInput("node %d outside 0..%d" % (k, p - 1))
    idx = np.delete(np.arange(p), k)
    return r[np.ix_(idx, idx)], r[idx, k], idx


def _check_invertible(Rk, k):
    if Rk.shape[0] and np.linalg.matrix_rank(Rk) < Rk.shape[0]:
        raise SingularSubmatrix("submatrix for node %d is singular; lambda = 0 is not allowed" % k)


def _make_fit(k, idx, sol, lam, weights=None):
    if sol.status is not LpStatus.OPTIMAL:
        raise LPError(sol.status, "node %d: %s" % (k, sol.status.value))
    beta = np.where(np.abs(sol.x) <= ZERO_TOL, 0.0, sol.x)
    support = tuple(int(j) for j in idx[beta != 0.0])
    return NeighborhoodFit(k, beta, support, float(lam), weights is not None,
                           weights, sol.iterations)


def adaptive_weights(beta, n):
    """``1 / (|beta| + 1/n)``; finite even where the pilot is exactly zero."""
    if n is None or n <= 0:
        raise InvalidInput("adaptive weights need the sample size n")
    return 1.0 / (np.abs(beta) + 1.0 / n)


def nds_fit(r, k, lam):
    """Plain Dantzig-selector fit for node ``k``."""
    if lam < 0:
        raise InvalidInput("lambda must be nonnegative")
    r, _ = _unpack(r)
    Rk, rk, idx = _blocks(r, k)
    if lam == 0:
        _check_invertible(Rk, k)
    sol = TubeSolver(Rk, rk).solve(lam)
    return _make_fit(k, idx, sol, lam)


def nads_fit(r, k, lambda_d, lambda_ad, n=None, pilot=None):
    """Adaptive fit for node ``k``: plain pilot at ``lambda_d``, then reweighted solve.

    ``pilot`` may supply an existing plain fit for this node to skip the
    pilot solve. ``n`` defaults to the sample size stored on ``r``.
    """
    if lambda_ad < 0:
        raise InvalidInput("lambda must be nonnegative")
    mat, n = _unpack(r, n)
    if pilot is None:
        pilot = nds_fit(mat, k, lambda_d)
    w = adaptive_weights(pilot.beta, n)
    Rk, rk, idx = _blocks(mat, k)
    if lambda_ad == 0:
        _check_invertible(Rk, k)
    sol = TubeSolver(Rk, rk, objective_weights=w).solve(lambda_ad * w)
    return _make_fit(k, idx, sol, lambda_ad, w)


def nds_path(r, lambdas):
    """Plain fits for every node along a descending ``lambdas`` list.

    Returns a list (one entry per lambda) of lists of ``p`` fits; each node
    warm-starts its LP from the previous lambda.
    """
    mat, _ = _unpack(r)
    p = mat.shape[0]
    out = [[None] * p for _ in lambdas]
    for k in range(p):
        Rk, rk, idx = _blocks(mat, k)
        solver = TubeSolver(Rk, rk)
        for a, lam in enumerate(lambdas):
            out[a][k] = _make_fit(k, idx, solver.solve(lam), lam)
    return out


def nads_path(r, pilots, lambdas_ad, n=None):
    """Adaptive fits for every node along ``lambdas_ad`` given plain ``pilots``."""
    mat, n = _unpack(r, n)
    p = mat.shape[0]
    out = [[None] * p for _ in lambdas_ad]
    for k in range(p):
        w = adaptive_weights(pilots[k].beta, n)
        Rk, rk, idx = _blocks(mat, k)
        solver = TubeSolver(Rk, rk, objective_weights=w)
        for a, lam in enumerate(lambdas_ad):
            out[a][k] = _make_fit(k, idx, solver.solve(lam * w), lam, w)
    return out


def reconstruct_precision(fits, r):
    """Asymmetric precision estimate whose column ``k`` comes from node ``k``'s fit.

    ``theta_kk = 1 / (beta' R_(k) beta - 2 beta' r_(k) + r_kk)`` and the rest
    of the column is ``-theta_kk * beta``.
    """
    mat, _ = _unpack(r)
    p = mat.shape[0]
    if len(fits) != p or sorted(f.node for f in fits) != list(range(p)):
        raise InvalidInput("need exactly one fit per node")
    theta = np.zeros((p, p))
    for f in fits:
        k = f.node
        Rk, rk, idx = _blocks(mat, k)
        b = f.beta
        resid = b @ Rk @ b - 2.0 * (b @ rk) + mat[k, k]
        if resid <= 1e-10:
            raise NonpositiveResidual(
                "residual variance %.3g for node %d is not positive" % (resid, k))
        t = 1.0 / resid
        theta[idx, k] = -t * b
        theta[k, k] = t
    return theta


def l1_asymmetry(candidate, theta):
    """Matrix l1 norm (largest absolute column sum) of ``candidate - theta``."""
    return float(np.max(np.sum(np.abs(candidate - theta), axis=0), initial=0.0))


def symmetrize_min_magnitude(theta):
    """Keep, for each pair, the entry of smaller magnitude; ties keep the upper one."""
    theta = np.asarray(theta, dtype=float)
    upper = np.triu(theta, 1)
    lower_t = np.triu(theta.T, 1)
    pick = np.where(np.abs(upper) <= np.abs(lower_t), upper, lower_t)
    return np.diag(np.diag(theta)) + pick + pick.T


def _l1_lp(theta):
    # each optimal pair value lies between theta_ij and theta_ji; write it
    # as theta_ij + alpha * (theta_ji - theta_ij), alpha in [0, 1]. Column j
    # then carries alpha * delta and column i carries (1 - alpha) * delta.
    p = theta.shape[0]
    iu, ju = np.triu_indices(p, 1)
    a = theta[iu, ju]
    b = theta[ju, iu]
    delta = np.abs(b - a)
    act = delta > 0
    iu, ju, a, b, delta = iu[act], ju[act], a[act], b[act], delta[act]
    N = delta.size
    if N == 0:
        return theta.copy()
    # variables: alpha (N), u (N) with alpha + u = 1, t, column slacks (p)
    nv = 2 * N + 1 + p
    A = np.zeros((p + N, nv))
    rhs = np.zeros(p + N)
    cols = np.arange(N)
    np.add.at(A, (ju, cols), delta)
    np.add.at(A, (iu, cols), -delta)
    np.add.at(rhs, iu, -delta)
    A[:p, 2 * N] = -1.0
    A[np.arange(p), 2 * N + 1 + np.arange(p)] = 1.0
    A[p + cols, cols] = 1.0
    A[p + cols, N + cols] = 1.0
    rhs[p:] = 1.0
    c = np.zeros(nv)
    c[2 * N] = 1.0
    sol = solve_standard_form(c, A, rhs)
    if sol.status is not LpStatus.OPTIMAL:
        raise LPError(sol.status, "symmetrization LP: %s" % sol.status.value)
    alpha = np.clip(sol.x[:N], 0.0, 1.0)
    out = symmetrize_min_magnitude(theta)
    vals = a + alpha * (b - a)
    out[iu, ju] = vals
    out[ju, iu] = vals
    return out


def symmetrize_l1(theta, max_p=L1_SYMMETRIZE_MAX_P):
    """Closest symmetric matrix to ``theta`` in matrix l1 norm.

    Solved exactly as a linear program for ``p <= max_p``. Larger inputs
    fall back to :func:`symmetrize_min_magnitude` with a logged warning.
    The result never does worse than the entrywise average or the
    min-magnitude candidate.
    """
    theta = np.asarray(theta, dtype=float)
    p = theta.shape[0]
    if np.array_equal(theta, theta.T):
        return theta.copy()
    mm = symmetrize_min_magnitude(theta)
    if p > max_p:
        log.warning("p=%d exceeds %d; using min-magnitude symmetrization", p, max_p)
        return mm
    best = _l1_lp(theta)
    for cand in (0.5 * (theta + theta.T), mm):
        if l1_asymmetry(cand, theta) < l1_asymmetry(best, theta) - 1e-12:
            best = cand
    return best


def symmetrize(theta, how):
    if how == "l1":
        return symmetrize_l1(theta)
    if how == "min_magnitude":
        return symmetrize_min_magnitude(theta)
    if how == "average":
        return 0.5 * (theta + theta.T)
    raise ValueError("unknown symmetrization %r" % how)


def aggregate(fits, mode="union", p=None):
    """Combine per-node supports into an undirected graph.

    ``fits`` is a list of :class:`NeighborhoodFit` or of index collections,
    entry ``k`` holding node ``k``'s support.
    """
    if mode not in ("union", "intersection"):
        raise ValueError("mode must be 'union' or 'intersection'")
    supports = [set(f.support) if isinstance(f, NeighborhoodFit) else set(f) for f in fits]
    p = len(supports) if p is None else p
    edges = set()
    for k, sk in enumerate(supports):
        for j in sk:
            if j == k:
                continue
            e = (min(j, k), max(j, k))
            back = k in supports[j]
            if mode == "union" or back:
                edges.add(e)
    return GraphSelection(p, frozenset(edges))


def estimate_from_fits(fits, r, symmetrization="l1", tag="NDS"):
    raw = reconstruct_precision(fits, r)
    theta = symmetrize(raw, symmetrization)
    lam = fits[0].lam if fits else 0.0
    return PrecisionEstimate(theta, tag, lam, sum(f.iterations for f in fits), True,
                             symmetrization, meta={"raw": raw, "fits": fits})


def nds_solve(r, lam, symmetrization="l1"):
    """All-node plain fits at ``lam``, reconstructed and symmetrized."""
    mat, _ = _unpack(r)
    fits = [nds_fit(mat, k, lam) for k in range(mat.shape[0])]
    return estimate_from_fits(fits, mat, symmetrization, "NDS")


def nads_solve(r, lambda_d, lambda_ad, n=None, symmetrization="l1"):
    mat, n = _unpack(r, n)
    fits = [nads_fit(mat, k, lambda_d, lambda_ad, n=n) for k in range(mat.shape[0])]
    est = estimate_from_fits(fits, mat, symmetrization, "NADS")
    est.meta["lambda_pilot"] = float(lambda_d)
    return est
