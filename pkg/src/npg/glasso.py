"""Graphical lasso on a (possibly indefinite) correlation-type matrix.

Solves ``min_{Theta > 0} -log det Theta + tr(R Theta) + lam * sum_{i != j} |theta_ij|``
by blockwise coordinate descent on the covariance estimate ``W``: each column
update is a lasso problem on the remaining ``p - 1`` coordinates, solved by
cyclic coordinate descent with soft-thresholding. The diagonal is not
penalized, so ``W_jj = r_jj`` throughout.
"""

from dataclasses import dataclass
import warnings

import numpy as np
from numba import njit

from .base import PrecisionEstimate
from .errors import InvalidInput, NumericalFailure
from .linalg import cholesky, symmetric, is_positive_definite

KKT_TOL = 1e-5
KKT_DIAG_TOL = 1e-7
POLISH_ROUNDS = 3


@dataclass(frozen=True)
class GlassoSettings:
    lam: float
    max_outer_sweeps: int = 200
    outer_tol: float = 1e-5
    inner_tol: float = 1e-7
    inner_max_iter: int = 1000

    def __post_init__(self):
        if not self.lam >= 0:
            raise InvalidInput("lambda must be nonnegative")
        if self.outer_tol <= 0 or self.inner_tol <= 0:
            raise InvalidInput("tolerances must be positive")


@njit(cache=True)
def lasso_cd(Q, c, lam, beta, tol, max_iter):
    """Minimize ``0.5 b'Qb - c'b + lam ||b||_1`` in place from ``beta``.

    ``Q`` must have a positive diagonal. Stops when no coordinate moves by
    more than ``tol``; returns the number of full passes.
    """
    q = c.shape[0]
    g = c - Q @ beta
    for it in range(max_iter):
        delta = 0.0
        for i in range(q):
            qii = Q[i, i]
            z = g[i] + qii * beta[i]
            if z > lam:
                new = (z - lam) / qii
            elif z < -lam:
                new = (z + lam) / qii
            else:
                new = 0.0
            d = new - beta[i]
            if d != 0.0:
                beta[i] = new
                for k in range(q):
                    g[k] -= d * Q[k, i]
                if abs(d) > delta:
                    delta = abs(d)
        if delta < tol:
            return it + 1
    return max_iter


@njit(cache=True)
def _glasso_sweeps(R, lam, W, B, max_sweeps, outer_tol, inner_tol, inner_max):
    p = R.shape[0]
    q = p - 1
    Q = np.empty((q, q))
    c = np.empty(q)
    beta = np.empty(q)
    idx = np.empty(q, dtype=np.int64)
    for sweep in range(max_sweeps):
        change = 0.0
        for j in range(p):
            k = 0
            for i in range(p):
                if i != j:
                    idx[k] = i
                    k += 1
            for a in range(q):
                ia = idx[a]
                c[a] = R[ia, j]
                beta[a] = B[ia, j]
                for b in range(q):
                    Q[a, b] = W[ia, idx[b]]
            lasso_cd(Q, c, lam, beta, inner_tol, inner_max)
            w12 = Q @ beta
            if R[j, j] - w12 @ beta <= 0.0:
                return sweep + 1, False, j
            for a in range(q):
                ia = idx[a]
                d = abs(w12[a] - W[ia, j])
                if d > change:
                    change = d
                W[ia, j] = w12[a]
                W[j, ia] = w12[a]
                B[ia, j] = beta[a]
        if change < outer_tol:
            return sweep + 1, True, -1
    return max_sweeps, False, -1


def _theta_from_blocks(R, W, B):
    p = R.shape[0]
    theta = np.zeros((p, p))
    for j in range(p):
        beta = B[:, j].copy()
        beta[j] = 0.0
        w12 = W[:, j].copy()
        w12[j] = 0.0
        t = 1.0 / (R[j, j] - w12 @ beta)
        theta[:, j] = -beta * t
        theta[j, j] = t
    return symmetric(0.5 * (theta + theta.T))


def glasso_objective(theta, r, lam):
    """Penalized negative log-likelihood; ``inf`` if ``theta`` is not PD."""
    theta = np.asarray(theta, dtype=float)
    try:
        L = cholesky(theta)
    except np.linalg.LinAlgError:
        return np.inf
    logdet = 2.0 * np.sum(np.log(np.diag(L)))
    off = np.abs(theta).sum() - np.abs(np.diag(theta)).sum()
    return float(-logdet + np.sum(r * theta) + lam * off)


def _validate(r, lam):
    r = symmetric(r, atol=1e-10)
    if np.any(np.diag(r) <= 0):
        raise InvalidInput("diagonal of the input matrix must be strictly positive")
    if lam == 0 and not is_positive_definite(r):
        raise InvalidInput("unpenalized problem is unbounded for an indefinite input")
    return r


def _dual_feasible_start(r, lam):
    """A positive definite ``W`` with ``W_ii = r_ii`` and ``|W_ij - r_ij| <= lam``.

    Column updates never decrease ``log det W`` from such a point, so the
    iterates stay positive definite. Two candidates are tried (uniform
    shrinkage of the off-diagonal part, and entrywise soft-thresholding)
    and the one with the larger smallest eigenvalue is kept; ``diag(r)`` is
    used if neither is positive definite.
    """
    d = np.diag(np.diag(r))
    off = r - d
    big = np.max(np.abs(off), initial=0.0)
    if big <= lam:
        return d.copy()
    shrink = d + (1.0 - lam / big) * off
    soft = d + np.sign(off) * np.maximum(np.abs(off) - lam, 0.0)
    best, best_eig = d.copy(), -np.inf
    for cand in (shrink, soft):
        eig = np.linalg.eigvalsh(cand)[0]
        if eig > best_eig:
            best, best_eig = cand, eig
    return best if best_eig > 0 else d.copy()


def _certified(theta, r, lam):
    try:
        box, sup, diag = kkt_residuals(theta, r, lam)
    except np.linalg.LinAlgError:
        return False
    return box <= KKT_TOL and sup <= KKT_TOL and diag <= KKT_DIAG_TOL


def glasso_solve(r, settings, start=None):
    """Graphical lasso estimate at ``settings.lam``.

    ``start`` is an optional ``(W, B)`` pair (covariance iterate and column
    regression coefficients) from a previous solve, used as a warm start.
    The returned estimate carries ``meta["W"]`` and ``meta["B"]`` for the
    same purpose. If the converged estimate misses the stationarity
    certificate of :func:`kkt_residuals` (``KKT_TOL`` off the diagonal,
    ``KKT_DIAG_TOL`` on it), sweeps resume with tolerances tightened tenfold,
    at most ``POLISH_ROUNDS`` times.
    """
    if not isinstance(settings, GlassoSettings):
        settings = GlassoSettings(float(settings))
    r = _validate(r, settings.lam)
    p = r.shape[0]
    if start is None:
        W = _dual_feasible_start(r, settings.lam)
        B = np.zeros((p, p))
    else:
        W, B = (np.array(a, dtype=float) for a in start)
    if p == 1:
        return PrecisionEstimate(1.0 / r, "Glasso", settings.lam, 0, True,
                                 meta={"W": r.copy(), "B": B})
    sweeps, converged, bad = _glasso_sweeps(
        r, float(settings.lam), W, B, settings.max_outer_sweeps,
        settings.outer_tol, settings.inner_tol, settings.inner_max_iter)
    if bad >= 0:
        raise NumericalFailure(
            "covariance iterate lost positive definiteness at column %d; the problem "
            "may be unbounded below at lambda %.4g for this indefinite input"
            % (bad, settings.lam))
    theta = _theta_from_blocks(r, W, B)
    outer, inner = settings.outer_tol, settings.inner_tol
    for _ in range(POLISH_ROUNDS):
        if not converged or _certified(theta, r, settings.lam):
            break
        outer, inner = outer * 0.1, inner * 0.1
        more, converged, bad = _glasso_sweeps(
            r, float(settings.lam), W, B, settings.max_outer_sweeps, outer, inner,
            settings.inner_max_iter)
        sweeps += more
        if bad >= 0:
            break
        theta = _theta_from_blocks(r, W, B)
    if not converged:
        warnings.warn("graphical lasso did not converge in %d sweeps" % sweeps, RuntimeWarning)
    return PrecisionEstimate(theta, "Glasso", settings.lam, sweeps, converged,
                             meta={"W": W, "B": B})


def glasso_path(r, lambdas, settings=None):
    """Warm-started solves along a strictly descending list of penalties."""
    lambdas = [float(l) for l in lambdas]
    if any(b >= a for a, b in zip(lambdas, lambdas[1:])) or min(lambdas) <= 0:
        raise InvalidInput("lambdas must be positive and strictly descending")
    base = settings or GlassoSettings(lambdas[0])
    out = []
    start = None
    for lam in lambdas:
        s = GlassoSettings(lam, base.max_outer_sweeps, base.outer_tol,
                           base.inner_tol, base.inner_max_iter)
        est = glasso_solve(r, s, start=start)
        start = (est.meta["W"], est.meta["B"])
        out.append(est)
    return out


def kkt_residuals(theta, r, lam):
    """Largest violations of the stationarity conditions at ``theta``.

    Returns ``(box, support, diag)``: the excess of ``|r_ij - W_ij|`` over
    ``lam`` off the diagonal, the mismatch ``|r_ij - W_ij - lam sign(theta_ij)|``
    on the support (``W = theta^{-1}``), and ``max |W_ii - r_ii|``.
    """
    W = np.linalg.inv(theta)
    p = theta.shape[0]
    off = ~np.eye(p, dtype=bool)
    g = r - W
    box = np.max(np.abs(g[off]) - lam, initial=-np.inf)
    supp = off & (np.abs(theta) > 1e-10)
    # stationarity: W_ij - r_ij = lam * sign(theta_ij) on the support
    sup = np.max(np.abs(-g - lam * np.sign(theta))[supp], initial=0.0)
    diag = np.max(np.abs(np.diag(g)))
    return float(max(box, 0.0)), float(sup), float(diag)
