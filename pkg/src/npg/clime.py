"""Column-wise constrained l1 minimization (CLIME) and its adaptive version.

Column ``k`` of the estimate solves

    min ||w_k * theta||_1   subject to   |R theta - e_k| <= lam * w_k

with unit weights in the plain estimator. The adaptive estimator takes
``W = 1 / (|Theta_pilot| + 1/n)`` from a plain pilot fit. Columns are
assembled and symmetrized by keeping the smaller-magnitude entry of each
pair; an optional hard threshold then zeroes small off-diagonal entries.
"""

from dataclasses import dataclass

import numpy as np

from .base import PrecisionEstimate
from .errors import InvalidInput, LPError, PilotRequired, SingularSubmatrix
from .lp import LpStatus, TubeSolver
from .neighborhood import ZERO_TOL, _unpack, symmetrize_min_magnitude

__all__ = [
    "ClimeSettings", "clime_column", "clime_solve", "clime_path", "clime_raw",
    "symmetrize_min_magnitude", "hard_threshold", "clime_weights",
]


@dataclass(frozen=True)
class ClimeSettings:
    lam: float
    adaptive: bool = False
    lambda_pilot: float = None
    hard_threshold: float = None
    weights_from_symmetrized: bool = False

    def __post_init__(self):
        if not self.lam >= 0:
            raise InvalidInput("lambda must be nonnegative")
        if self.adaptive and self.lambda_pilot is None:
            raise PilotRequired("adaptive CLIME needs lambda_pilot")
        if self.lambda_pilot is not None and not self.lambda_pilot >= 0:
            raise InvalidInput("lambda_pilot must be nonnegative")
        if self.hard_threshold is not None and not self.hard_threshold >= 0:
            raise InvalidInput("hard threshold must be nonnegative")


def _column(solver, k, t):
    sol = solver.solve(t)
    if sol.status is not LpStatus.OPTIMAL:
        raise LPError(sol.status, "column %d: %s" % (k, sol.status.value))
    return np.where(np.abs(sol.x) <= ZERO_TOL, 0.0, sol.x), sol.iterations


def _solver(r, k, weights=None):
    e = np.zeros(r.shape[0])
    e[k] = 1.0
    return TubeSolver(r, e, objective_weights=weights)


def _check_zero_lambda(r, lam):
    if lam == 0 and np.linalg.matrix_rank(r) < r.shape[0]:
        raise SingularSubmatrix("lambda = 0 needs an invertible correlation matrix")


def clime_column(r, k, lam, weights=None):
    """Column ``k`` of the (adaptive if ``weights`` given) CLIME estimate."""
    r, _ = _unpack(r)
    p = r.shape[0]
    if not 0 <= k < p:
        raise InvalidInput("column %d outside 0..%d" % (k, p - 1))
    if lam < 0:
        raise InvalidInput("lambda must be nonnegative")
    _check_zero_lambda(r, lam)
    if weights is None:
        return _column(_solver(r, k), k, lam)[0]
    w = np.asarray(weights, dtype=float)
    return _column(_solver(r, k, w), k, lam * w)[0]


def clime_raw(r, lam, weights=None):
    """Unsymmetrized estimate: all ``p`` columns side by side.

    ``weights`` is an optional ``p x p`` matrix whose column ``k`` weights
    column ``k``'s problem. Returns ``(theta, total_pivots)``.
    """
    r, _ = _unpack(r)
    p = r.shape[0]
    _check_zero_lambda(r, lam)
    theta = np.zeros((p, p))
    its = 0
    for k in range(p):
        if weights is None:
            theta[:, k], it = _column(_solver(r, k), k, lam)
        else:
            w = weights[:, k]
            theta[:, k], it = _column(_solver(r, k, w), k, lam * w)
        its += it
    return theta, its


def clime_weights(theta, n):
    """Adaptive weight matrix ``1 / (|theta| + 1/n)``."""
    if n is None or n <= 0:
        raise InvalidInput("adaptive weights need the sample size n")
    return 1.0 / (np.abs(theta) + 1.0 / n)


def hard_threshold(theta, tau):
    """Zero the off-diagonal entries with ``|theta_ij| < tau``; the diagonal is kept."""
    theta = np.array(theta, dtype=float)
    off = ~np.eye(theta.shape[0], dtype=bool)
    theta[off & (np.abs(theta) < tau)] = 0.0
    return theta


def _finish(raw, s, tag, its, meta):
    theta = symmetrize_min_magnitude(raw)
    if s.hard_threshold is not None:
        theta = hard_threshold(theta, s.hard_threshold)
    meta = dict(meta, raw=raw)
    return PrecisionEstimate(theta, tag, float(s.lam), its, True, "min_magnitude", meta)


def clime_solve(r, settings, n=None):
    """CLIME estimate; adaptive when ``settings.adaptive`` is set.

    ``n`` (sample size for the adaptive weights) defaults to the value
    stored on a :class:`~npg.rank_corr.RankCorrEstimate` input.
    """
    if not isinstance(settings, ClimeSettings):
        settings = ClimeSettings(float(settings))
    mat, n = _unpack(r, n)
    if not settings.adaptive:
        raw, its = clime_raw(mat, settings.lam)
        return _finish(raw, settings, "CLIME", its, {})
    pilot, its0 = clime_raw(mat, settings.lambda_pilot)
    src = symmetrize_min_magnitude(pilot) if settings.weights_from_symmetrized else pilot
    W = clime_weights(src, n)
    raw, its = clime_raw(mat, settings.lam, W)
    return _finish(raw, settings, "ACLIME", its0 + its,
                   {"weights": W, "lambda_pilot": float(settings.lambda_pilot)})


def clime_path(r, lambdas, weights=None):
    """Unsymmetrized estimates along a descending ``lambdas`` list.

    Each column's LP is warm-started from the previous lambda. Returns a
    list of ``p x p`` arrays.
    """
    mat, _ = _unpack(r)
    p = mat.shape[0]
    out = [np.zeros((p, p)) for _ in lambdas]
    for k in range(p):
        w = None if weights is None else weights[:, k]
        solver = _solver(mat, k, w)
        for a, lam in enumerate(lambdas):
            t = lam if w is None else lam * w
            out[a][:, k] = _column(solver, k, t)[0]
    return out
