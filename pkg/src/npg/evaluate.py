"""Estimation-error and graph-selection metrics."""

from dataclasses import dataclass

import numpy as np

from .base import GraphSelection
from .errors import DimensionMismatch
from .linalg import matrix_norm
from .simulate import GroundTruth

SIGN_TOL = 1e-8


@dataclass(frozen=True)
class EvalReport:
    err_op2: float
    err_op1: float
    err_fro: float
    err_max: float
    fp: int
    fn: int
    sign_consistent: bool
    selected: int = 0

    def as_dict(self):
        return {"op2": self.err_op2, "op1": self.err_op1, "fro": self.err_fro,
                "max": self.err_max, "fp": self.fp, "fn": self.fn,
                "sign_consistent": int(self.sign_consistent)}


def _theta_star(truth):
    return truth.theta_star if isinstance(truth, GroundTruth) else np.asarray(truth, dtype=float)


def estimation_error(theta_hat, truth, which="op2"):
    """``matrix_norm(theta_hat - theta_star, which)``."""
    theta_hat = np.asarray(theta_hat, dtype=float)
    ts = _theta_star(truth)
    if theta_hat.shape != ts.shape:
        raise DimensionMismatch("estimate is %s, truth is %s" % (theta_hat.shape, ts.shape))
    return matrix_norm(theta_hat - ts, which)


def selection_counts(selected, truth):
    """``(fp, fn)`` over unordered off-diagonal pairs."""
    true_g = truth.support if isinstance(truth, GroundTruth) else truth
    if selected.p != true_g.p:
        raise DimensionMismatch("graphs on %d and %d nodes" % (selected.p, true_g.p))
    return len(selected.edges - true_g.edges), len(true_g.edges - selected.edges)


def sign_consistency(theta_hat, truth, tol=SIGN_TOL):
    """True iff off-diagonal signs match on the true support and vanish off it."""
    theta_hat = np.asarray(theta_hat, dtype=float)
    ts = _theta_star(truth)
    off = ~np.eye(ts.shape[0], dtype=bool)
    on = off & (ts != 0.0)
    if np.any(np.abs(theta_hat[on]) <= tol):
        return False
    if np.any(np.sign(theta_hat[on]) != np.sign(ts[on])):
        return False
    return bool(np.all(np.abs(theta_hat[off & (ts == 0.0)]) <= tol))


def evaluate(theta_hat, selected, truth):
    """Full report for one estimate; ``selected`` defaults to the support of ``theta_hat``."""
    if selected is None:
        selected = GraphSelection.from_matrix(theta_hat, tol=SIGN_TOL)
    fp, fn = selection_counts(selected, truth)
    return EvalReport(
        estimation_error(theta_hat, truth, "op2"),
        estimation_error(theta_hat, truth, "op1"),
        estimation_error(theta_hat, truth, "fro"),
        estimation_error(theta_hat, truth, "max"),
        fp, fn, sign_consistency(theta_hat, truth), len(selected))


def mean_se(values):
    """Mean and standard error ``sd / sqrt(reps)`` (sample sd, ``ddof=1``)."""
    v = np.asarray(values, dtype=float)
    if v.size == 0:
        return np.nan, np.nan
    se = v.std(ddof=1) / np.sqrt(v.size) if v.size > 1 else 0.0
    return float(v.mean()), float(se)
