"""Penalty grids and K-fold cross-validation.

The CV loss is the Gaussian negative log-likelihood surrogate
``tr(R_test Theta) - log det Theta`` evaluated on the held-out rows'
correlation matrix (rank-based or sample covariance, matching the
estimator's own input). Estimates that are not positive definite are
scored after projecting their eigenvalues up to ``PD_FLOOR``.
"""

from dataclasses import dataclass, field
import logging

import numpy as np

from .errors import DegenerateGrid, InvalidInput, NpgError
from .linalg import clip_eigenvalues, cholesky
from .rank_corr import DataMatrix

log = logging.getLogger(__name__)

GRID_SIZE = 30
GRID_RATIO = 0.05
FOLDS = 5
PD_FLOOR = 1e-4


def grid_from_max(lam_max, size=GRID_SIZE, ratio=GRID_RATIO):
    """``size`` log-spaced values from ``lam_max`` down to ``ratio * lam_max``."""
    if size < 2:
        raise InvalidInput("grid size must be at least 2")
    if not 0 < ratio < 1:
        raise InvalidInput("grid ratio must lie in (0, 1)")
    if not lam_max > 0 or not np.isfinite(lam_max):
        raise DegenerateGrid("largest penalty is %r; nothing to regularize" % lam_max)
    grid = np.geomspace(lam_max, ratio * lam_max, size)
    grid[0] = lam_max
    return grid


def lambda_grid(r, size=GRID_SIZE, ratio=GRID_RATIO):
    """Descending grid starting at the largest off-diagonal ``|r_ij|``."""
    r = getattr(r, "r_adjusted", r)
    r = np.asarray(r, dtype=float)
    off = ~np.eye(r.shape[0], dtype=bool)
    return grid_from_max(float(np.max(np.abs(r[off]), initial=0.0)), size, ratio)


def kfold_indices(n, folds=FOLDS, seed=0):
    """Test-row index arrays of a seeded permutation split; sizes differ by at most one."""
    if folds < 2:
        raise InvalidInput("need at least 2 folds")
    if n < 2 * folds:
        raise InvalidInput("n=%d is too small for %d folds (need n >= 2 * folds)" % (n, folds))
    perm = np.random.Generator(np.random.Philox(np.random.SeedSequence([int(seed), 0xCF]))).permutation(n)
    return [np.sort(part) for part in np.array_split(perm, folds)]


def group_fold_indices(groups, folds=FOLDS, seed=0):
    """Test-row index arrays that keep rows sharing a group label in one fold.

    The distinct labels are split by :func:`kfold_indices`; used for
    bootstrap resamples, where copies of one observation must not sit on
    both sides of a split.
    """
    groups = np.asarray(groups)
    labels, inverse = np.unique(groups, return_inverse=True)
    parts = kfold_indices(labels.size, folds, seed)
    return [np.flatnonzero(np.isin(inverse, part)) for part in parts]


def cv_score(theta, r_test, floor=PD_FLOOR):
    """``(score, projected)``: held-out loss and whether a PD projection was needed."""
    theta = np.asarray(theta, dtype=float)
    projected = False
    try:
        L = cholesky(theta)
    except np.linalg.LinAlgError:
        theta = clip_eigenvalues(theta, floor)
        L = cholesky(theta)
        projected = True
    logdet = 2.0 * np.sum(np.log(np.diag(L)))
    return float(np.sum(r_test * theta) - logdet), projected


@dataclass
class CVResult:
    lambdas: np.ndarray
    scores: np.ndarray
    fold_scores: np.ndarray
    chosen: float
    chosen_index: int
    projected: np.ndarray = None
    excluded: list = field(default_factory=list)


def _pick(fold_scores):
    bad = np.any(~np.isfinite(fold_scores), axis=0)
    if np.all(bad):
        raise NpgError("every penalty failed on at least one fold")
    mean = np.full(fold_scores.shape[1], np.nan)
    mean[~bad] = fold_scores[:, ~bad].mean(axis=0)
    # nanargmin returns the first minimizer; the grid is descending so ties go to the larger lambda
    idx = int(np.nanargmin(mean))
    return mean, idx


def cross_validate(data, estimator, grid=None, folds=FOLDS, seed=0, size=GRID_SIZE,
                   ratio=GRID_RATIO, pilot_lambda=None, groups=None):
    """K-fold CV over a descending grid for one estimator.

    ``estimator`` follows the :class:`npg.estimators.Estimator` protocol.
    For adaptive estimators ``pilot_lambda`` fixes the pilot penalty and the
    grid is built from the full-data adaptive weights when not supplied.
    ``groups`` (one label per row) keeps rows with equal labels in the same
    fold.
    """
    if not isinstance(data, DataMatrix):
        data = DataMatrix(data)
    full, n = estimator.matrix(data)
    if grid is None:
        grid = estimator.grid(full, n, size, ratio, pilot_lambda)
    grid = np.asarray(grid, dtype=float)
    if np.any(np.diff(grid) >= 0):
        raise InvalidInput("grid must be strictly descending")
    if groups is None:
        test_sets = kfold_indices(data.n, folds, seed)
    else:
        if len(groups) != data.n:
            raise InvalidInput("need one group label per row")
        test_sets = group_fold_indices(groups, folds, seed)
    fold_scores = np.full((folds, grid.size), np.nan)
    projected = np.zeros((folds, grid.size), dtype=bool)
    all_rows = np.arange(data.n)
    for f, test in enumerate(test_sets):
        train = np.setdiff1d(all_rows, test)
        m_train, n_train = estimator.matrix(data.rows(train))
        m_test, _ = estimator.matrix(data.rows(test))
        for a, est in enumerate(estimator.path(m_train, n_train, grid, pilot_lambda)):
            if isinstance(est, Exception):
                log.info("%s: lambda %.4g failed on fold %d: %s", estimator.name, grid[a], f, est)
                continue
            fold_scores[f, a], projected[f, a] = cv_score(est.theta, m_test)
    if projected.any():
        log.info("%s: %d fold fits needed a PD projection for scoring",
                 estimator.name, int(projected.sum()))
    mean, idx = _pick(fold_scores)
    excluded = [float(grid[a]) for a in range(grid.size) if np.isnan(mean[a])]
    return CVResult(grid, mean, fold_scores, float(grid[idx]), idx, projected, excluded)


@dataclass
class TunedFit:
    estimate: object
    lam: float
    pilot_lambda: float = None
    cv: CVResult = None
    pilot_cv: CVResult = None


def tune_and_fit(data, estimator, folds=FOLDS, seed=0, size=GRID_SIZE, ratio=GRID_RATIO,
                 groups=None):
    """CV-tune ``estimator`` on ``data`` and refit on all rows.

    Adaptive estimators are tuned in two stages: the pilot penalty by CV of
    the plain estimator, then the adaptive penalty by CV with the pilot
    fixed.
    """
    if not isinstance(data, DataMatrix):
        data = DataMatrix(data)
    pilot_cv = None
    pilot_lambda = None
    if estimator.adaptive:
        pilot_cv = cross_validate(data, estimator.pilot(), folds=folds, seed=seed,
                                  size=size, ratio=ratio, groups=groups)
        pilot_lambda = pilot_cv.chosen
    cv = cross_validate(data, estimator, folds=folds, seed=seed, size=size, ratio=ratio,
                        pilot_lambda=pilot_lambda, groups=groups)
    full, n = estimator.matrix(data)
    grid = cv.lambdas[:cv.chosen_index + 1]
    est = estimator.fit(full, n, cv.chosen, pilot_lambda, grid=grid)
    return TunedFit(est, cv.chosen, pilot_lambda, cv, pilot_cv)
