"""Named estimator roster: input matrix, penalty path, final fit and edge selection.

Rank-based estimators (``R-`` prefix) run on the adjusted Spearman matrix.
The naive ones run on the sample covariance of the data they are given; the
neighborhood lasso ``MB`` is meant for latent Gaussian data only and has no
rank-based version, because the lasso objective is unbounded below when the
input matrix is indefinite.
"""

from dataclasses import dataclass, replace

import numpy as np

from .base import GraphSelection, PrecisionEstimate
from .clime import clime_path, clime_weights, symmetrize_min_magnitude, hard_threshold
from .errors import InvalidInput, NpgError
from .glasso import GlassoSettings, glasso_solve, lasso_cd
from .neighborhood import (L1_SYMMETRIZE_MAX_P, NeighborhoodFit, ZERO_TOL, _blocks,
                           aggregate, nads_path, nds_path, reconstruct_precision, symmetrize)
from .rank_corr import rank_correlation_matrix, sample_covariance
from .tuning import grid_from_max, lambda_grid

FAMILIES = ("glasso", "mb", "nds", "nads", "clime", "aclime")
PILOT_STEPS = 12


def _approach(lam_max, lam, steps=PILOT_STEPS):
    """Descending warm-start ladder ending exactly at ``lam``."""
    if lam >= lam_max or lam <= 0:
        return np.array([lam])
    grid = np.geomspace(lam_max, lam, steps)
    grid[-1] = lam
    return grid


def _offdiag_max(m):
    off = ~np.eye(m.shape[0], dtype=bool)
    return float(np.max(np.abs(m[off]), initial=0.0))


def _default_symmetrization(p):
    return "l1" if p <= L1_SYMMETRIZE_MAX_P else "min_magnitude"


@dataclass(frozen=True)
class Estimator:
    name: str
    family: str
    rank_based: bool
    selection: str = "support"
    symmetrization: str = None
    hard_threshold: float = None
    rank_kind: str = "spearman"
    oracle_only: bool = False

    @property
    def adaptive(self):
        return self.family in ("nads", "aclime")

    @property
    def neighborhood(self):
        return self.family in ("mb", "nds", "nads")

    def pilot(self):
        if not self.adaptive:
            raise InvalidInput("%s has no pilot" % self.name)
        fam = "nds" if self.family == "nads" else "clime"
        return replace(self, name=self.name + ":pilot", family=fam)

    # input ------------------------------------------------------------
    def matrix(self, data):
        """``(matrix, n)``: adjusted Spearman (rank-based) or sample covariance."""
        if self.rank_based:
            return rank_correlation_matrix(data, self.rank_kind).r_adjusted, data.n
        return sample_covariance(data), data.n

    # penalties ----------------------------------------------------------
    def _pilot_beta(self, m, n, pilot_lambda):
        fits = nds_path(m, _approach(_offdiag_max(m), pilot_lambda))[-1]
        return fits

    def _pilot_clime(self, m, pilot_lambda):
        return clime_path(m, _approach(_offdiag_max(m), pilot_lambda))[-1]

    def grid(self, m, n, size, ratio, pilot_lambda=None):
        if self.family == "nads":
            pilots = self._pilot_beta(m, n, pilot_lambda)
            lam_max = 0.0
            for f in pilots:
                _, rk, _ = _blocks(m, f.node)
                w = 1.0 / (np.abs(f.beta) + 1.0 / n)
                lam_max = max(lam_max, float(np.max(np.abs(rk) / w, initial=0.0)))
            return grid_from_max(lam_max, size, ratio)
        if self.family == "aclime":
            W = clime_weights(self._pilot_clime(m, pilot_lambda), n)
            # the zero column is feasible once lam * W_kk >= 1
            return grid_from_max(float(np.max(1.0 / np.diag(W))), size, ratio)
        return lambda_grid(m, size, ratio)

    # fitting ------------------------------------------------------------
    def path(self, m, n, grid, pilot_lambda=None):
        """Estimates along a descending ``grid``; a failed penalty yields its exception."""
        grid = [float(g) for g in grid]
        if self.family == "glasso":
            return self._glasso_path(m, grid)
        if self.family == "mb":
            return [self._from_fits(f, m) for f in _mb_path(m, grid)]
        if self.family == "nds":
            return [self._from_fits(f, m) for f in nds_path(m, grid)]
        if self.family == "nads":
            if pilot_lambda is None:
                raise InvalidInput("%s needs a pilot penalty" % self.name)
            pilots = self._pilot_beta(m, n, pilot_lambda)
            out = [self._from_fits(f, m) for f in nads_path(m, pilots, grid, n=n)]
            for e in out:
                if isinstance(e, PrecisionEstimate):
                    e.meta["lambda_pilot"] = pilot_lambda
            return out
        if self.family == "clime":
            return [self._from_clime(raw, lam) for raw, lam in zip(clime_path(m, grid), grid)]
        if self.family == "aclime":
            if pilot_lambda is None:
                raise InvalidInput("%s needs a pilot penalty" % self.name)
            W = clime_weights(self._pilot_clime(m, pilot_lambda), n)
            out = [self._from_clime(raw, lam, "ACLIME")
                   for raw, lam in zip(clime_path(m, grid, W), grid)]
            for e in out:
                e.meta["lambda_pilot"] = pilot_lambda
            return out
        raise InvalidInput("unknown family %r" % self.family)

    def fit(self, m, n, lam, pilot_lambda=None, grid=None):
        """Estimate at ``lam``, warm-started along ``grid`` (which must end at ``lam``)."""
        if grid is None or len(grid) == 0 or float(grid[-1]) != float(lam):
            if self.family == "glasso":
                grid = [lam]
            elif self.adaptive:
                top = self.grid(m, n, 2, 0.5, pilot_lambda)[0]
                grid = _approach(top, lam)
            else:
                grid = _approach(_offdiag_max(m), lam)
        est = self.path(m, n, grid, pilot_lambda)[-1]
        if isinstance(est, Exception):
            raise est
        return est

    def _glasso_path(self, m, grid):
        out = []
        start = None
        for lam in grid:
            try:
                est = glasso_solve(m, GlassoSettings(lam), start=start)
                start = (est.meta["W"], est.meta["B"])
                out.append(est)
            except NpgError as exc:
                out.append(exc)
                start = None
        return out

    def _from_fits(self, fits, m):
        try:
            raw = reconstruct_precision(fits, m)
        except NpgError as exc:
            return exc
        how = self.symmetrization or _default_symmetrization(m.shape[0])
        tag = {"mb": "MB", "nds": "NDS", "nads": "NADS"}[self.family]
        return PrecisionEstimate(symmetrize(raw, how), tag, fits[0].lam,
                                 sum(f.iterations for f in fits), True, how,
                                 meta={"raw": raw, "fits": fits})

    def _from_clime(self, raw, lam, tag="CLIME"):
        theta = symmetrize_min_magnitude(raw)
        if self.hard_threshold is not None:
            theta = hard_threshold(theta, self.hard_threshold)
        return PrecisionEstimate(theta, tag, lam, 0, True, "min_magnitude", meta={"raw": raw})

    # selection ----------------------------------------------------------
    def select(self, est):
        if self.selection in ("union", "intersection"):
            return aggregate(est.meta["fits"], self.selection, est.p)
        return GraphSelection.from_matrix(est.theta, tol=ZERO_TOL)


def _mb_path(s, grid):
    """Neighborhood lasso fits ``min 0.5 b'S_kk b - b's_k + lam ||b||_1`` per node and penalty."""
    p = s.shape[0]
    out = [[None] * p for _ in grid]
    for k in range(p):
        Sk, sk, idx = _blocks(s, k)
        Sk = np.ascontiguousarray(Sk)
        sk = np.ascontiguousarray(sk)
        beta = np.zeros(p - 1)
        for a, lam in enumerate(grid):
            it = lasso_cd(Sk, sk, lam, beta, 1e-9, 10000)
            b = np.where(np.abs(beta) <= ZERO_TOL, 0.0, beta)
            out[a][k] = NeighborhoodFit(k, b.copy(), tuple(int(j) for j in idx[b != 0]), lam,
                                        iterations=it)
    return out


_ROSTER = {}


def _register(est):
    _ROSTER[est.name] = est


for _prefix, _rank in (("", False), ("R-", True)):
    _register(Estimator(_prefix + "GLASSO", "glasso", _rank))
    _register(Estimator(_prefix + "NDS", "nds", _rank))
    _register(Estimator(_prefix + "NDS.au", "nds", _rank, "union"))
    _register(Estimator(_prefix + "NDS.ai", "nds", _rank, "intersection"))
    _register(Estimator(_prefix + "CLIME", "clime", _rank))
_register(Estimator("MB", "mb", False, oracle_only=True))
_register(Estimator("MB.au", "mb", False, "union", oracle_only=True))
_register(Estimator("MB.ai", "mb", False, "intersection", oracle_only=True))
_register(Estimator("R-NADS", "nads", True))
_register(Estimator("R-NADS.au", "nads", True, "union"))
_register(Estimator("R-NADS.ai", "nads", True, "intersection"))
_register(Estimator("R-ACLIME", "aclime", True))

ESTIMATOR_NAMES = tuple(_ROSTER)
RANK_BASED = tuple(n for n, e in _ROSTER.items() if e.rank_based)


def get_estimator(name, **options):
    """Look up a roster entry by name; ``options`` override its fields."""
    if name.startswith("R-MB"):
        raise InvalidInput(
            "%s is not available: the neighborhood lasso is ill-posed on the adjusted "
            "Spearman matrix, which can be indefinite; use R-NDS or R-NADS instead" % name)
    try:
        est = _ROSTER[name]
    except KeyError:
        raise InvalidInput("unknown estimator %r; expected one of %s"
                           % (name, ", ".join(ESTIMATOR_NAMES))) from None
    return replace(est, **options) if options else est


def fit_key(est):
    """Estimators sharing a key share one fit and differ only in edge selection."""
    return (est.family, est.rank_based, est.symmetrization, est.hard_threshold, est.rank_kind)
