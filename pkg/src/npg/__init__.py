"""Sparse precision-matrix and graph estimation from rank correlations."""

__version__ = "0.1.0"

from .base import GraphSelection, PrecisionEstimate
from .clime import ClimeSettings, clime_solve
from .estimators import ESTIMATOR_NAMES, get_estimator
from .glasso import GlassoSettings, glasso_path, glasso_solve
from .neighborhood import aggregate, nads_fit, nds_fit, reconstruct_precision, symmetrize_l1
from .rank_corr import DataMatrix, RankCorrEstimate, rank_correlation_matrix
from .simulate import ModelSpec, build_truth, sample_gaussian, apply_nonparanormal
from .tuning import cross_validate, lambda_grid, tune_and_fit
