"""Spearman rank correlation and the sine-adjusted correlation matrix.

The adjusted matrix ``2 sin(pi * rho / 6)`` estimates the latent Gaussian
correlation of a nonparanormal vector without estimating the marginal
transformations. It is not forced to be positive definite.
"""

from dataclasses import dataclass, field

import numpy as np
from scipy.stats import kendalltau, rankdata

from .errors import ConstantColumnError, DimensionMismatch, DomainError, InvalidInput


@dataclass(frozen=True)
class DataMatrix:
    """An ``n x p`` block of observations with optional column names."""

    values: np.ndarray
    column_names: tuple = None

    def __post_init__(self):
        x = np.asarray(self.values, dtype=float)
        if x.ndim != 2:
            raise DimensionMismatch("data must be two-dimensional")
        if x.shape[0] < 3:
            raise InvalidInput("need at least 3 observations, got %d" % x.shape[0])
        if not np.all(np.isfinite(x)):
            raise InvalidInput("data contain non-finite values")
        names = self.column_names
        if names is not None:
            names = tuple(str(c) for c in names)
            if len(names) != x.shape[1]:
                raise DimensionMismatch("%d column names for %d columns" % (len(names), x.shape[1]))
        const = np.all(x == x[0], axis=0)
        if np.any(const):
            j = int(np.flatnonzero(const)[0])
            raise ConstantColumnError(names[j] if names is not None else j)
        object.__setattr__(self, "values", x)
        object.__setattr__(self, "column_names", names)

    @property
    def n(self):
        return self.values.shape[0]

    @property
    def p(self):
        return self.values.shape[1]

    def rows(self, index):
        return DataMatrix(self.values[index], self.column_names)


@dataclass(frozen=True)
class RankCorrEstimate:
    r_spearman: np.ndarray
    r_adjusted: np.ndarray
    n: int
    p: int
    kind: str = "spearman"
    column_names: tuple = field(default=None, compare=False)


def ranks(column):
    """Ranks ``1..n`` of a vector, ties receiving their average (mid) rank."""
    x = np.asarray(column, dtype=float)
    if x.ndim != 1 or x.size < 3:
        raise InvalidInput("ranks need a vector of length >= 3")
    if not np.all(np.isfinite(x)):
        raise InvalidInput("non-finite values cannot be ranked")
    if np.all(x == x[0]):
        raise ConstantColumnError(0)
    return rankdata(x, method="average")


def _rank_matrix(x, names=None):
    x = np.asarray(x, dtype=float)
    const = np.all(x == x[0], axis=0)
    if np.any(const):
        j = int(np.flatnonzero(const)[0])
        raise ConstantColumnError(names[j] if names is not None else j)
    return rankdata(x, method="average", axis=0)


def _pearson_matrix(r):
    # general Pearson formula: midranks make the n(n^2-1)/6 shortcut wrong
    c = r - r.mean(axis=0)
    c /= np.sqrt(np.sum(c * c, axis=0))
    m = c.T @ c
    m = np.triu(m, 1)
    m = m + m.T
    np.clip(m, -1.0, 1.0, out=m)
    np.fill_diagonal(m, 1.0)
    return m


def spearman_rho(x, y):
    """Spearman correlation: Pearson correlation of the midrank vectors."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if x.shape != y.shape:
        raise DimensionMismatch("x and y differ in length")
    rx, ry = ranks(x), ranks(y)
    return float(_pearson_matrix(np.column_stack([rx, ry]))[0, 1])


def adjust(rho):
    """Map a Spearman correlation to the latent Gaussian scale, ``2 sin(pi rho / 6)``."""
    rho = np.asarray(rho, dtype=float)
    if np.any(np.abs(rho) > 1.0) or not np.all(np.isfinite(rho)):
        raise DomainError("Spearman correlation must lie in [-1, 1]")
    out = 2.0 * np.sin(np.pi / 6.0 * rho)
    return float(out) if out.ndim == 0 else out


def adjust_kendall(tau):
    tau = np.asarray(tau, dtype=float)
    if np.any(np.abs(tau) > 1.0):
        raise DomainError("Kendall's tau must lie in [-1, 1]")
    return np.sin(np.pi / 2.0 * tau)


def _kendall_matrix(x):
    p = x.shape[1]
    m = np.eye(p)
    for i in range(p):
        for j in range(i + 1, p):
            m[i, j] = m[j, i] = kendalltau(x[:, i], x[:, j]).statistic
    return m


def rank_correlation_matrix(data, kind="spearman"):
    """Raw and adjusted rank correlation matrices of ``data`` (rows = samples).

    ``kind="kendall"`` swaps in Kendall's tau-b with the ``sin(pi tau / 2)``
    adjustment; Spearman is the default.
    """
    if not isinstance(data, DataMatrix):
        data = DataMatrix(data)
    x = data.values
    if kind == "spearman":
        raw = _pearson_matrix(_rank_matrix(x, data.column_names))
        adj = 2.0 * np.sin(np.pi / 6.0 * raw)
    elif kind == "kendall":
        raw = _kendall_matrix(x)
        adj = adjust_kendall(raw)
    else:
        raise ValueError("unknown rank correlation %r" % kind)
    np.fill_diagonal(adj, 1.0)
    return RankCorrEstimate(raw, adj, data.n, data.p, kind, data.column_names)


def sample_covariance(data):
    """Maximum-likelihood sample covariance (divisor ``n``) of centred columns."""
    x = data.values if isinstance(data, DataMatrix) else np.asarray(data, dtype=float)
    c = x - x.mean(axis=0)
    s = c.T @ c / x.shape[0]
    return np.triu(s) + np.triu(s, 1).T
