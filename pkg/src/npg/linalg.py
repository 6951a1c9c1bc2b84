"""Dense symmetric linear algebra: Cholesky, SPD inverse, eigenvalues, norms.

Matrices are plain ``numpy.ndarray`` objects. :func:`symmetric` is the
constructor-style validator used wherever a symmetric matrix is required:
it copies the upper triangle onto the lower one so that each pair is stored
once and ``a[i, j] == a[j, i]`` holds exactly.
"""

import numpy as np
from scipy.linalg import solve_triangular

from .errors import DimensionMismatch, InvalidInput, PositiveDefinitenessError

JACOBI_TOL = 1e-10
JACOBI_MAX_SWEEPS = 100


def _square(a):
    a = np.asarray(a, dtype=float)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise DimensionMismatch("expected a square matrix, got shape %s" % (a.shape,))
    if not np.all(np.isfinite(a)):
        raise InvalidInput("matrix has non-finite entries")
    return a


def symmetric(a, atol=None):
    """Return a symmetric copy of ``a`` built from its upper triangle.

    If ``atol`` is given, raise :class:`InvalidInput` when the two triangles
    differ by more than ``atol`` anywhere.
    """
    a = _square(a)
    if atol is not None and np.max(np.abs(a - a.T), initial=0.0) > atol:
        raise InvalidInput("matrix is not symmetric within %g" % atol)
    upper = np.triu(a)
    return upper + np.triu(a, 1).T


def cholesky(a):
    """Lower-triangular Cholesky factor ``L`` with ``L @ L.T == a``.

    Raises
    ------
    PositiveDefinitenessError
        If a pivot is ``<= 0``; ``err.index`` is the failing row.
    """
    a = symmetric(a)
    p = a.shape[0]
    L = np.zeros_like(a)
    for j in range(p):
        row = L[j, :j]
        d = a[j, j] - row @ row
        if not d > 0.0:
            raise PositiveDefinitenessError(j, d)
        L[j, j] = np.sqrt(d)
        if j + 1 < p:
            L[j + 1:, j] = (a[j + 1:, j] - L[j + 1:, :j] @ row) / L[j, j]
    return L


def is_positive_definite(a):
    try:
        cholesky(a)
    except PositiveDefinitenessError:
        return False
    return True


def inverse_spd(a):
    """Inverse of a symmetric positive definite matrix via :func:`cholesky`."""
    L = cholesky(a)
    p = L.shape[0]
    Linv = solve_triangular(L, np.eye(p), lower=True)
    return symmetric(Linv.T @ Linv)


def logdet_spd(a):
    L = cholesky(a)
    return 2.0 * float(np.sum(np.log(np.diag(L))))


def jacobi_eigenvalues(a, tol=JACOBI_TOL, max_sweeps=JACOBI_MAX_SWEEPS):
    """Eigenvalues of a symmetric matrix by cyclic Jacobi rotations.

    Sweeps stop once the off-diagonal Frobenius norm falls below
    ``tol * ||a||_F``. Returned unsorted (diagonal order).
    """
    A = symmetric(a).copy()
    p = A.shape[0]
    scale = np.linalg.norm(A)
    if p == 1 or scale == 0.0:
        return np.diag(A).copy()
    for _ in range(max_sweeps):
        off = np.sqrt(max(np.sum(A * A) - np.sum(np.diag(A) ** 2), 0.0))
        if off <= tol * scale:
            break
        for i in range(p - 1):
            for j in range(i + 1, p):
                aij = A[i, j]
                if abs(aij) <= 1e-300:
                    continue
                theta = (A[j, j] - A[i, i]) / (2.0 * aij)
                if abs(theta) > 1e150:
                    t = 0.5 / theta
                else:
                    t = np.copysign(1.0, theta) / (abs(theta) + np.sqrt(theta * theta + 1.0))
                c = 1.0 / np.sqrt(t * t + 1.0)
                s = t * c
                ci = A[:, i].copy()
                cj = A[:, j].copy()
                A[:, i] = c * ci - s * cj
                A[:, j] = s * ci + c * cj
                ri = A[i, :].copy()
                rj = A[j, :].copy()
                A[i, :] = c * ri - s * rj
                A[j, :] = s * ri + c * rj
                A[i, j] = A[j, i] = 0.0
    return np.diag(A).copy()


def sym_eigenvalues(a, method="lapack"):
    """Eigenvalues of a symmetric matrix, sorted in descending order.

    ``method="lapack"`` uses the symmetric tridiagonal QR driver from LAPACK
    (``numpy.linalg.eigvalsh``); ``method="jacobi"`` uses
    :func:`jacobi_eigenvalues`.
    """
    a = symmetric(a)
    if method == "lapack":
        w = np.linalg.eigvalsh(a)
    elif method == "jacobi":
        w = jacobi_eigenvalues(a)
    else:
        raise ValueError("unknown eigenvalue method %r" % method)
    return np.sort(w)[::-1]


def matrix_norm(a, which="op2"):
    """Matrix norm of a square (not necessarily symmetric) matrix.

    ``max``: largest absolute entry. ``fro``: Frobenius. ``op1``: largest
    absolute column sum. ``op2``: spectral norm.
    """
    a = _square(a)
    if which == "max":
        return float(np.max(np.abs(a), initial=0.0))
    if which == "fro":
        return float(np.sqrt(np.sum(a * a)))
    if which == "op1":
        return float(np.max(np.sum(np.abs(a), axis=0), initial=0.0))
    if which == "op2":
        if np.array_equal(a, a.T):
            w = sym_eigenvalues(a)
            return float(max(abs(w[0]), abs(w[-1])))
        w = sym_eigenvalues(a.T @ a)
        return float(np.sqrt(max(w[0], 0.0)))
    raise ValueError("unknown norm %r; expected max, fro, op1 or op2" % which)


def clip_eigenvalues(a, floor=1e-4):
    """Project a symmetric matrix onto ``{X : lambda_min(X) >= floor}``.

    Never applied implicitly by the estimators.
    """
    a = symmetric(a)
    w, V = np.linalg.eigh(a)
    return symmetric((V * np.maximum(w, floor)) @ V.T)
