"""Dense symmetric linear algebra used throughout the package.

Everything here works on small dense matrices (a few dozen rows at most),
so the routines favour determinism and explicit failure reporting over
raw speed.
"""

import numpy as np
from scipy.linalg import solve_triangular

__all__ = [
    "NotPositiveDefinite",
    "as_symmetric",
    "cholesky",
    "is_positive_definite",
    "is_psd",
    "min_eigenvalue",
    "spd_solve",
]

PIVOT_RTOL = 1e-12


class NotPositiveDefinite(np.linalg.LinAlgError):
    """Raised when a Cholesky pivot falls below the pivot tolerance."""

    def __init__(self, pivot, value=None):
        self.pivot = pivot
        self.value = value
        super().__init__(f"matrix is not positive definite (pivot {pivot}, value {value!r})")


def as_symmetric(A, atol=1e-10):
    """Return ``A`` as a float array, checking it is square and symmetric."""
    A = np.asarray(A, dtype=float)
    if A.ndim != 2 or A.shape[0] != A.shape[1] or A.shape[0] < 1:
        raise ValueError(f"expected a non-empty square matrix, got shape {A.shape}")
    scale = max(1.0, float(np.max(np.abs(A))))
    if not np.allclose(A, A.T, rtol=0.0, atol=atol * scale):
        raise ValueError("matrix is not symmetric")
    return A


def cholesky(A, rtol=PIVOT_RTOL):
    """Lower-triangular Cholesky factor of a symmetric positive definite matrix.

    Parameters
    ----------
    A : array_like, shape (m, m)
        Symmetric matrix. Only the lower triangle is read.
    rtol : float
        Pivots smaller than ``rtol * max(diag(A))`` are treated as zero.

    Returns
    -------
    L : ndarray, shape (m, m)
        Factor with ``L @ L.T == A``.

    Raises
    ------
    NotPositiveDefinite
        If a pivot is at or below the tolerance; ``pivot`` holds its index.
    """
    A = np.array(A, dtype=float)
    m = A.shape[0]
    tol = rtol * max(float(np.max(np.diag(A))), 0.0)
    L = np.zeros_like(A)
    for j in range(m):
        d = A[j, j] - L[j, :j] @ L[j, :j]
        if not d > tol:
            raise NotPositiveDefinite(j, float(d))
        L[j, j] = np.sqrt(d)
        if j + 1 < m:
            L[j + 1:, j] = (A[j + 1:, j] - L[j + 1:, :j] @ L[j, :j]) / L[j, j]
    return L


def is_positive_definite(A, rtol=PIVOT_RTOL):
    try:
        cholesky(A, rtol=rtol)
    except NotPositiveDefinite:
        return False
    return True


def is_psd(A, tol=1e-8):
    """PSD test: ``A + tol * I`` must admit a Cholesky factor."""
    A = np.asarray(A, dtype=float)
    return is_positive_definite(A + tol * np.eye(A.shape[0]), rtol=0.0)


def _gershgorin_interval(A):
    centre = np.diag(A)
    radius = np.sum(np.abs(A), axis=1) - np.abs(centre)
    return float(np.min(centre - radius)), float(np.max(centre + radius))


def min_eigenvalue(A, tol=1e-9):
    """Smallest eigenvalue of a symmetric matrix by bisection.

    The search interval comes from the Gershgorin discs; each step tests
    whether ``A - sigma * I`` is positive definite.
    """
    A = as_symmetric(A)
    lo, hi = _gershgorin_interval(A)
    eye = np.eye(A.shape[0])
    # lo is always a lower bound; keep hi as a point where A - hi*I is not PD
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        if is_positive_definite(A - mid * eye, rtol=0.0):
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def spd_solve(A, b):
    """Solve ``A x = b`` for symmetric positive definite ``A``."""
    L = cholesky(A)
    b = np.asarray(b, dtype=float)
    y = solve_triangular(L, b, lower=True)
    return solve_triangular(L.T, y, lower=False)
