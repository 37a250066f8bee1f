"""Dense direct linear algebra for the collocation systems.

Matrices are plain float64 2D ndarrays (row-major).  System sizes stay in
the low thousands, so an LU factorization with partial pivoting (LAPACK
via SciPy) is the whole story; no iterative machinery.
"""

from __future__ import annotations

import warnings

import numpy as np
import scipy.linalg

__all__ = ["SingularSystemError", "lu_solve", "condition_estimate"]


class SingularSystemError(RuntimeError):
    """Raised when a collocation matrix is numerically singular."""


def _validated_square(A):
    A = np.asarray(A, dtype=float)
    if A.ndim != 2 or A.shape[0] != A.shape[1]:
        raise ValueError(f"expected a square matrix, got shape {A.shape}")
    if not np.all(np.isfinite(A)):
        raise ValueError("matrix contains non-finite entries")
    return A


def lu_solve(A, b):
    """Solve ``A x = b`` by LU with partial pivoting, verifying the residual.

    Raises :class:`SingularSystemError` when a pivot falls below
    ``1e-14 * ||A||_inf`` or the residual check fails.
    """
    A = _validated_square(A)
    b = np.asarray(b, dtype=float)
    if b.shape[0] != A.shape[0]:
        raise ValueError("right-hand side length does not match the matrix")

    anorm_inf = np.abs(A).sum(axis=1).max()
    with warnings.catch_warnings():
        # exact-zero pivots are reported through SingularSystemError below
        warnings.simplefilter("ignore", scipy.linalg.LinAlgWarning)
        lu, piv = scipy.linalg.lu_factor(A, check_finite=False)
    pivots = np.abs(np.diag(lu))
    if np.any(pivots < 1e-14 * anorm_inf):
        raise SingularSystemError(
            f"pivot {pivots.min():.3e} below threshold for ||A||_inf = {anorm_inf:.3e}"
        )
    x = scipy.linalg.lu_solve((lu, piv), b, check_finite=False)

    residual = np.abs(A @ x - b).max()
    scale = anorm_inf * np.abs(x).max() + np.abs(b).max()
    if residual > 1e-8 * scale:
        raise SingularSystemError(
            f"solve residual {residual:.3e} exceeds 1e-8 * {scale:.3e}"
        )
    return x


def condition_estimate(A):
    """1-norm condition estimate (LAPACK gecon); ``inf`` marks singularity."""
    A = _validated_square(A)
    anorm = np.abs(A).sum(axis=0).max()
    if anorm == 0.0:
        return np.inf
    try:
        lu, piv = scipy.linalg.lu_factor(A, check_finite=False)
    except scipy.linalg.LinAlgError:
        return np.inf
    gecon = scipy.linalg.get_lapack_funcs("gecon", (lu,))
    rcond, info = gecon(lu, anorm, norm="1")
    if info != 0 or rcond == 0.0:
        return np.inf
    return 1.0 / rcond
