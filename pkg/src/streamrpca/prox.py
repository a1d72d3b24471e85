"""Elementary proximal and least-squares kernels.

All functions here are pure; they are safe to call from any thread.
"""

import numpy as np
import scipy.linalg

from .exceptions import ContractViolation


def shrink(x, tau):
    """Soft-threshold a scalar: sgn(x) * max(|x| - tau, 0)."""
    if x > tau:
        return x - tau
    if x < -tau:
        return x + tau
    return 0.0


def shrink_matrix(X, tau):
    """Apply the soft-threshold elementwise to an array (any shape).

    tau = 0 is an exact identity (no epsilon fuzz).
    """
    X = np.asarray(X, dtype=float)
    if tau == 0.0:
        return X.copy()
    return np.sign(X) * np.maximum(np.abs(X) - tau, 0.0)


def svt(X, tau):
    """Singular value thresholding: soft-threshold the spectrum, reconstruct.

    The result does not depend on the non-uniqueness of the SVD because only
    the reconstructed product is returned.
    """
    U, s, Vh = np.linalg.svd(np.asarray(X, dtype=float), full_matrices=False)
    return (U * np.maximum(s - tau, 0.0)) @ Vh


def ridge_regress(U, y, lambda1):
    """Solve min_v 0.5*||y - U v||^2 + (lambda1/2)*||v||^2.

    Returns (U'U + lambda1*I)^{-1} U'y via a Cholesky solve on the r x r Gram
    matrix (cost O(m r^2 + r^3)); falls back to a pivoted solve if the
    factorization fails.
    """
    U = np.asarray(U, dtype=float)
    y = np.asarray(y, dtype=float)
    if U.ndim != 2 or y.ndim != 1 or U.shape[0] != y.shape[0]:
        raise ContractViolation(
            f"ridge_regress: incompatible shapes U{U.shape} vs y{y.shape}"
        )
    if lambda1 <= 0:
        raise ContractViolation("ridge_regress: lambda1 must be > 0")
    G = U.T @ U + lambda1 * np.eye(U.shape[1])
    rhs = U.T @ y
    try:
        c, low = scipy.linalg.cho_factor(G)
        return scipy.linalg.cho_solve((c, low), rhs)
    except scipy.linalg.LinAlgError:
        return scipy.linalg.solve(G, rhs)
