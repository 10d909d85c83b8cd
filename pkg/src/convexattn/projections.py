"""Convex projection operators.

Euclidean projection onto the probability simplex (sort-and-threshold),
projection of a nonnegative vector onto an L1 ball, projection of a
matrix onto a nuclear-norm ball, and a reference softmax kept only for
non-convexity demonstrations.
"""

import numpy as np

from .numutil import check_finite, svd_thin


def simplex_project(s):
    """Euclidean projection of a vector onto the probability simplex.

    Sort descending, find the largest j with u_j - (cumsum_j - 1)/j > 0,
    threshold at theta = (cumsum_rho - 1)/rho, clip at zero.
    """
    s = check_finite(s, "scores")
    if s.ndim != 1 or s.size == 0:
        raise ValueError("expected a nonempty 1-d vector")
    u = np.sort(s)[::-1]
    css = np.cumsum(u) - 1.0
    j = np.arange(1, s.size + 1)
    rho = np.nonzero(u - css / j > 0)[0][-1] + 1
    theta = css[rho - 1] / rho
    return np.maximum(s - theta, 0.0)


def simplex_project_rows(S):
    """Row-wise simplex projection of a 2-d array (vectorized)."""
    S = check_finite(S, "scores")
    if S.ndim != 2 or S.shape[1] == 0:
        raise ValueError("expected a 2-d array with nonzero row length")
    n, p = S.shape
    U = np.sort(S, axis=1)[:, ::-1]
    css = np.cumsum(U, axis=1) - 1.0
    j = np.arange(1, p + 1)
    rho = np.count_nonzero(U - css / j > 0, axis=1)
    theta = css[np.arange(n), rho - 1] / rho
    return np.maximum(S - theta[:, None], 0.0)


def squared_distance_to_simplex(s):
    """Squared Euclidean distance from s to the probability simplex.

    Half of this quantity is differentiable with gradient s - proj(s).
    """
    s = np.asarray(s, dtype=float)
    d = s - simplex_project(s)
    return float(d @ d)


def l1_ball_project_nonneg(sigma, radius):
    """Project a nonnegative vector onto {x >= 0 : sum(x) <= radius}.

    Inputs already inside the ball pass through unchanged; otherwise a
    simplex-style threshold brings the sum down to exactly radius.
    """
    sigma = check_finite(sigma, "sigma")
    if radius <= 0:
        raise ValueError(f"radius must be > 0, got {radius}")
    if np.any(sigma < 0):
        raise ValueError("sigma must be nonnegative")
    if sigma.sum() <= radius:
        return sigma.copy()
    u = np.sort(sigma)[::-1]
    css = np.cumsum(u) - radius
    j = np.arange(1, sigma.size + 1)
    rho = np.nonzero(u - css / j > 0)[0][-1] + 1
    theta = css[rho - 1] / rho
    return np.maximum(sigma - theta, 0.0)


def nuclear_norm(A):
    """Sum of singular values."""
    A = check_finite(A, "matrix")
    return float(np.linalg.svd(np.atleast_2d(A), compute_uv=False).sum())


def nuclear_ball_project(A, radius):
    """Project a matrix onto the nuclear-norm ball of the given radius.

    SVD, project the singular values onto the L1 ball, reconstruct.
    A matrix already inside the ball (including the zero matrix) is
    returned unchanged.
    """
    A = np.atleast_2d(check_finite(A, "matrix"))
    if radius <= 0:
        raise ValueError(f"radius must be > 0, got {radius}")
    U, sigma, V = svd_thin(A)
    if sigma.sum() <= radius:
        return A.copy()
    sigma_p = l1_ball_project_nonneg(sigma, radius)
    return (U * sigma_p) @ V.T


def softmax_ref(s):
    """Reference softmax (max-subtracted for stability).

    Exists only for non-convexity demonstrations; never used in
    training or inference.
    """
    s = check_finite(s, "scores")
    e = np.exp(s - s.max())
    return e / e.sum()
