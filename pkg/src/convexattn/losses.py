"""Convex losses over class scores and their (sub)gradients.

Both gradients treat the attention weights as fixed (stop-gradient):
attention is recomputed per mini-batch, then the loss is differentiated
through the scores only.
"""

import numpy as np


def one_hot(labels, n_classes):
    labels = np.asarray(labels, dtype=int)
    if labels.min() < 0 or labels.max() >= n_classes:
        raise ValueError("labels out of range")
    Y = np.zeros((labels.size, n_classes))
    Y[np.arange(labels.size), labels] = 1.0
    return Y


def hinge_loss(f, labels):
    """Mean multi-class hinge: max(0, 1 - f_true + best rival score)."""
    f = np.atleast_2d(np.asarray(f, dtype=float))
    labels = np.asarray(labels, dtype=int)
    n, K = f.shape
    if K < 2:
        raise ValueError("hinge loss needs at least 2 classes")
    if labels.shape != (n,):
        raise ValueError("labels length must match score rows")
    idx = np.arange(n)
    true = f[idx, labels]
    rival = np.where(one_hot(labels, K) > 0, -np.inf, f).max(axis=1)
    return float(np.maximum(0.0, 1.0 - true + rival).mean())


def _rival_argmax(f, labels):
    """Best rival class per sample, ties to the lowest index."""
    masked = np.where(one_hot(labels, f.shape[1]) > 0, -np.inf, f)
    return masked.argmax(axis=1)


def hinge_subgradient(Q, labels, A, alpha):
    """Subgradient of the hinge loss w.r.t. the weight tensor.

    Q: (n, P, m) features, alpha: (n, K, P) fixed attention. For each
    violating sample the rival block gains alpha*Q_p and the true-class
    block loses it; non-violating samples (margin <= 0) contribute the
    zero subgradient.
    """
    Q = np.asarray(Q, dtype=float)
    labels = np.asarray(labels, dtype=int)
    alpha = np.asarray(alpha, dtype=float)
    n, P, m = Q.shape
    K = A.shape[0]
    if alpha.shape != (n, K, P):
        raise ValueError(f"alpha shape {alpha.shape} != {(n, K, P)}")
    s = np.einsum("npm,kpm->nkp", Q, A)  # sqrt(m) * scores, scaling cancels
    f = np.einsum("nkp,nkp->nk", alpha, s)
    idx = np.arange(n)
    rival = _rival_argmax(f, labels)
    margin = 1.0 - f[idx, labels] + f[idx, rival]
    viol = margin > 0
    coeff = np.zeros((n, K))
    coeff[idx[viol], rival[viol]] = 1.0
    coeff[idx[viol], labels[viol]] -= 1.0
    return np.einsum("nk,nkp,npm->kpm", coeff, alpha, Q) / n


def squared_loss(f, Y):
    """Mean squared error against one-hot targets."""
    f = np.atleast_2d(np.asarray(f, dtype=float))
    Y = np.atleast_2d(np.asarray(Y, dtype=float))
    if f.shape != Y.shape:
        raise ValueError(f"shape mismatch: f {f.shape} vs Y {Y.shape}")
    r = f - Y
    return float(np.einsum("nk,nk->", r, r) / f.shape[0])


def squared_gradient(Q, Y, A, alpha):
    """Gradient of the squared loss w.r.t. the weight tensor.

    Block (k, p) receives 2 (f_k - Y_k) alpha[k, p] Q_p per sample,
    averaged over the batch.
    """
    Q = np.asarray(Q, dtype=float)
    Y = np.atleast_2d(np.asarray(Y, dtype=float))
    alpha = np.asarray(alpha, dtype=float)
    n, P, m = Q.shape
    K = A.shape[0]
    if alpha.shape != (n, K, P) or Y.shape != (n, K):
        raise ValueError("shape mismatch in squared_gradient")
    s = np.einsum("npm,kpm->nkp", Q, A) / np.sqrt(m)
    f = np.sqrt(m) * np.einsum("nkp,nkp->nk", alpha, s)
    r = 2.0 * (f - Y)
    return np.einsum("nk,nkp,npm->kpm", r, alpha, Q) / n
