"""Pure-numpy twins of the compiled kernels in ``_core.pyx``.

Same signatures and conventions: rows are samples, family codes are
0 = linear, 1 = polynomial, 2 = rbf.
"""
import numpy as np

LINEAR, POLY, RBF = 0, 1, 2


def _finish(inner, family, degree, sigma):
    if family == POLY:
        return (sigma * inner + 1.0) ** degree
    return inner


def _sqdist(A, B):
    d2 = (A * A).sum(1)[:, None] + (B * B).sum(1)[None, :] - 2.0 * (A @ B.T)
    return np.maximum(d2, 0.0)


def gram(S, family, degree=1, sigma=1.0):
    S = np.asarray(S, dtype=np.float64)
    if family == RBF:
        K = np.exp(-_sqdist(S, S) / (2.0 * sigma * sigma))
        np.fill_diagonal(K, 1.0)
    else:
        K = _finish(S @ S.T, family, degree, sigma)
    upper = np.triu(K)
    return upper + np.triu(K, 1).T


def cross_gram(A, B, family, degree=1, sigma=1.0):
    A = np.asarray(A, dtype=np.float64)
    B = np.asarray(B, dtype=np.float64)
    if family == RBF:
        return np.exp(-_sqdist(A, B) / (2.0 * sigma * sigma))
    return _finish(A @ B.T, family, degree, sigma)


def centered_trace(K, L):
    n = K.shape[0]
    rk = K.sum(1)
    rl = L.sum(1)
    return float(np.sum(K * L) - 2.0 * (rk @ rl) / n + rk.sum() * rl.sum() / (n * n))
