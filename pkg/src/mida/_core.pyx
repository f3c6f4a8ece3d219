# cython: boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled kernels for Gram assembly and centered traces.

Inputs are C-contiguous float64 arrays with one sample per row. Matrix
products go through numpy's BLAS; the elementwise kernel maps, the
mirroring and the trace reductions are fused loops here. The pure-numpy
twins of these functions live in ``mida._fallback``.
"""
import numpy as np
cimport numpy as cnp
from libc.math cimport exp

cnp.import_array()

# family codes shared with mida.kernels
DEF LINEAR = 0
DEF POLY = 1
DEF RBF = 2


cdef inline double _ipow(double base, int degree) noexcept nogil:
    cdef double out = 1.0
    cdef int i
    for i in range(degree):
        out *= base
    return out


cdef inline double _transform(double inner, double d2, int family, int degree,
                              double sigma) noexcept nogil:
    if family == RBF:
        if d2 < 0.0:
            d2 = 0.0
        return exp(-d2 / (2.0 * sigma * sigma))
    if family == POLY:
        return _ipow(sigma * inner + 1.0, degree)
    return inner


def gram(const double[:, ::1] S, int family, int degree=1, double sigma=1.0):
    """Symmetric Gram matrix of the rows of ``S``.

    Inner products come from BLAS; the kernel transform runs once per
    upper-triangle entry and is mirrored, so the result is exactly symmetric.
    """
    cdef Py_ssize_t n = S.shape[0], i, j
    arr = np.asarray(S)
    out = np.ascontiguousarray(arr @ arr.T)
    cdef double[:, ::1] K = out
    cdef double[::1] sq = np.ascontiguousarray(np.diagonal(out)).copy()
    cdef double v
    with nogil:
        for i in range(n):
            for j in range(i, n):
                if family == RBF and i == j:
                    v = 1.0
                else:
                    v = _transform(K[i, j], sq[i] + sq[j] - 2.0 * K[i, j], family, degree, sigma)
                K[i, j] = v
                K[j, i] = v
    return out


def cross_gram(const double[:, ::1] A, const double[:, ::1] B, int family,
               int degree=1, double sigma=1.0):
    """Cross-kernel between rows of ``A`` (n1 x m) and rows of ``B`` (n2 x m)."""
    cdef Py_ssize_t n1 = A.shape[0], n2 = B.shape[0], i, j
    a, b = np.asarray(A), np.asarray(B)
    out = np.ascontiguousarray(a @ b.T)
    if family == LINEAR:
        return out
    cdef double[:, ::1] K = out
    cdef double[::1] sa, sb
    cdef double t, scale = 1.0 / (2.0 * sigma * sigma)
    if family == POLY:
        with nogil:
            for i in range(n1):
                for j in range(n2):
                    t = sigma * K[i, j] + 1.0
                    K[i, j] = t * t if degree == 2 else _ipow(t, degree)
        return out
    sa = np.einsum("ij,ij->i", a, a)
    sb = np.einsum("ij,ij->i", b, b)
    with nogil:
        for i in range(n1):
            for j in range(n2):
                t = sa[i] + sb[j] - 2.0 * K[i, j]
                K[i, j] = exp(-(t if t > 0.0 else 0.0) * scale)
    return out


def centered_trace(const double[:, ::1] K, const double[:, ::1] L):
    """tr(K H L H) for symmetric K, L in O(n^2) without forming H."""
    cdef Py_ssize_t n = K.shape[0], i, j
    cdef double elem = 0.0, cross = 0.0, sk = 0.0, sl = 0.0, rk, rl
    with nogil:
        for i in range(n):
            rk = 0.0
            rl = 0.0
            for j in range(n):
                elem += K[i, j] * L[i, j]
                rk += K[i, j]
                rl += L[i, j]
            cross += rk * rl
            sk += rk
            sl += rl
    return elem - 2.0 * cross / n + sk * sl / (<double>n * n)
