"""Slow, independent reference implementations used only by the tests.

Everything here is written with plain Python lists and loops so it shares
no code path with numpy/LAPACK or with the package.
"""
import math


def to_list(A):
    return [[float(v) for v in row] for row in A]


def matmul(A, B):
    n, k, m = len(A), len(B), len(B[0])
    out = [[0.0] * m for _ in range(n)]
    for i in range(n):
        for j in range(m):
            s = 0.0
            for t in range(k):
                s += A[i][t] * B[t][j]
            out[i][j] = s
    return out


def centering(n):
    return [[(1.0 if i == j else 0.0) - 1.0 / n for j in range(n)] for i in range(n)]


def hsic(Kx, Ky):
    """(n-1)^-2 tr(Kx H Ky H), forming H and every product explicitly."""
    Kx, Ky = to_list(Kx), to_list(Ky)
    n = len(Kx)
    H = centering(n)
    P = matmul(matmul(matmul(Kx, H), Ky), H)
    return sum(P[i][i] for i in range(n)) / (n - 1) ** 2


def objective(Kx, Kd, mu, Ky=None, gamma=0.0):
    """Kx (-H Kd H + mu H + gamma H Ky H) Kx by explicit products."""
    Kx, Kd = to_list(Kx), to_list(Kd)
    n = len(Kx)
    H = centering(n)
    HKdH = matmul(matmul(H, Kd), H)
    mid = [[-HKdH[i][j] + mu * H[i][j] for j in range(n)] for i in range(n)]
    if Ky is not None and gamma:
        HKyH = matmul(matmul(H, to_list(Ky)), H)
        mid = [[mid[i][j] + gamma * HKyH[i][j] for j in range(n)] for i in range(n)]
    return matmul(matmul(Kx, mid), Kx)


def gram(fn, cols):
    """Gram matrix of a kernel function over a list of sample vectors."""
    return [[fn(a, b) for b in cols] for a in cols]


def tridiagonalize(A):
    """Householder reduction of a symmetric matrix to (diag, offdiag)."""
    a = to_list(A)
    n = len(a)
    for k in range(n - 2):
        x = [a[i][k] for i in range(k + 1, n)]
        alpha = math.sqrt(sum(v * v for v in x))
        if alpha == 0.0:
            continue
        if x[0] > 0:
            alpha = -alpha
        v = x[:]
        v[0] -= alpha
        vnorm2 = sum(t * t for t in v)
        if vnorm2 == 0.0:
            continue
        # P = I - 2 v v^T / (v^T v) acting on rows/cols k+1..n-1
        idx = list(range(k + 1, n))
        # a <- P a P
        for side in range(2):
            for j in range(n):
                if side == 0:
                    dot = sum(v[p] * a[idx[p]][j] for p in range(len(idx)))
                    f = 2.0 * dot / vnorm2
                    for p in range(len(idx)):
                        a[idx[p]][j] -= f * v[p]
                else:
                    dot = sum(a[j][idx[p]] * v[p] for p in range(len(idx)))
                    f = 2.0 * dot / vnorm2
                    for p in range(len(idx)):
                        a[j][idx[p]] -= f * v[p]
    diag = [a[i][i] for i in range(n)]
    off = [0.5 * (a[i][i + 1] + a[i + 1][i]) for i in range(n - 1)]
    return diag, off


def _count_below(diag, off, x):
    """Sturm count: number of eigenvalues strictly less than x."""
    count = 0
    q = 1.0
    for i in range(len(diag)):
        b2 = off[i - 1] ** 2 if i > 0 else 0.0
        q = diag[i] - x - (b2 / q if i > 0 else 0.0)
        if q == 0.0:
            q = 1e-300
        if q < 0:
            count += 1
    return count


def eigenvalues(A, tol=1e-13):
    """All eigenvalues of symmetric A, descending, by Sturm bisection."""
    diag, off = tridiagonalize(A)
    n = len(diag)
    radius = max(abs(diag[i]) + (abs(off[i - 1]) if i > 0 else 0.0) + (abs(off[i]) if i < n - 1 else 0.0)
                 for i in range(n))
    lo0, hi0 = -radius - 1.0, radius + 1.0
    out = []
    for k in range(n):  # k-th smallest
        lo, hi = lo0, hi0
        while hi - lo > tol * max(1.0, abs(lo), abs(hi)):
            mid = 0.5 * (lo + hi)
            if _count_below(diag, off, mid) > k:
                hi = mid
            else:
                lo = mid
        out.append(0.5 * (lo + hi))
    return sorted(out, reverse=True)
