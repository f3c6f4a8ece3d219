"""MIDA, SMIDA and KPCA subspace learners.

All three reduce to one dense symmetric eigendecomposition. For MIDA the
matrix is Kx (-H Kd H + mu H) Kx; SMIDA adds gamma H Ky H inside the
brackets; KPCA uses H Kx H. Traces are left unscaled, so ``mu`` and
``gamma`` are relative to raw traces rather than to the (n - 1)^-2
normalised HSIC.
"""
from __future__ import annotations

from dataclasses import dataclass, replace
from typing import Optional, Sequence

import numpy as np

from .domains import augment as _augment
from .domains import domain_kernel
from .kernels import DimensionError, KernelSpec, cross_gram, gram

METHODS = ("mida", "smida", "kpca")


@dataclass(frozen=True)
class LabelMatrix:
    """Label matrix Y (c x n for classification, 1 x n for regression).

    Unlabeled samples get an all-zero column.
    """

    Y: np.ndarray
    task: str
    classes: tuple = ()

    @classmethod
    def classification(cls, labels: Sequence, labeled, classes: Optional[Sequence] = None) -> "LabelMatrix":
        labels = np.asarray(labels, dtype=object)
        labeled = np.asarray(labeled, dtype=bool)
        if labels.shape != labeled.shape:
            raise DimensionError("labels and labeled mask differ in length")
        if classes is None:
            classes = sorted({lab for lab, keep in zip(labels, labeled) if keep})
        index = {c: j for j, c in enumerate(classes)}
        Y = np.zeros((len(classes), labels.size))
        for i, (lab, keep) in enumerate(zip(labels, labeled)):
            if keep:
                if lab not in index:
                    raise ValueError(f"sample {i}: label {lab!r} not among classes {list(classes)}")
                Y[index[lab], i] = 1.0
        return cls(Y, "classification", tuple(classes))

    @classmethod
    def regression(cls, targets, labeled, normalize: bool = True) -> "LabelMatrix":
        """Center labeled targets (and scale to unit variance when ``normalize``)."""
        t = np.asarray(targets, dtype=np.float64).ravel()
        labeled = np.asarray(labeled, dtype=bool)
        if t.shape != labeled.shape:
            raise DimensionError("targets and labeled mask differ in length")
        y = np.zeros_like(t)
        if labeled.any():
            vals = t[labeled] - t[labeled].mean()
            if normalize and vals.size > 1:
                sd = vals.std(ddof=1)
                if sd > 0:
                    vals = vals / sd
            y[labeled] = vals
        return cls(y[None, :], "regression")

    def kernel(self) -> np.ndarray:
        K = self.Y.T @ self.Y
        return np.triu(K) + np.triu(K, 1).T


@dataclass(frozen=True)
class SubspaceModel:
    method: str
    X_train: np.ndarray
    kernel: KernelSpec
    W: np.ndarray
    eigenvalues: np.ndarray
    mu: float = 1.0
    gamma: float = 0.0
    augment: bool = True
    Z_train: Optional[np.ndarray] = None
    # KPCA only: statistics of the training Gram used to center new columns
    row_mean: Optional[np.ndarray] = None
    grand_mean: float = 0.0

    @property
    def h(self) -> int:
        return self.W.shape[1]

    @property
    def centered(self) -> bool:
        return self.row_mean is not None

    def truncate(self, h: int) -> "SubspaceModel":
        """Keep the leading ``h`` directions (same as refitting with ``h``)."""
        if not 1 <= h <= self.h:
            raise ValueError(f"h must be in [1, {self.h}], got {h}")
        Z = None if self.Z_train is None else self.Z_train[:h]
        return replace(self, W=self.W[:, :h], eigenvalues=self.eigenvalues[:h], Z_train=Z)

    def project(self, X_new, D_new=None) -> np.ndarray:
        return project(self, X_new, D_new)

    def summary(self, head: int = 5) -> dict:
        return {
            "method": self.method,
            "h": self.h,
            "n_train": int(self.X_train.shape[1]),
            "kernel": self.kernel.as_dict(),
            "mu": self.mu,
            "gamma": self.gamma,
            "augment": self.augment,
            "eigenvalues_head": [float(v) for v in self.eigenvalues[:head]],
        }


def _square(name, K, n=None):
    K = np.asarray(K, dtype=np.float64)
    if K.ndim != 2 or K.shape[0] != K.shape[1]:
        raise DimensionError(f"{name} must be square, got shape {K.shape}")
    if n is not None and K.shape[0] != n:
        raise DimensionError(f"{name} is {K.shape[0]}x{K.shape[0]}, expected {n}x{n}")
    return K


def objective_matrix(Kx, Kd, Ky=None, mu: float = 1.0, gamma: float = 0.0) -> np.ndarray:
    """Kx (-H Kd H + mu H [+ gamma H Ky H]) Kx, symmetrised."""
    Kx = _square("Kx", Kx)
    n = Kx.shape[0]
    Kd = _square("Kd", Kd, n)
    if not mu > 0:
        raise ValueError(f"mu must be positive, got {mu!r}")
    if gamma < 0:
        raise ValueError(f"gamma must be non-negative, got {gamma!r}")
    if gamma > 0 and Ky is None:
        raise ValueError("gamma > 0 requires a label kernel Ky")
    # Kx H X H Kx == B X B^T with B = Kx H (row-centred Kx)
    B = Kx - Kx.mean(axis=1, keepdims=True)
    M = -Kd.copy()
    if gamma > 0:
        M += gamma * _square("Ky", Ky, n)
    M[np.diag_indices(n)] += mu
    A = (B @ M) @ B.T
    return (A + A.T) / 2.0


def canonicalize_signs(V: np.ndarray) -> np.ndarray:
    """Flip columns so each one's largest-magnitude entry is positive."""
    V = np.array(V, dtype=np.float64, copy=True)
    if V.size == 0:
        return V
    idx = np.argmax(np.abs(V), axis=0)
    signs = np.sign(V[idx, np.arange(V.shape[1])])
    signs[signs == 0] = 1.0
    return V * signs


def top_eigenvectors(A, h: int):
    """Eigenvectors of the ``h`` algebraically largest eigenvalues of symmetric ``A``.

    Returns ``(W, eigenvalues)`` with eigenvalues descending and column
    signs canonicalised.
    """
    A = _square("A", A)
    n = A.shape[0]
    if int(h) != h or not 1 <= h <= n:
        raise ValueError(f"h must be an integer in [1, {n}], got {h!r}")
    scale = max(1.0, float(np.abs(A).max()))
    if np.abs(A - A.T).max() > 1e-10 * scale:
        raise ValueError("A is not symmetric")
    vals, vecs = np.linalg.eigh(A)
    vals = vals[::-1]
    vecs = canonicalize_signs(vecs[:, ::-1])
    order = _tie_order(vals, vecs)
    vals, vecs = vals[order], vecs[:, order]
    h = int(h)
    return np.ascontiguousarray(vecs[:, :h]), vals[:h].copy()


def _tie_order(vals, vecs):
    order = list(range(vals.size))
    start = 0
    while start < vals.size:
        stop = start + 1
        while stop < vals.size and vals[stop] == vals[start]:
            stop += 1
        if stop - start > 1:
            group = sorted(range(start, stop), key=lambda j: tuple(-vecs[:, j]))
            order[start:stop] = group
        start = stop
    return np.array(order)


def fit(
    X,
    D,
    Y: Optional[LabelMatrix] = None,
    kernel: KernelSpec = KernelSpec(),
    h: int = 2,
    mu: float = 1.0,
    gamma: float = 0.0,
    augment: bool = True,
) -> SubspaceModel:
    """Fit MIDA (``gamma == 0``) or SMIDA (``gamma > 0`` with labels).

    ``X`` is m x n, ``D`` is the m_d x n domain feature matrix.
    """
    X = np.asarray(X, dtype=np.float64)
    D = np.asarray(D, dtype=np.float64)
    if X.ndim != 2 or D.ndim != 2:
        raise DimensionError("X and D must be 2-D (features x samples)")
    n = X.shape[1]
    if n < 2:
        raise ValueError("fit needs at least two samples")
    if D.shape[1] != n:
        raise DimensionError(f"D has {D.shape[1]} samples, X has {n}")
    if gamma > 0 and Y is None:
        raise ValueError("gamma > 0 requires labels")
    if Y is not None and Y.Y.shape[1] != n:
        raise DimensionError(f"labels cover {Y.Y.shape[1]} samples, X has {n}")
    Xa = _augment(X, D) if augment else X.copy()
    Kx = gram(kernel, Xa)
    Ky = Y.kernel() if (Y is not None and gamma > 0) else None
    A = objective_matrix(Kx, domain_kernel(D), Ky, mu=mu, gamma=gamma)
    W, vals = top_eigenvectors(A, h)
    return SubspaceModel(
        method="smida" if Ky is not None else "mida",
        X_train=Xa,
        kernel=kernel,
        W=W,
        eigenvalues=vals,
        mu=float(mu),
        gamma=float(gamma),
        augment=bool(augment),
        Z_train=W.T @ Kx,
    )


def fit_kpca(X, kernel: KernelSpec = KernelSpec(), h: int = 2) -> SubspaceModel:
    """Kernel PCA on the pooled samples; W holds unit eigenvectors of H Kx H."""
    X = np.asarray(X, dtype=np.float64)
    if X.ndim != 2 or X.shape[1] < 2:
        raise ValueError("fit_kpca needs a 2-D matrix with at least two samples")
    Kx = gram(kernel, X)
    row_mean = Kx.mean(axis=1)
    grand = float(row_mean.mean())
    Kc = Kx - row_mean[:, None] - row_mean[None, :] + grand
    Kc = (Kc + Kc.T) / 2.0
    W, vals = top_eigenvectors(Kc, h)
    return SubspaceModel(
        method="kpca",
        X_train=X.copy(),
        kernel=kernel,
        W=W,
        eigenvalues=vals,
        augment=False,
        Z_train=W.T @ Kc,
        row_mean=row_mean,
        grand_mean=grand,
    )


def project(model: SubspaceModel, X_new, D_new=None) -> np.ndarray:
    """Embed new samples: Z = W^T K(X_train, X_new), shape h x n'."""
    X_new = np.asarray(X_new, dtype=np.float64)
    if X_new.ndim == 1:
        X_new = X_new[:, None]
    if model.augment:
        if D_new is None:
            raise ValueError("model was fitted with augmentation; D_new is required")
        X_new = _augment(X_new, D_new)
    if X_new.shape[0] != model.X_train.shape[0]:
        raise DimensionError(
            f"new samples have {X_new.shape[0]} (augmented) features, model expects {model.X_train.shape[0]}"
        )
    K = cross_gram(model.kernel, model.X_train, X_new)
    if model.centered:
        K = K - model.row_mean[:, None] - K.mean(axis=0, keepdims=True) + model.grand_mean
    return model.W.T @ K
