"""Kernel functions, Gram matrices, the centering matrix and empirical HSIC.

Sample matrices follow the column convention used throughout the math
layer: ``X`` has shape ``(m, n)`` with one sample per column.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import _backend

FAMILIES = {"linear": 0, "polynomial": 1, "rbf": 2}


class DimensionError(ValueError):
    """Raised when array shapes are incompatible."""


@dataclass(frozen=True)
class KernelSpec:
    """Kernel family plus parameters.

    ``linear``: x.y; ``polynomial``: (sigma * x.y + 1) ** degree;
    ``rbf``: exp(-|x - y|^2 / (2 sigma^2)).
    """

    family: str = "linear"
    degree: int = 2
    sigma: float = 1.0

    def __post_init__(self):
        if self.family not in FAMILIES:
            raise ValueError(f"unknown kernel family {self.family!r}; expected one of {sorted(FAMILIES)}")
        if self.family == "polynomial" and (int(self.degree) != self.degree or self.degree < 1):
            raise ValueError(f"polynomial degree must be a positive integer, got {self.degree!r}")
        if self.family in ("polynomial", "rbf") and not self.sigma > 0:
            raise ValueError(f"sigma must be positive, got {self.sigma!r}")

    @property
    def code(self) -> int:
        return FAMILIES[self.family]

    def as_dict(self) -> dict:
        return {"family": self.family, "degree": int(self.degree), "sigma": float(self.sigma)}


def kernel_eval(spec: KernelSpec, x, y) -> float:
    x = np.asarray(x, dtype=np.float64).ravel()
    y = np.asarray(y, dtype=np.float64).ravel()
    if x.shape != y.shape:
        raise DimensionError(f"vector lengths differ: {x.size} vs {y.size}")
    if spec.family == "rbf":
        diff = x - y
        return float(np.exp(-(diff @ diff) / (2.0 * spec.sigma**2)))
    inner = float(x @ y)
    if spec.family == "polynomial":
        return (spec.sigma * inner + 1.0) ** int(spec.degree)
    return inner


def _rows(X) -> np.ndarray:
    X = np.asarray(X, dtype=np.float64)
    if X.ndim == 1:
        X = X[:, None]
    if X.ndim != 2:
        raise DimensionError(f"expected a 2-D sample matrix, got shape {X.shape}")
    return np.ascontiguousarray(X.T)


def gram(spec: KernelSpec, X) -> np.ndarray:
    """n x n kernel matrix of the columns of ``X`` (m x n), exactly symmetric."""
    S = _rows(X)
    if S.shape[0] < 1:
        raise ValueError("gram needs at least one sample")
    return _backend.impl.gram(S, spec.code, int(spec.degree), float(spec.sigma))


def cross_gram(spec: KernelSpec, A, B) -> np.ndarray:
    """Kernel values between columns of ``A`` (m x n1) and ``B`` (m x n2)."""
    SA, SB = _rows(A), _rows(B)
    if SA.shape[1] != SB.shape[1]:
        raise DimensionError(f"feature dimensions differ: {SA.shape[1]} vs {SB.shape[1]}")
    return _backend.impl.cross_gram(SA, SB, spec.code, int(spec.degree), float(spec.sigma))


def centering_matrix(n: int) -> np.ndarray:
    if int(n) != n or n < 1:
        raise ValueError(f"centering matrix size must be a positive integer, got {n!r}")
    n = int(n)
    return np.eye(n) - np.full((n, n), 1.0 / n)


def hsic_empirical(Kx, Ky) -> float:
    """Biased empirical HSIC, (n - 1)^-2 tr(Kx H Ky H)."""
    Kx = np.ascontiguousarray(Kx, dtype=np.float64)
    Ky = np.ascontiguousarray(Ky, dtype=np.float64)
    if Kx.ndim != 2 or Kx.shape[0] != Kx.shape[1]:
        raise DimensionError(f"Kx must be square, got shape {Kx.shape}")
    if Kx.shape != Ky.shape:
        raise DimensionError(f"Gram sizes differ: {Kx.shape} vs {Ky.shape}")
    n = Kx.shape[0]
    if n < 2:
        raise ValueError("HSIC needs at least two samples")
    return float(_backend.impl.centered_trace(Kx, Ky)) / (n - 1) ** 2
