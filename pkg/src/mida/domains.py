"""Domain features built from each sample's background, the domain kernel,
and feature augmentation."""
from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .kernels import DimensionError

ROLES = ("source-labeled", "unlabeled", "target-test")
SCHEMES = ("onehot-device", "device-and-time", "batch-index", "onehot-domain")


@dataclass(frozen=True)
class BackgroundRecord:
    device: int = 1
    time: float = 0.0
    batch: int = 1
    role: str = "unlabeled"

    def __post_init__(self):
        if self.device < 1:
            raise ValueError(f"device ids start at 1, got {self.device}")
        if self.batch < 1:
            raise ValueError(f"batch indices start at 1, got {self.batch}")
        if self.role not in ROLES:
            raise ValueError(f"unknown role {self.role!r}; expected one of {ROLES}")


@dataclass(frozen=True)
class DomainEncoding:
    """How background records become domain feature vectors.

    ``size`` is the number of devices for the device schemes and the
    number of domains for ``onehot-domain`` (domain id = batch field).
    It is ignored by ``batch-index``.
    """

    scheme: str = "onehot-device"
    size: int = 1

    def __post_init__(self):
        if self.scheme not in SCHEMES:
            raise ValueError(f"unknown encoding scheme {self.scheme!r}; expected one of {SCHEMES}")
        if self.size < 1:
            raise ValueError(f"encoding size must be >= 1, got {self.size}")

    @property
    def dim(self) -> int:
        if self.scheme == "batch-index":
            return 1
        if self.scheme == "device-and-time":
            return 2 * self.size
        return self.size


def encode(enc: DomainEncoding, records: Sequence[BackgroundRecord]) -> np.ndarray:
    """Domain feature matrix D of shape (m_d, n), one column per record."""
    if len(records) == 0:
        raise ValueError("encode needs at least one record")
    D = np.zeros((enc.dim, len(records)))
    for i, rec in enumerate(records):
        if enc.scheme == "batch-index":
            D[0, i] = rec.batch
            continue
        slot = rec.batch if enc.scheme == "onehot-domain" else rec.device
        if not 1 <= slot <= enc.size:
            what = "domain" if enc.scheme == "onehot-domain" else "device"
            raise ValueError(f"record {i}: {what} id {slot} outside [1, {enc.size}]")
        if enc.scheme == "device-and-time":
            D[2 * slot - 2, i] = 1.0
            D[2 * slot - 1, i] = rec.time
        else:
            D[slot - 1, i] = 1.0
    return D


def domain_kernel(D) -> np.ndarray:
    D = np.asarray(D, dtype=np.float64)
    if D.ndim != 2 or D.shape[1] == 0:
        raise ValueError(f"domain feature matrix must be 2-D and nonempty, got shape {D.shape}")
    K = D.T @ D
    return np.triu(K) + np.triu(K, 1).T


def augment(X, D) -> np.ndarray:
    """Stack original features over domain features: [X; D]."""
    X = np.asarray(X, dtype=np.float64)
    D = np.asarray(D, dtype=np.float64)
    if D.size == 0:
        return X.copy()
    if X.shape[1] != D.shape[1]:
        raise DimensionError(f"sample counts differ: X has {X.shape[1]}, D has {D.shape[1]}")
    return np.vstack([X, D])
