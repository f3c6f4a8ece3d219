"""Downstream predictors: one-vs-all logistic regression, ridge regression,
and evaluation metrics. Inputs here are row-major: ``Z`` is (n, h)."""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .kernels import DimensionError

MAX_ITER = 500
TOL = 1e-6


def _softplus(z):
    return np.logaddexp(0.0, z)


def _sigmoid(z):
    out = np.empty_like(z)
    pos = z >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-z[pos]))
    ez = np.exp(z[~pos])
    out[~pos] = ez / (1.0 + ez)
    return out


@dataclass
class BinaryTrace:
    iterations: int
    grad_norm: float
    losses: list = field(default_factory=list)


def _fit_binary(Xs, y, l2, max_iter=MAX_ITER, tol=TOL):
    """Gradient descent with Armijo backtracking on standardized features.

    Returns (w, b, trace). Zero initialisation; the step is reset to twice
    the last accepted one at every iteration.
    """
    n, h = Xs.shape
    w = np.zeros(h)
    b = 0.0

    def loss_grad(w, b):
        z = Xs @ w + b
        loss = float(np.mean(_softplus(z) - y * z) + 0.5 * l2 * (w @ w))
        r = (_sigmoid(z) - y) / n
        return loss, Xs.T @ r + l2 * w, float(r.sum())

    loss, gw, gb = loss_grad(w, b)
    losses = [loss]
    step = 1.0
    it = 0
    gnorm = float(np.sqrt(gw @ gw + gb * gb))
    while it < max_iter and gnorm > tol:
        step = min(2.0 * step, 1e6)
        g2 = gnorm * gnorm
        while True:
            w_new, b_new = w - step * gw, b - step * gb
            z = Xs @ w_new + b_new
            new_loss = float(np.mean(_softplus(z) - y * z) + 0.5 * l2 * (w_new @ w_new))
            if new_loss <= loss - 0.5 * step * g2 or step < 1e-20:
                break
            step *= 0.5
        if new_loss > loss:
            break
        w, b = w_new, b_new
        loss, gw, gb = loss_grad(w, b)
        losses.append(loss)
        gnorm = float(np.sqrt(gw @ gw + gb * gb))
        it += 1
    return w, b, BinaryTrace(it, gnorm, losses)


@dataclass
class LogisticModel:
    """One-vs-all logistic regression.

    ``weights`` has one row per class: h coefficients then the bias, in
    the units of the original features.
    """

    classes: tuple
    weights: np.ndarray
    l2: float
    traces: list

    def decision_function(self, Z) -> np.ndarray:
        Z = _as_rows(Z)
        if Z.shape[1] != self.weights.shape[1] - 1:
            raise DimensionError(f"model expects {self.weights.shape[1] - 1} features, got {Z.shape[1]}")
        return Z @ self.weights[:, :-1].T + self.weights[:, -1]

    def predict_proba(self, Z) -> np.ndarray:
        """Per-class one-vs-all probabilities (rows need not sum to 1)."""
        return _sigmoid(self.decision_function(Z))

    def predict(self, Z) -> np.ndarray:
        scores = self.decision_function(Z)
        return np.asarray(self.classes, dtype=object)[np.argmax(scores, axis=1)]


def _as_rows(Z):
    Z = np.asarray(Z, dtype=np.float64)
    if Z.ndim == 1:
        Z = Z[:, None]
    if Z.ndim != 2:
        raise DimensionError(f"expected (n, h) features, got shape {Z.shape}")
    return Z


def _standardize(Z):
    mean = Z.mean(axis=0)
    sd = Z.std(axis=0)
    sd[~(sd > 0)] = 1.0
    return (Z - mean) / sd, mean, sd


def fit_logistic(Z, labels: Sequence, l2: float = 1e-4, max_iter: int = MAX_ITER, tol: float = TOL) -> LogisticModel:
    Z = _as_rows(Z)
    labels = np.asarray(labels, dtype=object)
    if labels.shape[0] != Z.shape[0]:
        raise DimensionError(f"{labels.shape[0]} labels for {Z.shape[0]} samples")
    if l2 < 0:
        raise ValueError(f"l2 must be non-negative, got {l2}")
    if not np.all(np.isfinite(Z)):
        raise ValueError("features must be finite")
    classes = tuple(sorted(set(labels.tolist())))
    if len(classes) < 2:
        raise ValueError("logistic regression needs at least two classes")
    Xs, mean, sd = _standardize(Z)
    rows, traces = [], []
    for c in classes:
        y = (labels == c).astype(np.float64)
        w, b, trace = _fit_binary(Xs, y, l2, max_iter, tol)
        w_orig = w / sd
        rows.append(np.append(w_orig, b - w_orig @ mean))
        traces.append(trace)
    return LogisticModel(classes, np.array(rows), float(l2), traces)


def predict_class(model: LogisticModel, Z) -> np.ndarray:
    return model.predict(Z)


@dataclass
class RidgeModel:
    """Ridge regression with an unpenalized bias; ``weights`` is (h + 1, k)."""

    weights: np.ndarray
    lam: float

    def predict(self, Z) -> np.ndarray:
        Z = _as_rows(Z)
        out = Z @ self.weights[:-1] + self.weights[-1]
        return out[:, 0] if out.shape[1] == 1 else out


def fit_ridge(Z, y, lam: float = 1.0) -> RidgeModel:
    """Solve (X^T X + lam I') w = X^T y, I' leaving the bias unpenalized."""
    if lam < 0:
        raise ValueError(f"lambda must be non-negative, got {lam}")
    Z = _as_rows(Z)
    y = np.asarray(y, dtype=np.float64)
    y2 = y[:, None] if y.ndim == 1 else y
    if y2.shape[0] != Z.shape[0]:
        raise DimensionError(f"{y2.shape[0]} targets for {Z.shape[0]} samples")
    zm = Z.mean(axis=0)
    ym = y2.mean(axis=0)
    Zc = Z - zm
    G = Zc.T @ Zc + lam * np.eye(Z.shape[1])
    rhs = Zc.T @ (y2 - ym)
    try:
        w = np.linalg.solve(G, rhs)
    except np.linalg.LinAlgError:
        w = np.linalg.lstsq(G, rhs, rcond=None)[0]
    b = ym - zm @ w
    return RidgeModel(np.vstack([w, b[None, :]]), float(lam))


def predict_value(model: RidgeModel, Z) -> np.ndarray:
    return model.predict(Z)


def metrics(predicted, truth, kind: str = "accuracy", positive=1) -> float:
    """accuracy, f1 (of the ``positive`` class) or rmse."""
    predicted = np.asarray(predicted)
    truth = np.asarray(truth)
    if predicted.shape[0] != truth.shape[0]:
        raise DimensionError(f"length mismatch: {predicted.shape[0]} vs {truth.shape[0]}")
    if predicted.shape[0] == 0:
        raise ValueError("metrics of empty inputs are undefined")
    if kind == "accuracy":
        return float(np.mean(predicted == truth))
    if kind == "f1":
        pp = predicted == positive
        tp_mask = truth == positive
        tp = float(np.sum(pp & tp_mask))
        precision = tp / pp.sum() if pp.any() else 0.0
        recall = tp / tp_mask.sum() if tp_mask.any() else 0.0
        return 0.0 if precision + recall == 0 else 2 * precision * recall / (precision + recall)
    if kind == "rmse":
        diff = predicted.astype(np.float64) - truth.astype(np.float64)
        return float(np.sqrt(np.mean(diff**2)))
    raise ValueError(f"unknown metric {kind!r}; expected accuracy, f1 or rmse")
