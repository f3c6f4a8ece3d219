"""Experiment protocols: generic source->target transfer on a table, the
gas-sensor drift protocol and the corn calibration-transfer protocol.

Every protocol returns a list of ``(task, metric, value)`` rows plus
model summaries; :func:`run_experiment` wraps them in a report dict.
"""
from __future__ import annotations

import itertools
import time
from dataclasses import replace
from typing import Optional, Sequence

import numpy as np

from . import dataio, synth
from .dataio import ConfigError, DatasetTable, ExperimentConfig
from .domains import BackgroundRecord, DomainEncoding, encode
from .kernels import KernelSpec
from .predict import fit_logistic, fit_ridge, metrics
from .subspace import LabelMatrix, SubspaceModel, fit, fit_kpca, project


def kernel_of(cfg: ExperimentConfig) -> KernelSpec:
    k = cfg.kernel
    return KernelSpec(k.family, k.degree, k.sigma)


def encoding_of(cfg: ExperimentConfig) -> DomainEncoding:
    return DomainEncoding(cfg.encoding.scheme, cfg.encoding.size)


def load_table(cfg: ExperimentConfig) -> DatasetTable:
    d = cfg.data
    if d.source == "synth":
        return synth.generate_table(synth.SynthScenario(d.scenario, d.n, cfg.seed, d.conditional))
    if d.source == "csv":
        return dataio.load_csv(d.path)
    raise ConfigError(f"data.source: {d.source!r} tables are only available through protocol.name = {d.source!r}")


def fit_subspace(
    method: str,
    X,
    D,
    kernel: KernelSpec,
    h: int,
    mu: float,
    gamma: float,
    augment: bool,
    labels: Optional[LabelMatrix] = None,
) -> Optional[SubspaceModel]:
    """Fit the configured learner; ``None`` for raw features."""
    n = X.shape[1]
    h = min(h, n)
    if method == "none":
        return None
    if method == "kpca":
        return fit_kpca(X, kernel, h)
    if method == "smida":
        if labels is None or not np.any(labels.Y):
            raise ConfigError("model.gamma: SMIDA needs labeled samples but none are available")
        return fit(X, D, labels, kernel, h, mu, gamma, augment)
    return fit(X, D, None, kernel, h, mu, 0.0, augment)


def embed(model: Optional[SubspaceModel], X, D) -> np.ndarray:
    """Row-major embedding (n, h) of columns of X."""
    if model is None:
        return np.asarray(X, dtype=np.float64).T
    return project(model, X, D).T


def _label_matrix(cfg, labels, labeled):
    if cfg.predictor.kind == "ridge":
        return LabelMatrix.regression(labels, labeled, normalize=cfg.protocol.normalize_targets)
    return LabelMatrix.classification(labels, labeled)


def _evaluate(cfg, Z_train, y_train, Z_test, y_test) -> float:
    if cfg.predictor.kind == "ridge":
        model = fit_ridge(Z_train, np.asarray(y_train, dtype=np.float64), cfg.predictor.lam)
        pred = model.predict(Z_test)
        truth = np.asarray(y_test, dtype=np.float64)
    else:
        model = fit_logistic(Z_train, y_train, cfg.predictor.l2)
        pred = model.predict(Z_test)
        truth = np.asarray(y_test, dtype=object)
    positive = "1" if isinstance(truth[0], str) else 1
    return metrics(pred, truth, cfg.metric.kind, positive=positive)


def _h_values(cfg) -> list:
    return sorted(set(int(h) for h in cfg.protocol.sweep_h)) or [cfg.model.h]


# ------------------------------------------------------------- transfer


def run_transfer(cfg: ExperimentConfig, table: Optional[DatasetTable] = None):
    """Fit on every row (transductive), train on source-labeled rows and
    score on target-test rows."""
    table = table if table is not None else load_table(cfg)
    src = table.mask("source-labeled") & table.labeled_mask()
    tgt = table.mask("target-test") & table.labeled_mask()
    if not src.any():
        raise ConfigError("data: no labeled source-labeled rows to train on")
    if not tgt.any():
        raise ConfigError("data: no labeled target-test rows to evaluate on")
    X = table.X
    D = encode(encoding_of(cfg), table.records())
    labels = table.label if cfg.predictor.kind == "logistic" else table.numeric_labels()
    Y = _label_matrix(cfg, labels, src) if cfg.model.method == "smida" else None
    hs = _h_values(cfg)
    m = cfg.model
    model = fit_subspace(m.method, X, D, kernel_of(cfg), max(hs), m.mu, m.gamma, m.augment, Y)
    Z = embed(model, X, D)
    y = np.asarray(labels, dtype=object)
    rows = []
    for h in hs:
        Zh = Z if model is None else Z[:, : min(h, model.h)]
        value = _evaluate(cfg, Zh[src], y[src], Zh[tgt], y[tgt])
        task = "target" if not cfg.protocol.sweep_h else f"target@h={h}"
        rows.append((task, cfg.metric.kind, value))
    summaries = [] if model is None else [model.summary()]
    return rows, summaries


# ----------------------------------------------------------------- gas


def _gas_pool(cfg, table, b, n_src):
    """Source rows plus the subsampled target pool for target batch ``b``."""
    variant = cfg.protocol.variant or "continuous"
    src = table.batch == 1
    if variant == "continuous":
        cand = (table.batch >= 2) & (table.batch <= b)
    elif variant == "discrete":
        cand = table.batch == b
    else:
        raise ConfigError(f"protocol.variant: gas variant must be 'continuous' or 'discrete', got {variant!r}")
    sub = table.subset(src | cand)
    pool = dataio.subsample_target(sub, factor=cfg.protocol.n_t_factor, seed=cfg.seed * 1000 + b, by=None)
    return pool, variant


def _gas_domain(variant, batches):
    batches = np.asarray(batches)
    if variant == "continuous":
        return batches[None, :].astype(np.float64)
    D = np.zeros((2, batches.size))
    D[0, batches == 1] = 1.0
    D[1, batches != 1] = 1.0
    return D


def run_gas(cfg: ExperimentConfig, table: Optional[DatasetTable] = None):
    """Batch 1 is the labeled source; each of batches 2..10 is a target.

    Subspaces are learned on batch 1 plus at most ``n_t_factor * n_source``
    target samples (from batch b alone, or from batches 2..b for the
    continuous variant); every sample of batch b is then embedded and scored.
    """
    if table is None:
        table = dataio.load_gas(cfg.data.path or None)
    if cfg.protocol.zscore:
        table = dataio.zscore_per_batch(table)
    targets = [int(b) for b in cfg.protocol.targets] or list(range(2, 11))
    n_src = int(np.sum(table.batch == 1))
    kernel = kernel_of(cfg)
    hs = _h_values(cfg)
    m = cfg.model
    per_h = {h: [] for h in hs}
    summaries = []
    for b in targets:
        pool, variant = _gas_pool(cfg, table, b, n_src)
        Dp = _gas_domain(variant, pool.batch)
        labeled = pool.batch == 1
        Y = LabelMatrix.classification(pool.label, labeled) if m.method == "smida" else None
        model = fit_subspace(m.method, pool.X, Dp, kernel, max(hs), m.mu, m.gamma, m.augment, Y)
        src_rows = table.subset(table.batch == 1)
        tgt_rows = table.subset(table.batch == b)
        Zs = embed(model, src_rows.X, _gas_domain(variant, src_rows.batch))
        Zt = embed(model, tgt_rows.X, _gas_domain(variant, tgt_rows.batch))
        for h in hs:
            k = Zs.shape[1] if model is None else min(h, model.h)
            clf = fit_logistic(Zs[:, :k], src_rows.label, cfg.predictor.l2)
            per_h[h].append(metrics(clf.predict(Zt[:, :k]), np.asarray(tgt_rows.label, dtype=object), "accuracy"))
        if model is not None:
            summaries.append({"target": f"batch{b}", **model.summary()})
    rows = []
    for h in hs:
        suffix = f"@h={h}" if cfg.protocol.sweep_h else ""
        rows += [(f"batch{b}{suffix}", "accuracy", v) for b, v in zip(targets, per_h[h])]
        rows.append((f"average{suffix}", "accuracy", float(np.mean(per_h[h]))))
    return rows, summaries


# ---------------------------------------------------------------- corn


def _corn_fit_predict(cfg, spectra, props, train_dev, train_idx, pool_parts, eval_parts, hs):
    """Fit one subspace per property (SMIDA) or one shared (other methods)
    at ``max(hs)``, train ridge on the labeled rows and score each truncation.

    Returns ``{h: {eval_key: (n_prop,) RMSE}}``.
    """
    m = cfg.model
    kernel = kernel_of(cfg)
    dev_index = {dev: i + 1 for i, dev in enumerate(dataio.CORN_DEVICES)}
    enc = DomainEncoding("onehot-device", len(dataio.CORN_DEVICES))

    def dmat(dev, n):
        return encode(enc, [BackgroundRecord(device=dev_index[dev])] * n)

    parts = [(train_dev, train_idx)] + list(pool_parts)
    Xp = np.vstack([spectra[dev][idx] for dev, idx in parts]).T
    Dp = np.hstack([dmat(dev, len(idx)) for dev, idx in parts])
    n_lab = len(train_idx)
    labeled = np.zeros(Xp.shape[1], dtype=bool)
    labeled[:n_lab] = True
    n_prop = props.shape[1]
    out = {h: {key: np.zeros(n_prop) for key, _, _ in eval_parts} for h in hs}
    shared = None
    for p in range(n_prop):
        if m.method == "smida":
            targets = np.zeros(Xp.shape[1])
            targets[:n_lab] = props[train_idx, p]
            Y = LabelMatrix.regression(targets, labeled, normalize=cfg.protocol.normalize_targets)
            model = fit_subspace("smida", Xp, Dp, kernel, max(hs), m.mu, m.gamma, m.augment, Y)
        else:
            if shared is None:
                shared = [fit_subspace(m.method, Xp, Dp, kernel, max(hs), m.mu, m.gamma, m.augment)]
            model = shared[0]
        Ztr = embed(model, spectra[train_dev][train_idx].T, dmat(train_dev, n_lab))
        Zte = {key: embed(model, spectra[dev][idx].T, dmat(dev, len(idx))) for key, dev, idx in eval_parts}
        for h in hs:
            k = Ztr.shape[1] if model is None else min(h, model.h)
            reg = fit_ridge(Ztr[:, :k], props[train_idx, p], cfg.predictor.lam)
            for key, dev, idx in eval_parts:
                out[h][key][p] = metrics(reg.predict(Zte[key][:, :k]), props[idx, p], "rmse")
    return out


def _corn_targets(cfg, spectra):
    targets = [str(t) for t in cfg.protocol.targets] or ["mp5", "mp6"]
    for t in targets:
        if t not in spectra or t == "m5":
            raise ConfigError(f"protocol.targets: {t!r} is not a corn target device (mp5, mp6)")
    return targets


def run_corn(cfg: ExperimentConfig, data: Optional[dict] = None):
    """m5 is the labeled source, mp5/mp6 the targets; samples 4, 8, ..., 80
    are the test set in each domain.

    Variants: ``single`` (one subspace per target), ``multi`` (one subspace
    for all targets at once) and ``train-on-target`` (source replaced by
    the target's own training samples).
    """
    data = data if data is not None else dataio.load_corn(cfg.data.path or None)
    spectra = {dev: np.asarray(data[dev], dtype=np.float64) for dev in dataio.CORN_DEVICES}
    props = np.asarray(data["propvals"], dtype=np.float64)
    test = np.flatnonzero(dataio.corn_test_mask(props.shape[0]))
    train = np.flatnonzero(~dataio.corn_test_mask(props.shape[0]))
    targets = _corn_targets(cfg, spectra)
    variant = cfg.protocol.variant or "single"
    hs = _h_values(cfg)
    res = {h: {} for h in hs}
    if variant == "multi":
        got = _corn_fit_predict(
            cfg, spectra, props, "m5", train, [(t, test) for t in targets], [(t, t, test) for t in targets], hs
        )
        for h in hs:
            res[h].update(got[h])
    elif variant in ("single", "train-on-target"):
        for t in targets:
            src = "m5" if variant == "single" else t
            got = _corn_fit_predict(cfg, spectra, props, src, train, [(t, test)], [(t, t, test)], hs)
            for h in hs:
                res[h].update(got[h])
    else:
        raise ConfigError(f"protocol.variant: corn variant must be single, multi or train-on-target, got {variant!r}")
    rows = []
    for h in hs:
        suffix = f"@h={h}" if cfg.protocol.sweep_h else ""
        for t in targets:
            for name, v in zip(dataio.CORN_PROPERTIES, res[h][t]):
                rows.append((f"{t}/{name}{suffix}", "rmse", float(v)))
            rows.append((f"{t}/average{suffix}", "rmse", float(np.mean(res[h][t]))))
    return rows, []


def corn_cv_scores(cfg: ExperimentConfig, data: dict, hs: Sequence[int], folds: int = 3) -> dict:
    """Mean RMSE per h over a k-fold split of the training sets; the held-out
    fold of each target's training set plays the unlabeled target."""
    props = np.asarray(data["propvals"], dtype=np.float64)
    spectra = {dev: np.asarray(data[dev], dtype=np.float64) for dev in dataio.CORN_DEVICES}
    train = np.flatnonzero(~dataio.corn_test_mask(props.shape[0]))
    targets = _corn_targets(cfg, spectra)
    scores = {h: [] for h in hs}
    for k in range(folds):
        held = train[k::folds]
        fit_idx = np.setdiff1d(train, held)
        for t in targets:
            got = _corn_fit_predict(cfg, spectra, props, "m5", fit_idx, [(t, held)], [(t, t, held)], list(hs))
            for h in hs:
                scores[h].append(float(np.mean(got[h][t])))
    return {h: float(np.mean(v)) for h, v in scores.items()}


# --------------------------------------------------------------- driver

PROTOCOLS = {"transfer": run_transfer, "gas": run_gas, "corn": run_corn}

# Declared search space used by the shipped configs; h is swept by
# truncating one fit per (mu, gamma, sigma) point.
DEFAULT_GRID = {
    "h": list(range(2, 61)),
    "mu": [0.1, 1.0, 10.0],
    "gamma": [0.1, 1.0, 10.0],
    "sigma": [0.5, 1.0, 2.0, 5.0, 10.0],
}


def _axes(cfg):
    g = cfg.grid
    return (
        sorted(set(int(h) for h in g.h)) or [cfg.model.h],
        [float(v) for v in g.mu] or [cfg.model.mu],
        [float(v) for v in g.gamma] or [cfg.model.gamma],
        [float(v) for v in g.sigma] or [cfg.kernel.sigma],
    )


def _with(cfg, h, mu, gamma, sigma, sweep=()):
    return replace(
        cfg,
        model=replace(cfg.model, h=int(h), mu=float(mu), gamma=float(gamma)),
        kernel=replace(cfg.kernel, sigma=float(sigma)),
        protocol=replace(cfg.protocol, sweep_h=list(sweep)),
    )


def _headline(rows, h):
    """Average of the summary rows (or of all rows) tagged with ``h``."""
    tag = f"@h={h}"
    mine = [(t[: -len(tag)], v) for t, _, v in rows if t.endswith(tag)]
    avg = [v for t, v in mine if t == "average" or t.endswith("/average")]
    return float(np.mean(avg or [v for _, v in mine]))


def grid_search(cfg: ExperimentConfig, data=None):
    """Score every grid point; return (selected config, trials).

    Corn points are scored by 3-fold cross-validation on the training
    sets. Other protocols are scored on their own targets.
    """
    hs, mus, gammas, sigmas = _axes(cfg)
    if cfg.model.method != "smida":
        gammas = [cfg.model.gamma]
    if cfg.kernel.family != "rbf":
        sigmas = [cfg.kernel.sigma]
    lower_better = cfg.metric.kind == "rmse" or cfg.protocol.name == "corn"
    trials = []
    for mu, gamma, sigma in itertools.product(mus, gammas, sigmas):
        point = _with(cfg, max(hs), mu, gamma, sigma, hs)
        if cfg.protocol.name == "corn":
            per_h = corn_cv_scores(point, data, hs)
            selection = "cv3"
        else:
            rows, _ = PROTOCOLS[cfg.protocol.name](point, data)
            per_h = {h: _headline(rows, h) for h in hs}
            selection = "target"
        for h in hs:
            trials.append({"h": h, "mu": mu, "gamma": gamma, "sigma": sigma, "score": per_h[h], "selection": selection})
    scores = np.array([t["score"] for t in trials])
    best = int(np.argmin(scores) if lower_better else np.argmax(scores))
    t = trials[best]
    return _with(cfg, t["h"], t["mu"], t["gamma"], t["sigma"], cfg.protocol.sweep_h), trials


def _has_grid(cfg):
    return any(len(a) > 1 for a in _axes(cfg))


def run_experiment(cfg: ExperimentConfig, data=None) -> dict:
    t0 = time.perf_counter()
    if data is None and cfg.protocol.name == "gas":
        data = dataio.load_gas(cfg.data.path or None)
    elif data is None and cfg.protocol.name == "corn":
        data = dataio.load_corn(cfg.data.path or None)
    trials = []
    run_cfg = cfg
    if _has_grid(cfg):
        run_cfg, trials = grid_search(cfg, data)
    rows, summaries = PROTOCOLS[cfg.protocol.name](run_cfg, data)
    return {
        "config": cfg.as_dict(),
        "selected": {
            "h": run_cfg.model.h,
            "mu": run_cfg.model.mu,
            "gamma": run_cfg.model.gamma,
            "sigma": run_cfg.kernel.sigma,
        },
        "tasks": [{"task": t, "metric": k, "value": v} for t, k, v in rows],
        "grid": trials,
        "models": summaries,
        "artifacts": {},
        "timing": {"seconds": time.perf_counter() - t0},
    }
