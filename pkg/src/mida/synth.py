"""Seeded 2-D/3-D toy problems for domain adaptation.

Four scenarios:

``two-domain-shift`` (fig1)
    Two Gaussian classes; the target domain is the source translated
    obliquely to the class boundary. ``conditional=True`` translates it
    straight across the boundary so target class 0 lands on source class 1.
``continuous-drift`` (fig2)
    Class means drift to the upper right with the chronological index.
    First half of the stream is the source, second half the target.
``label-mixing-3d`` (fig3)
    Two high-variance axes are identical in both domains and carry no
    class information; classes and the domain shift share a low-variance
    axis. Unsupervised variance ranking discards that axis.
``nonlinear-shift`` (fig4)
    Class 0 barely moves between domains while class 1 jumps to the
    opposite side, so no single translation aligns the domains.

All randomness comes from numpy's PCG64 bit generator seeded directly
with the scenario seed; sample order is fixed (domain, then class).
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .dataio import DatasetTable
from .domains import BackgroundRecord

KINDS = {
    "fig1": "two-domain-shift",
    "fig2": "continuous-drift",
    "fig3": "label-mixing-3d",
    "fig4": "nonlinear-shift",
}

# frozen generator constants
FIG1_CLASS_MEAN = np.array([0.0, 1.0])  # class c sits at (2c - 1) * this
FIG1_SD = np.array([2.0, 0.5])
FIG1_SHIFT = np.array([3.0, 3.0])
FIG1_SHIFT_CONDITIONAL = np.array([0.0, 2.0])

FIG2_CLASS_MEAN = np.array([1.0, 0.0])
FIG2_SD = np.array([0.5, 1.0])
FIG2_DRIFT = 6.0  # total displacement along (1, 1) over the stream

FIG3_SD = np.array([0.4, 0.08, 0.4])
FIG3_TILT = 0.1  # class axis leans this many radians from x2 towards x3
FIG3_SEP = 0.2
FIG3_SHIFT = 0.4

FIG4_SD = 4.0
FIG4_CENTERS = {  # (domain, class) -> mean
    (0, 0): (0.0, 0.0),
    (0, 1): (30.0, 0.0),
    (1, 0): (0.0, 5.0),
    (1, 1): (-30.0, 5.0),
}


@dataclass(frozen=True)
class SynthScenario:
    kind: str = "two-domain-shift"
    n_per_class_per_domain: int = 100
    seed: int = 0
    conditional: bool = False

    def __post_init__(self):
        kind = KINDS.get(self.kind, self.kind)
        if kind not in KINDS.values():
            raise ValueError(f"unknown scenario {self.kind!r}; expected one of {sorted(KINDS)} or {sorted(KINDS.values())}")
        object.__setattr__(self, "kind", kind)
        if int(self.n_per_class_per_domain) != self.n_per_class_per_domain or self.n_per_class_per_domain < 10:
            raise ValueError(f"need at least 10 samples per class per domain, got {self.n_per_class_per_domain}")


def _rng(seed: int) -> np.random.Generator:
    return np.random.Generator(np.random.PCG64(seed))


def _blocks(rng, n, means, sd):
    """Draw domain-major, class-minor Gaussian blocks."""
    pts, labels, domains = [], [], []
    for dom in (0, 1):
        for c in (0, 1):
            pts.append(rng.standard_normal((n, len(sd))) * sd + means[(dom, c)])
            labels += [c] * n
            domains += [dom] * n
    return np.vstack(pts).T, np.array(labels), np.array(domains)


def _discrete_records(domains):
    return [
        BackgroundRecord(device=int(d) + 1, batch=int(d) + 1, role="source-labeled" if d == 0 else "target-test")
        for d in domains
    ]


def generate(s: SynthScenario):
    """Return ``(X, records, labels)`` with X of shape (m, n)."""
    rng = _rng(s.seed)
    n = s.n_per_class_per_domain
    if s.kind == "two-domain-shift":
        shift = FIG1_SHIFT_CONDITIONAL if s.conditional else FIG1_SHIFT
        means = {(d, c): (2 * c - 1) * FIG1_CLASS_MEAN + d * shift for d in (0, 1) for c in (0, 1)}
        X, y, dom = _blocks(rng, n, means, FIG1_SD)
        return X, _discrete_records(dom), y
    if s.kind == "label-mixing-3d":
        axis = np.array([0.0, np.cos(FIG3_TILT), np.sin(FIG3_TILT)])
        means = {(d, c): (2 * c - 1) * FIG3_SEP * axis + d * FIG3_SHIFT * axis for d in (0, 1) for c in (0, 1)}
        X, y, dom = _blocks(rng, n, means, FIG3_SD)
        return X, _discrete_records(dom), y
    if s.kind == "nonlinear-shift":
        means = {k: np.array(v) for k, v in FIG4_CENTERS.items()}
        X, y, dom = _blocks(rng, n, means, np.full(2, FIG4_SD))
        return X, _discrete_records(dom), y
    # continuous drift: classes alternate along the stream
    total = 4 * n
    t = np.arange(1, total + 1, dtype=np.float64)
    y = np.arange(total) % 2
    mean = (2 * y - 1)[None, :] * FIG2_CLASS_MEAN[:, None] + FIG2_DRIFT * (t / total)[None, :]
    X = mean + rng.standard_normal((2, total)) * FIG2_SD[:, None]
    records = [
        BackgroundRecord(device=1, time=float(ti), batch=int(ti), role="source-labeled" if ti <= total // 2 else "target-test")
        for ti in t
    ]
    return X, records, y


def to_table(X, records, labels) -> DatasetTable:
    X = np.asarray(X)
    return DatasetTable(
        features=X.T,
        columns=[f"x{j + 1}" for j in range(X.shape[0])],
        label=[str(int(v)) for v in labels],
        device=[r.device for r in records],
        time=[r.time for r in records],
        batch=[r.batch for r in records],
        role=[r.role for r in records],
    )


def generate_table(s: SynthScenario) -> DatasetTable:
    return to_table(*generate(s))


def default_encoding(kind: str):
    """The domain encoding each scenario is meant to be run with."""
    from .domains import DomainEncoding

    kind = KINDS.get(kind, kind)
    if kind == "continuous-drift":
        return DomainEncoding("batch-index", 1)
    return DomainEncoding("onehot-device", 2)
