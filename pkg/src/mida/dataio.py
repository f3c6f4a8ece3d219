"""Dataset tables, canonical CSV I/O, preprocessing, importers and
experiment configuration."""
from __future__ import annotations

import csv
import io
import math
import os
import re
import sys
from dataclasses import dataclass, field, fields, asdict
from pathlib import Path
from typing import Any, Optional, Sequence

import numpy as np

from .domains import ROLES, BackgroundRecord

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

META_COLUMNS = ("label", "device", "time", "batch", "role")
ROLE_ALIASES = {
    "": "unlabeled",
    "train": "source-labeled",
    "source": "source-labeled",
    "test": "target-test",
    "target": "target-test",
    **{r: r for r in ROLES},
}
DATA_ENV = "MIDA_DATA_DIR"


class ParseError(ValueError):
    """Malformed input file; the message carries the location."""


class ConfigError(ValueError):
    """Invalid experiment configuration; the message names the key path."""


class DatasetMissing(FileNotFoundError):
    """A public dataset is not present locally."""


def fmt_float(x: float) -> str:
    return "%.17g" % x


@dataclass
class DatasetTable:
    """Samples as rows (``features`` is n x m) plus per-sample background.

    ``label`` entries are strings, floats, or None when absent.
    """

    features: np.ndarray
    columns: list
    label: list
    device: np.ndarray
    time: np.ndarray
    batch: np.ndarray
    role: list

    def __post_init__(self):
        self.features = np.asarray(self.features, dtype=np.float64)
        if self.features.ndim != 2:
            raise ValueError(f"features must be 2-D, got shape {self.features.shape}")
        n, m = self.features.shape
        if len(self.columns) != m:
            raise ValueError(f"{len(self.columns)} column names for {m} features")
        self.device = np.asarray(self.device, dtype=np.int64)
        self.time = np.asarray(self.time, dtype=np.float64)
        self.batch = np.asarray(self.batch, dtype=np.int64)
        self.label = list(self.label)
        self.role = list(self.role)
        for name in ("label", "device", "time", "batch", "role"):
            if len(getattr(self, name)) != n:
                raise ValueError(f"meta field {name!r} has {len(getattr(self, name))} entries for {n} samples")

    @classmethod
    def from_arrays(cls, X_rows, labels=None, device=None, time=None, batch=None, role=None, columns=None):
        X_rows = np.asarray(X_rows, dtype=np.float64)
        n, m = X_rows.shape
        return cls(
            features=X_rows,
            columns=list(columns) if columns is not None else [f"f{j + 1}" for j in range(m)],
            label=list(labels) if labels is not None else [None] * n,
            device=device if device is not None else np.ones(n, dtype=np.int64),
            time=time if time is not None else np.zeros(n),
            batch=batch if batch is not None else np.ones(n, dtype=np.int64),
            role=list(role) if role is not None else ["unlabeled"] * n,
        )

    @property
    def n(self) -> int:
        return self.features.shape[0]

    @property
    def X(self) -> np.ndarray:
        """Features in the column-sample convention (m x n)."""
        return self.features.T

    def records(self) -> list:
        return [
            BackgroundRecord(int(d), float(t), int(b), r)
            for d, t, b, r in zip(self.device, self.time, self.batch, self.role)
        ]

    def subset(self, idx) -> "DatasetTable":
        idx = np.asarray(idx)
        if idx.dtype == bool:
            idx = np.flatnonzero(idx)
        return DatasetTable(
            features=self.features[idx],
            columns=list(self.columns),
            label=[self.label[i] for i in idx],
            device=self.device[idx],
            time=self.time[idx],
            batch=self.batch[idx],
            role=[self.role[i] for i in idx],
        )

    def with_features(self, features, columns=None) -> "DatasetTable":
        """Same rows and metadata, new (n, m') feature block."""
        features = np.asarray(features, dtype=np.float64)
        if columns is None:
            columns = list(self.columns) if features.shape[1] == len(self.columns) else [f"f{j + 1}" for j in range(features.shape[1])]
        return DatasetTable(features, list(columns), self.label, self.device, self.time, self.batch, self.role)

    def mask(self, role: str) -> np.ndarray:
        return np.array([r == role for r in self.role], dtype=bool)

    def labeled_mask(self) -> np.ndarray:
        return np.array([lab is not None for lab in self.label], dtype=bool)

    def numeric_labels(self) -> np.ndarray:
        return np.array([np.nan if lab is None else float(lab) for lab in self.label])


def concat(tables: Sequence[DatasetTable]) -> DatasetTable:
    first = tables[0]
    for t in tables[1:]:
        if t.columns != first.columns:
            raise ValueError("cannot concatenate tables with different columns")
    return DatasetTable(
        features=np.vstack([t.features for t in tables]),
        columns=list(first.columns),
        label=[lab for t in tables for lab in t.label],
        device=np.concatenate([t.device for t in tables]),
        time=np.concatenate([t.time for t in tables]),
        batch=np.concatenate([t.batch for t in tables]),
        role=[r for t in tables for r in t.role],
    )


def split_roles(table: DatasetTable) -> dict:
    """Row indices per role; disjoint and exhaustive."""
    return {r: np.flatnonzero(table.mask(r)) for r in ROLES}


# ----------------------------------------------------------------- CSV


def load_csv(path) -> DatasetTable:
    with open(path, newline="", encoding="utf-8") as fh:
        return read_csv(fh, source=str(path))


def read_csv(fh, source: str = "<stream>") -> DatasetTable:
    reader = csv.reader(fh)
    try:
        header = next(reader)
    except StopIteration:
        raise ParseError(f"{source}: empty file, expected a header row") from None
    header = [h.strip() for h in header]
    if len(set(header)) != len(header):
        raise ParseError(f"{source}: duplicate column names in header")
    feat_idx = [j for j, h in enumerate(header) if h not in META_COLUMNS]
    meta_idx = {h: j for j, h in enumerate(header) if h in META_COLUMNS}
    rows, label, device, time, batch, role = [], [], [], [], [], []
    for lineno, row in enumerate(reader, start=2):
        if not row:
            continue
        if len(row) != len(header):
            raise ParseError(f"{source}:{lineno}: expected {len(header)} fields, found {len(row)}")
        vals = []
        for j in feat_idx:
            try:
                vals.append(float(row[j]))
            except ValueError:
                raise ParseError(f"{source}:{lineno}: column {header[j]!r} is not numeric: {row[j]!r}") from None
        rows.append(vals)

        def meta(name, conv, default):
            if name not in meta_idx or row[meta_idx[name]].strip() == "":
                return default
            cell = row[meta_idx[name]].strip()
            try:
                return conv(cell)
            except ValueError:
                raise ParseError(f"{source}:{lineno}: column {name!r} has invalid value {cell!r}") from None

        label.append(meta("label", str, None))
        device.append(meta("device", int, 1))
        time.append(meta("time", float, 0.0))
        batch.append(meta("batch", int, 1))
        r = meta("role", str, "")
        if r not in ROLE_ALIASES:
            raise ParseError(f"{source}:{lineno}: unknown role {r!r}")
        role.append(ROLE_ALIASES[r])
    feats = np.array(rows, dtype=np.float64).reshape(len(rows), len(feat_idx))
    return DatasetTable(feats, [header[j] for j in feat_idx], label, device, time, batch, role)


def _label_cell(lab) -> str:
    if lab is None:
        return ""
    if isinstance(lab, (float, np.floating)):
        return fmt_float(float(lab))
    return str(lab)


def write_csv(table: DatasetTable, fh) -> None:
    writer = csv.writer(fh, lineterminator="\n")
    writer.writerow(list(table.columns) + list(META_COLUMNS))
    for i in range(table.n):
        writer.writerow(
            [fmt_float(v) for v in table.features[i]]
            + [
                _label_cell(table.label[i]),
                str(int(table.device[i])),
                fmt_float(float(table.time[i])),
                str(int(table.batch[i])),
                table.role[i],
            ]
        )


def save_csv(table: DatasetTable, path) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        write_csv(table, fh)


def dumps_csv(table: DatasetTable) -> str:
    buf = io.StringIO()
    write_csv(table, buf)
    return buf.getvalue()


# ----------------------------------------------------------- preprocessing


def zscore_per_batch(table: DatasetTable) -> DatasetTable:
    """Zero mean, unit sample variance for each feature within each batch.

    Features that are constant within a batch (or singleton batches) map to 0.
    """
    out = np.zeros_like(table.features)
    for b in np.unique(table.batch):
        rows = table.batch == b
        block = table.features[rows]
        if block.shape[0] < 2:
            continue
        mean = block.mean(axis=0)
        sd = block.std(axis=0, ddof=1)
        ok = sd > 1e-12 * np.maximum(1.0, np.abs(mean))
        z = np.zeros_like(block)
        z[:, ok] = (block[:, ok] - mean[ok]) / sd[ok]
        out[rows] = z
    return table.with_features(out)


def subsample_target(
    table: DatasetTable,
    cap: Optional[int] = None,
    factor: float = 2.0,
    seed: int = 0,
    by: Optional[str] = "batch",
) -> DatasetTable:
    """Keep every source-labeled row and at most ``cap`` rows per target pool.

    ``cap`` defaults to ``factor`` times the number of source rows. Pools
    are the distinct values of field ``by`` among non-source rows, or one
    pool when ``by`` is None. Row order is preserved.
    """
    source = table.mask("source-labeled")
    n_src = int(source.sum())
    if cap is None:
        cap = int(math.floor(factor * n_src))
    rng = np.random.Generator(np.random.PCG64(seed))
    keep = list(np.flatnonzero(source))
    others = np.flatnonzero(~source)
    keys = np.zeros(others.size, dtype=np.int64) if by is None else np.asarray(getattr(table, by))[others]
    for key in np.unique(keys):
        pool = others[keys == key]
        if pool.size > cap:
            pool = np.sort(rng.choice(pool, size=cap, replace=False))
        keep.extend(pool.tolist())
    return table.subset(np.sort(np.array(keep, dtype=np.int64)))


# --------------------------------------------------------------- importers

GAS_BATCHES = 10
GAS_FEATURES = 128
GAS_TOTAL = 13910


def data_root(path: Optional[str] = None) -> Path:
    root = path or os.environ.get(DATA_ENV, "")
    return Path(root) if root else Path("data")


def read_gas_batch(path, batch: int) -> DatasetTable:
    """One UCI gas-sensor batch file: ``label[;conc] idx:value ...`` per line."""
    rows, labels = [], []
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            parts = line.split()
            if not parts:
                continue
            head = parts[0].split(";")[0]
            try:
                lab = int(float(head))
            except ValueError:
                raise ParseError(f"{path}:{lineno}: bad class label {parts[0]!r}") from None
            vec = np.zeros(GAS_FEATURES)
            for tok in parts[1:]:
                try:
                    k, v = tok.split(":")
                    k = int(k)
                    vec[k - 1] = float(v)
                except (ValueError, IndexError):
                    raise ParseError(f"{path}:{lineno}: bad feature token {tok!r}") from None
            rows.append(vec)
            labels.append(str(lab))
    n = len(rows)
    return DatasetTable(
        features=np.array(rows).reshape(n, GAS_FEATURES),
        columns=[f"s{j + 1}" for j in range(GAS_FEATURES)],
        label=labels,
        device=np.ones(n, dtype=np.int64),
        time=np.full(n, float(batch)),
        batch=np.full(n, batch, dtype=np.int64),
        role=["source-labeled" if batch == 1 else "target-test"] * n,
    )


def gas_dir(root: Optional[str] = None) -> Path:
    base = data_root(root)
    for cand in (base / "gas", base / "Dataset", base):
        if (cand / "batch1.dat").exists():
            return cand
    raise DatasetMissing(
        f"gas-sensor batch files (batch1.dat ... batch10.dat) not found under {base}. "
        f"Download the UCI 'Gas Sensor Array Drift Dataset at Different Concentrations', "
        f"unpack it into ${DATA_ENV}/gas/ and retry."
    )


def load_gas(root: Optional[str] = None, validate: bool = True) -> DatasetTable:
    d = gas_dir(root)
    table = concat([read_gas_batch(d / f"batch{b}.dat", b) for b in range(1, GAS_BATCHES + 1)])
    if validate:
        if table.n != GAS_TOTAL:
            raise ParseError(f"gas-sensor dataset has {table.n} samples, expected {GAS_TOTAL}")
        bad = sorted({lab for lab in table.label if lab not in {str(k) for k in range(1, 7)}})
        if bad:
            raise ParseError(f"gas-sensor labels outside 1..6: {bad}")
    return table


CORN_DEVICES = ("m5", "mp5", "mp6")
CORN_PROPERTIES = ("moisture", "oil", "protein", "starch")
CORN_SAMPLES = 80
CORN_FEATURES = 700


def corn_test_mask(n: int = CORN_SAMPLES) -> np.ndarray:
    """Samples 4, 8, ..., 80 (1-based) form the test set."""
    return (np.arange(1, n + 1) % 4) == 0


def _read_matrix_text(path) -> np.ndarray:
    with open(path, encoding="utf-8") as fh:
        text = fh.read()
    rows = [r for r in (re.split(r"[,\s;]+", line.strip()) for line in text.splitlines()) if r and r != [""]]
    try:
        return np.array([[float(v) for v in r] for r in rows])
    except ValueError as exc:
        raise ParseError(f"{path}: non-numeric entry ({exc})") from None


def _mat_array(obj):
    # plain arrays, or MATLAB structs exported with a 'data' field
    if isinstance(obj, np.ndarray) and obj.dtype.names and "data" in obj.dtype.names:
        return np.asarray(obj["data"][0, 0], dtype=np.float64)
    return np.asarray(obj, dtype=np.float64)


def corn_dir(root: Optional[str] = None) -> Path:
    base = data_root(root)
    for cand in (base / "corn", base):
        if (cand / "corn.mat").exists() or (cand / "m5spec.csv").exists() or (cand / "m5spec.txt").exists():
            return cand
    raise DatasetMissing(
        f"corn dataset not found under {base}. Place corn.mat (numeric arrays m5spec, mp5spec, mp6spec, "
        f"propvals) or m5spec.csv, mp5spec.csv, mp6spec.csv, propvals.csv into ${DATA_ENV}/corn/."
    )


def load_corn(root: Optional[str] = None) -> dict:
    """Return {'m5': (80, 700), 'mp5': ..., 'mp6': ..., 'propvals': (80, 4)}."""
    d = corn_dir(root)
    names = [f"{dev}spec" for dev in CORN_DEVICES] + ["propvals"]
    out = {}
    if (d / "corn.mat").exists():
        try:
            from scipy.io import loadmat
        except ImportError as exc:
            raise ImportError("reading corn.mat needs scipy (pip install 'artifact[mat]')") from exc
        raw = loadmat(d / "corn.mat")
        for name in names:
            if name not in raw:
                raise ParseError(f"{d / 'corn.mat'}: variable {name!r} missing")
            out[name] = _mat_array(raw[name])
    else:
        for name in names:
            for ext in (".csv", ".txt"):
                if (d / f"{name}{ext}").exists():
                    out[name] = _read_matrix_text(d / f"{name}{ext}")
                    break
            else:
                raise ParseError(f"{d}: missing {name}.csv")
    result = {dev: out[f"{dev}spec"] for dev in CORN_DEVICES}
    result["propvals"] = out["propvals"]
    for dev in CORN_DEVICES:
        if result[dev].shape != (CORN_SAMPLES, CORN_FEATURES):
            raise ParseError(f"corn {dev} spectra have shape {result[dev].shape}, expected (80, 700)")
    if result["propvals"].shape != (CORN_SAMPLES, len(CORN_PROPERTIES)):
        raise ParseError(f"corn propvals have shape {result['propvals'].shape}, expected (80, 4)")
    return result


# ------------------------------------------------------------------ config


@dataclass
class DataSection:
    source: str = "synth"  # synth | csv | gas | corn
    scenario: str = "fig1"
    n: int = 100
    conditional: bool = False
    path: str = ""


@dataclass
class EncodingSection:
    scheme: str = "onehot-device"
    size: int = 2


@dataclass
class KernelSection:
    family: str = "linear"
    degree: int = 2
    sigma: float = 1.0


@dataclass
class ModelSection:
    method: str = "mida"  # mida | smida | kpca | none
    h: int = 2
    mu: float = 1.0
    gamma: float = 0.0
    augment: bool = True


@dataclass
class PredictorSection:
    kind: str = "logistic"  # logistic | ridge
    l2: float = 1e-4
    lam: float = 1.0


@dataclass
class MetricSection:
    kind: str = "accuracy"


@dataclass
class ProtocolSection:
    name: str = "transfer"  # transfer | gas | corn
    variant: str = ""
    targets: list = field(default_factory=list)
    n_t_factor: float = 2.0
    zscore: bool = True
    normalize_targets: bool = True
    sweep_h: list = field(default_factory=list)


@dataclass
class GridSection:
    h: list = field(default_factory=list)
    mu: list = field(default_factory=list)
    gamma: list = field(default_factory=list)
    sigma: list = field(default_factory=list)


@dataclass
class ExperimentConfig:
    seed: int = 0
    data: DataSection = field(default_factory=DataSection)
    encoding: EncodingSection = field(default_factory=EncodingSection)
    kernel: KernelSection = field(default_factory=KernelSection)
    model: ModelSection = field(default_factory=ModelSection)
    predictor: PredictorSection = field(default_factory=PredictorSection)
    metric: MetricSection = field(default_factory=MetricSection)
    protocol: ProtocolSection = field(default_factory=ProtocolSection)
    grid: GridSection = field(default_factory=GridSection)

    def as_dict(self) -> dict:
        return asdict(self)


CHOICES = {
    "data.source": ("synth", "csv", "gas", "corn"),
    "data.scenario": ("fig1", "fig2", "fig3", "fig4"),
    "encoding.scheme": ("onehot-device", "device-and-time", "batch-index", "onehot-domain"),
    "kernel.family": ("linear", "polynomial", "rbf"),
    "model.method": ("mida", "smida", "kpca", "none"),
    "predictor.kind": ("logistic", "ridge"),
    "metric.kind": ("accuracy", "f1", "rmse"),
    "protocol.name": ("transfer", "gas", "corn"),
}


def _coerce(path: str, value: Any, default: Any):
    if isinstance(default, bool):
        if not isinstance(value, bool):
            raise ConfigError(f"{path}: expected a boolean, got {value!r}")
        return value
    if isinstance(default, int):
        if isinstance(value, bool) or not isinstance(value, int):
            raise ConfigError(f"{path}: expected an integer, got {value!r}")
        return value
    if isinstance(default, float):
        if isinstance(value, bool) or not isinstance(value, (int, float)):
            raise ConfigError(f"{path}: expected a number, got {value!r}")
        return float(value)
    if isinstance(default, str):
        if not isinstance(value, str):
            raise ConfigError(f"{path}: expected a string, got {value!r}")
        return value
    if isinstance(default, list):
        if not isinstance(value, list):
            raise ConfigError(f"{path}: expected an array, got {value!r}")
        return list(value)
    raise ConfigError(f"{path}: unsupported value {value!r}")


def _fill(cls, raw: dict, prefix: str):
    obj = cls()
    known = {f.name: f for f in fields(cls)}
    for key, value in raw.items():
        path = f"{prefix}{key}"
        if key not in known:
            raise ConfigError(f"unknown key {path!r}")
        default = getattr(obj, key)
        if hasattr(default, "__dataclass_fields__"):
            if not isinstance(value, dict):
                raise ConfigError(f"{path}: expected a table")
            setattr(obj, key, _fill(type(default), value, f"{path}."))
        else:
            setattr(obj, key, _coerce(path, value, default))
    return obj


def validate_config(cfg: ExperimentConfig) -> ExperimentConfig:
    for path, allowed in CHOICES.items():
        section, key = path.split(".")
        value = getattr(getattr(cfg, section), key)
        if value not in allowed:
            raise ConfigError(f"{path}: {value!r} not one of {list(allowed)}")
    m = cfg.model
    if m.h < 1:
        raise ConfigError(f"model.h: must be >= 1, got {m.h}")
    if not m.mu > 0:
        raise ConfigError(f"model.mu: must be positive, got {m.mu}")
    if m.gamma < 0:
        raise ConfigError(f"model.gamma: must be non-negative, got {m.gamma}")
    if m.method == "smida" and m.gamma == 0:
        raise ConfigError("model.gamma: method 'smida' needs gamma > 0")
    if cfg.kernel.degree < 1:
        raise ConfigError("kernel.degree: must be >= 1")
    if not cfg.kernel.sigma > 0:
        raise ConfigError("kernel.sigma: must be positive")
    if cfg.encoding.size < 1:
        raise ConfigError("encoding.size: must be >= 1")
    if cfg.data.n < 10:
        raise ConfigError("data.n: must be >= 10")
    if cfg.predictor.l2 < 0 or cfg.predictor.lam < 0:
        raise ConfigError("predictor: regularization must be non-negative")
    if cfg.data.source == "csv" and not cfg.data.path:
        raise ConfigError("data.path: required when data.source = 'csv'")
    return cfg


def parse_config(text: str) -> ExperimentConfig:
    try:
        raw = tomllib.loads(text)
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError(f"config is not valid TOML: {exc}") from None
    return validate_config(_fill(ExperimentConfig, raw, ""))


def load_config(path) -> ExperimentConfig:
    with open(path, encoding="utf-8") as fh:
        return parse_config(fh.read())
