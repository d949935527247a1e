"""Dataset ingestion, standardization, splitting and mini-batching."""

from __future__ import annotations

import csv
from dataclasses import dataclass, replace
from pathlib import Path

import numpy as np

from .plan import fisher_yates, philox

SPLIT_STREAM = 10
SHUFFLE_STREAM = 11
TEST_SPLIT_STREAM = 12


class ParseError(ValueError):
    pass


@dataclass(frozen=True)
class Dataset:
    features: np.ndarray          # (N, d) float64
    labels: np.ndarray            # (N,) int64 class ids or float64 targets
    task: str = "classification"
    classes: tuple | None = None  # original label values, index = class id
    norm_stats: tuple | None = None  # (mean, std) fitted on training data
    name: str = ""

    def __post_init__(self):
        if self.features.ndim != 2 or len(self.labels) != len(self.features):
            raise ValueError(
                f"features {self.features.shape} / labels "
                f"{self.labels.shape} mismatch")
        if not np.all(np.isfinite(self.features)):
            raise ValueError(f"{self.name or 'dataset'}: non-finite features")
        if self.task == "classification" and self.classes is not None:
            if len(self.labels) and (self.labels.min() < 0 or
                                     self.labels.max() >= len(self.classes)):
                raise ValueError("class ids out of range")

    @property
    def n(self) -> int:
        return self.features.shape[0]

    @property
    def d(self) -> int:
        return self.features.shape[1]

    @property
    def k(self) -> int | None:
        return len(self.classes) if self.classes is not None else None

    def subset(self, idx, name: str | None = None) -> Dataset:
        idx = np.asarray(idx, dtype=np.int64)
        return replace(self, features=self.features[idx],
                       labels=self.labels[idx],
                       name=self.name if name is None else name)


def _encode_labels(raw: list[float], task: str, classes=None):
    raw = np.asarray(raw, dtype=np.float64)
    if task == "regression":
        return raw, None
    if task != "classification":
        raise ValueError(f"unknown task {task!r}")
    if classes is None:
        classes = tuple(np.unique(raw).tolist())
    lookup = {c: i for i, c in enumerate(classes)}
    try:
        ids = np.array([lookup[v] for v in raw.tolist()], dtype=np.int64)
    except KeyError as e:
        raise ParseError(f"label {e.args[0]!r} not in known classes "
                         f"{list(classes)}") from None
    return ids, tuple(classes)


def parse_libsvm(path, n_features: int | None = None,
                 task: str = "classification", classes=None,
                 name: str | None = None) -> Dataset:
    """Read ``label idx:val ...`` lines (1-based, strictly ascending indices).

    ``n_features`` pins ``d``; otherwise ``d`` is the largest index seen.
    ``classes`` reuses another split's label mapping.
    """
    path = Path(path)
    labels: list[float] = []
    rows: list[tuple[list[int], list[float]]] = []
    max_idx = 0
    with open(path) as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.split("#", 1)[0].strip()
            if not line:
                continue
            tokens = line.split()
            try:
                labels.append(float(tokens[0]))
            except ValueError:
                raise ParseError(
                    f"{path}:{lineno}: bad label {tokens[0]!r}") from None
            idxs, vals = [], []
            prev = 0
            for tok in tokens[1:]:
                key, sep, val = tok.partition(":")
                try:
                    if not sep:
                        raise ValueError
                    j, v = int(key), float(val)
                except ValueError:
                    raise ParseError(
                        f"{path}:{lineno}: malformed token {tok!r}") from None
                if j < 1:
                    raise ParseError(f"{path}:{lineno}: index {j} < 1")
                if j == prev:
                    raise ParseError(f"{path}:{lineno}: duplicate index {j}")
                if j < prev:
                    raise ParseError(
                        f"{path}:{lineno}: index {j} after {prev} "
                        "(indices must ascend)")
                if not np.isfinite(v):
                    raise ParseError(f"{path}:{lineno}: non-finite value")
                prev = j
                idxs.append(j - 1)
                vals.append(v)
            max_idx = max(max_idx, prev)
            rows.append((idxs, vals))
    if not rows:
        raise ParseError(f"{path}: no data rows")
    d = n_features if n_features is not None else max_idx
    if max_idx > d:
        raise ParseError(f"{path}: index {max_idx} exceeds pinned d={d}")
    X = np.zeros((len(rows), d))
    for i, (idxs, vals) in enumerate(rows):
        X[i, idxs] = vals
    y, classes = _encode_labels(labels, task, classes)
    return Dataset(X, y, task, classes, None, name or path.stem)


def _fmt(v: float) -> str:
    return repr(float(v))


def original_labels(ds: Dataset) -> np.ndarray:
    if ds.classes is None:
        return ds.labels
    return np.asarray(ds.classes)[ds.labels]


def write_libsvm(ds: Dataset, path) -> None:
    """Write ``ds`` with its original label values; zeros are omitted."""
    with open(path, "w") as fh:
        for label, row in zip(original_labels(ds), ds.features):
            nz = np.flatnonzero(row)
            items = " ".join(f"{j + 1}:{_fmt(row[j])}" for j in nz)
            fh.write(f"{_fmt(label)} {items}".rstrip() + "\n")


def parse_csv(path, label_column: int = 0, has_header: bool = False,
              delimiter: str = ",", task: str = "classification",
              classes=None, name: str | None = None) -> Dataset:
    path = Path(path)
    labels, rows = [], []
    width = None
    with open(path, newline="") as fh:
        reader = csv.reader(fh, delimiter=delimiter)
        for rownum, row in enumerate(reader, start=1):
            if has_header and rownum == 1:
                continue
            if not row or all(not c.strip() for c in row):
                continue
            if width is None:
                width = len(row)
                if not -width <= label_column < width:
                    raise ParseError(
                        f"{path}: label column {label_column} out of range")
            elif len(row) != width:
                raise ParseError(
                    f"{path}: row {rownum} has {len(row)} cells, "
                    f"expected {width}")
            values = []
            for col, cell in enumerate(row, start=1):
                try:
                    values.append(float(cell))
                except ValueError:
                    raise ParseError(
                        f"{path}: row {rownum}, column {col}: "
                        f"non-numeric cell {cell!r}") from None
            labels.append(values.pop(label_column))
            rows.append(values)
    if not rows:
        raise ParseError(f"{path}: no data rows")
    X = np.asarray(rows, dtype=np.float64)
    if not np.all(np.isfinite(X)):
        raise ParseError(f"{path}: non-finite feature values")
    y, classes = _encode_labels(labels, task, classes)
    return Dataset(X, y, task, classes, None, name or path.stem)


def write_csv(ds: Dataset, path, delimiter: str = ",") -> None:
    """Label in column 0, features after it, no header."""
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, delimiter=delimiter)
        for label, row in zip(original_labels(ds), ds.features):
            w.writerow([_fmt(label)] + [_fmt(v) for v in row])


def fit_standardizer(train: Dataset) -> tuple[np.ndarray, np.ndarray]:
    """Per-feature mean and scale. Features constant on ``train`` get scale
    1, so they map to 0 there and unseen values elsewhere stay bounded."""
    mean = train.features.mean(axis=0)
    std = train.features.std(axis=0)
    std = np.where(std < 1e-8, 1.0, std)
    return mean, std


def apply_standardizer(ds: Dataset, stats) -> Dataset:
    mean, std = stats
    if len(mean) != ds.d:
        raise ValueError(f"stats for d={len(mean)} applied to d={ds.d}")
    return replace(ds, features=(ds.features - mean) / std,
                   norm_stats=(mean, std))


def standardize(train: Dataset, *others: Dataset) -> list[Dataset]:
    """Fit per-feature mean/std on ``train`` and apply them to every set."""
    stats = fit_standardizer(train)
    return [apply_standardizer(ds, stats) for ds in (train, *others)]


def train_val_split(ds: Dataset, fraction: float, seed: int,
                    stream: int = SPLIT_STREAM,
                    suffix: str = "val") -> tuple[Dataset, Dataset | None]:
    """Random (unstratified) hold-out of ``round(fraction * N)`` rows."""
    if not 0.0 <= fraction < 1.0:
        raise ValueError("validation fraction must be in [0, 1)")
    n_val = int(round(fraction * ds.n))
    if n_val == 0:
        return ds, None
    perm = fisher_yates(ds.n, philox(seed, stream))
    val_idx = np.sort(perm[:n_val])
    train_idx = np.sort(perm[n_val:])
    return ds.subset(train_idx), ds.subset(val_idx, name=f"{ds.name}-{suffix}")


def batches(ds: Dataset, batch_size: int, shuffle_seed: int | None,
            epoch: int = 0):
    """Yield ``(X, y)`` blocks; the order depends only on (seed, epoch).

    ``shuffle_seed=None`` keeps the stored order. The last block may be
    short.
    """
    if batch_size < 1:
        raise ValueError("batch_size must be >= 1")
    if shuffle_seed is None:
        order = np.arange(ds.n)
    else:
        order = fisher_yates(ds.n, philox(shuffle_seed, SHUFFLE_STREAM, epoch))
    for start in range(0, ds.n, batch_size):
        idx = order[start:start + batch_size]
        yield ds.features[idx], ds.labels[idx]
