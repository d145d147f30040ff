"""Dataset loading, binarization preprocessing, and a synthetic generator
producing cluster-labeled binary data with controllable spurious feature
correlations.
"""

from __future__ import annotations

import csv
import warnings
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from .core import as_data_matrix

__all__ = [
    "BiasSpec",
    "ColumnBinning",
    "LabeledDataset",
    "binarize",
    "generate_biased",
    "load_csv",
    "save_dataset",
]


@dataclass
class LabeledDataset:
    """A data matrix plus optional ground-truth labels and provenance."""

    X: np.ndarray
    labels: np.ndarray | None = None
    feature_names: list[str] | None = None
    provenance: dict = field(default_factory=dict)

    def __post_init__(self):
        self.X = as_data_matrix(self.X)
        if self.labels is not None:
            self.labels = np.asarray(self.labels, dtype=np.int64)
            if self.labels.shape != (self.X.shape[0],):
                raise ValueError("labels must have one entry per sample")
            if self.labels.size and self.labels.min() < 0:
                raise ValueError("labels must be non-negative")
        if self.feature_names is not None and len(self.feature_names) != self.X.shape[1]:
            raise ValueError("feature_names must have one entry per column")


def _is_number(text: str) -> bool:
    try:
        float(text)
    except ValueError:
        return False
    return True


def load_csv(path, label_column=None) -> LabeledDataset:
    """Parse a numeric CSV into a dataset.

    A header row is auto-detected (any non-numeric cell in the first row).
    ``label_column`` selects the ground-truth column by header name or by
    integer position; label cells may be non-numeric and are mapped to
    integer codes 0..C-1 in sorted order of the distinct values.
    """
    path = Path(path)
    with path.open("r", encoding="utf-8-sig", newline="") as fh:
        rows = [row for row in csv.reader(fh) if row]
    if not rows:
        raise ValueError(f"{path}: empty file")

    width = len(rows[0])
    for lineno, row in enumerate(rows, start=1):
        if len(row) != width:
            raise ValueError(
                f"{path}: ragged row at line {lineno} ({len(row)} cells, expected {width})"
            )

    has_header = not all(_is_number(cell) for cell in rows[0])
    header = [cell.strip() for cell in rows[0]] if has_header else None
    body = rows[1:] if has_header else rows
    if not body:
        raise ValueError(f"{path}: no data rows")

    label_idx = None
    if label_column is not None:
        if isinstance(label_column, str):
            if header is None:
                raise ValueError(f"{path}: label column {label_column!r} needs a header row")
            if label_column not in header:
                raise ValueError(f"{path}: missing label column {label_column!r}")
            label_idx = header.index(label_column)
        else:
            label_idx = int(label_column)
            if not 0 <= label_idx < width:
                raise ValueError(f"{path}: label column index {label_idx} out of range")

    feature_cols = [j for j in range(width) if j != label_idx]
    offset = 2 if has_header else 1
    X = np.empty((len(body), len(feature_cols)), dtype=np.float64)
    for i, row in enumerate(body):
        for out_j, j in enumerate(feature_cols):
            cell = row[j].strip()
            if not _is_number(cell):
                raise ValueError(
                    f"{path}: non-numeric cell {cell!r} at line {i + offset}, column {j}"
                )
            X[i, out_j] = float(cell)

    labels = None
    if label_idx is not None:
        raw = [row[label_idx].strip() for row in body]
        if all(_is_number(cell) for cell in raw):
            values = np.asarray([float(cell) for cell in raw])
        else:
            values = np.asarray(raw)
        _, labels = np.unique(values, return_inverse=True)
        labels = labels.astype(np.int64)

    names = None
    if header is not None:
        names = [header[j] for j in feature_cols]
    return LabeledDataset(
        X=X,
        labels=labels,
        feature_names=names,
        provenance={"source": str(path), "label_column": label_column},
    )


def save_dataset(dataset: LabeledDataset, path) -> None:
    """Write a dataset as CSV (header row, optional trailing label column).

    Floats are written in shortest round-trip form and lines end with LF, so
    ``load_csv`` reproduces the matrix and labels exactly.
    """
    path = Path(path)
    d = dataset.X.shape[1]
    names = dataset.feature_names or [f"f{j}" for j in range(d)]
    header = list(names) + (["label"] if dataset.labels is not None else [])
    with path.open("w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(header)
        for i in range(dataset.X.shape[0]):
            row = [repr(float(v)) for v in dataset.X[i]]
            if dataset.labels is not None:
                row.append(str(int(dataset.labels[i])))
            writer.writerow(row)


@dataclass
class ColumnBinning:
    """How one input column was encoded: passed through or one-hot binned."""

    column: int
    kind: str  # "binary" or "binned"
    edges: np.ndarray | None
    n_output: int


def binarize(X, bins: int = 2):
    """One-hot encode continuous columns into equal-frequency bins.

    Columns that are already 0/1-valued pass through unchanged. Columns with
    fewer distinct values than requested bins fall back to one bin per
    distinct value (with a warning); constant columns collapse to a single
    all-ones indicator. Returns ``(binary_matrix, per-column metadata)``.
    """
    X = as_data_matrix(X)
    if bins < 2:
        raise ValueError("bins must be >= 2")
    blocks: list[np.ndarray] = []
    meta: list[ColumnBinning] = []
    for j in range(X.shape[1]):
        col = X[:, j]
        if np.all((col == 0.0) | (col == 1.0)):
            blocks.append(col[:, None])
            meta.append(ColumnBinning(column=j, kind="binary", edges=None, n_output=1))
            continue
        distinct = np.unique(col)
        if distinct.size < bins:
            warnings.warn(
                f"column {j}: only {distinct.size} distinct values for {bins} bins",
                stacklevel=2,
            )
            edges = (distinct[:-1] + distinct[1:]) / 2.0
        else:
            quantiles = np.arange(1, bins) / bins
            edges = np.unique(np.quantile(col, quantiles))
        idx = np.searchsorted(edges, col, side="left")
        n_out = edges.size + 1
        block = np.zeros((col.size, n_out))
        block[np.arange(col.size), idx] = 1.0
        blocks.append(block)
        meta.append(ColumnBinning(column=j, kind="binned", edges=edges, n_output=n_out))
    return np.hstack(blocks), meta


@dataclass(frozen=True)
class BiasSpec:
    """Parameters of the synthetic biased-cluster generator.

    Each cluster owns ``core_per_cluster`` indicator features; every bias
    feature is linked to one cluster (round-robin) and fires with probability
    ``bias_strength`` on that cluster's samples and ``1 - bias_strength``
    elsewhere, so strength 0.5 means no association. Independent bit flips
    with probability ``noise_flip`` are applied last.
    """

    n: int = 500
    d: int = 24
    n_clusters: int = 3
    core_per_cluster: int = 1
    bias_features: int = 5
    bias_strength: float = 0.9
    noise_flip: float = 0.005
    seed: int = 0

    def __post_init__(self):
        if self.n < 2 or self.n_clusters < 1 or self.core_per_cluster < 1:
            raise ValueError("n, n_clusters and core_per_cluster must be positive (n >= 2)")
        if self.bias_features < 0:
            raise ValueError("bias_features must be non-negative")
        if self.n_clusters * self.core_per_cluster + self.bias_features > self.d:
            raise ValueError("n_clusters*core_per_cluster + bias_features must be <= d")
        if not 0.5 <= self.bias_strength < 1.0:
            raise ValueError("bias_strength must lie in [0.5, 1)")
        if not 0.0 <= self.noise_flip < 0.5:
            raise ValueError("noise_flip must lie in [0, 0.5)")
        if self.seed < 0:
            raise ValueError("seed must be non-negative")


def generate_biased(spec: BiasSpec) -> LabeledDataset:
    """Draw a labeled binary dataset from the given bias specification.

    Deterministic for a fixed spec: the same seed yields identical bytes.
    """
    rng = np.random.default_rng(spec.seed)
    labels = rng.integers(0, spec.n_clusters, size=spec.n)
    X = np.zeros((spec.n, spec.d))
    names: list[str] = []

    for k in range(spec.n_clusters):
        start = k * spec.core_per_cluster
        cols = range(start, start + spec.core_per_cluster)
        X[np.ix_(labels == k, list(cols))] = 1.0
        names.extend(f"core{k}_{j - start}" for j in cols)

    base = spec.n_clusters * spec.core_per_cluster
    for f in range(spec.bias_features):
        linked = f % spec.n_clusters
        p = np.where(labels == linked, spec.bias_strength, 1.0 - spec.bias_strength)
        X[:, base + f] = (rng.random(spec.n) < p).astype(np.float64)
        names.append(f"bias{linked}_{f}")

    names.extend(f"pad{j}" for j in range(base + spec.bias_features, spec.d))

    if spec.noise_flip > 0.0:
        flips = rng.random((spec.n, spec.d)) < spec.noise_flip
        X = np.abs(X - flips.astype(np.float64))

    return LabeledDataset(
        X=X,
        labels=labels,
        feature_names=names,
        provenance={"generator": "biased-clusters-v1", **asdict(spec)},
    )
