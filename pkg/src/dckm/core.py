"""Shared data model: binary data-matrix validation, one-hot assignment
coding, square-root-parameterized sample weights, and solver hyperparameters.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

__all__ = [
    "HyperParams",
    "SampleWeights",
    "ValidationReport",
    "as_data_matrix",
    "one_hot_rows",
    "validate_data",
]

_MAX_REPORTED_ENTRIES = 5


def as_data_matrix(X) -> np.ndarray:
    """Coerce to a 2-D float64 array (no copy when already in that form)."""
    X = np.asarray(X, dtype=np.float64)
    if X.ndim != 2:
        raise ValueError(f"expected a 2-D data matrix, got ndim={X.ndim}")
    return X


@dataclass
class ValidationReport:
    """Outcome of :func:`validate_data`: fatal errors, warnings, column flags."""

    ok: bool
    errors: list[str] = field(default_factory=list)
    warnings: list[str] = field(default_factory=list)
    constant_columns: list[int] = field(default_factory=list)


def validate_data(X) -> ValidationReport:
    """Check that ``X`` is a usable binary data matrix.

    Non-finite or non-binary entries are fatal (the pipeline assumes inputs
    were binarized upstream, so anything else is a bug worth surfacing).
    Constant columns are only warned about: plain k-means tolerates them and
    the balancing terms skip them.
    """
    X = as_data_matrix(X)
    n, d = X.shape
    if n < 2 or d < 2:
        raise ValueError(f"need at least 2 samples and 2 features, got {n}x{d}")

    errors: list[str] = []
    bad = ~np.isfinite(X)
    for i, j in _first_positions(bad):
        errors.append(f"non-finite entry at ({i}, {j})")
    nonbinary = np.isfinite(X) & (X != 0.0) & (X != 1.0)
    for i, j in _first_positions(nonbinary):
        errors.append(f"entry ({i}, {j}) non-binary: {X[i, j]!r}")

    constant = [j for j in range(d) if np.all(X[:, j] == X[0, j])]
    warnings = [f"column {j} constant" for j in constant]
    return ValidationReport(
        ok=not errors, errors=errors, warnings=warnings, constant_columns=constant
    )


def _first_positions(mask: np.ndarray, limit: int = _MAX_REPORTED_ENTRIES):
    rows, cols = np.nonzero(mask)
    return [(int(i), int(j)) for i, j in zip(rows[:limit], cols[:limit])]


def one_hot_rows(labels, n_clusters: int) -> np.ndarray:
    """Encode integer cluster ids as a one-hot (n, n_clusters) float matrix."""
    labels = np.asarray(labels)
    if labels.ndim != 1:
        raise ValueError("labels must be a 1-D vector")
    if labels.size and not np.all(labels == labels.astype(np.int64)):
        raise ValueError("labels must be integers")
    labels = labels.astype(np.int64)
    if labels.size and (labels.min() < 0 or labels.max() >= n_clusters):
        bad = labels[(labels < 0) | (labels >= n_clusters)][0]
        raise ValueError(f"label {bad} out of range [0, {n_clusters})")
    G = np.zeros((labels.size, n_clusters), dtype=np.float64)
    G[np.arange(labels.size), labels] = 1.0
    return G


class SampleWeights:
    """Non-negative per-sample weights stored through their square roots.

    ``w = omega * omega`` elementwise, so any real ``omega`` yields valid
    weights and gradient steps on ``omega`` never need projection. ``w`` is
    computed once from ``omega`` and the two stay exactly in sync.
    """

    __slots__ = ("omega", "w")

    def __init__(self, omega):
        omega = np.asarray(omega, dtype=np.float64)
        if omega.ndim != 1:
            raise ValueError("omega must be a 1-D vector")
        if not np.all(np.isfinite(omega)):
            raise ValueError("omega must be finite")
        w = omega * omega
        if float(w.sum()) <= 0.0:
            raise ValueError("weights must not be all zero")
        self.omega = omega
        self.w = w

    @classmethod
    def uniform(cls, n: int) -> "SampleWeights":
        """Weights 1/n for every sample (omega_i = sqrt(1/n)), summing to 1."""
        if n < 1:
            raise ValueError("need at least one sample")
        return cls(np.full(n, math.sqrt(1.0 / n)))

    def __len__(self) -> int:
        return self.omega.size

    def __repr__(self) -> str:  # pragma: no cover
        return f"SampleWeights(n={len(self)}, sum={float(self.w.sum()):.6g})"


@dataclass(frozen=True)
class HyperParams:
    """Penalty weights and solver controls.

    lambda1 scales the moment-balancing loss, lambda2 the squared norm of the
    weights, lambda3 the (sum-to-one) penalty keeping weights from collapsing
    to zero.
    """

    n_clusters: int
    lambda1: float = 1.0
    lambda2: float = 1.0
    lambda3: float = 1.0
    max_outer_iters: int = 100
    max_w_iters: int = 5
    outer_tol: float = 1e-6
    grad_step: float = 0.1
    backtrack_shrink: float = 0.5
    seed: int = 0
    restarts: int = 1

    def __post_init__(self):
        if self.n_clusters < 1:
            raise ValueError("n_clusters must be >= 1")
        for name in ("lambda1", "lambda2", "lambda3"):
            if getattr(self, name) < 0:
                raise ValueError(f"{name} must be non-negative")
        if self.max_outer_iters < 1 or self.max_w_iters < 1:
            raise ValueError("iteration caps must be positive")
        if self.outer_tol <= 0:
            raise ValueError("outer_tol must be positive")
        if self.grad_step <= 0:
            raise ValueError("grad_step must be positive")
        if not 0.0 < self.backtrack_shrink < 1.0:
            raise ValueError("backtrack_shrink must lie in (0, 1)")
        if self.seed < 0:
            raise ValueError("seed must be non-negative")
        if self.restarts < 1:
            raise ValueError("restarts must be >= 1")
