"""Reference clusterers: plain and weighted Lloyd iterations, plus the
two-step pipelines (balance-then-cluster, PCA-then-cluster, and
drop-correlated-features-then-cluster).
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass
from typing import Literal

import numpy as np

from .core import HyperParams, SampleWeights, as_data_matrix, one_hot_rows
from .decorrelation import balance_gradient, balance_loss
from .solver import (
    _backtrack,
    _centroids_with_recovery,
    _random_labels,
    _row_sq_norms,
    update_assignments,
)

__all__ = [
    "BaselineSpec",
    "DecKMResult",
    "DropKMResult",
    "KMeansResult",
    "PcaKMResult",
    "balance_only_weights",
    "dec_km",
    "drop_km",
    "kmeans",
    "pca_km",
    "pca_project",
    "select_uncorrelated_features",
    "weighted_kmeans",
]


@dataclass(frozen=True)
class BaselineSpec:
    """Configuration record for a baseline run."""

    kind: Literal["kmeans", "deckm", "pcakm", "dropkm"]
    drop_threshold: float = 0.7
    pca_dims: int | None = None  # defaults to n_clusters - 1 at run time

    def __post_init__(self):
        if self.kind not in ("kmeans", "deckm", "pcakm", "dropkm"):
            raise ValueError(f"unknown baseline kind {self.kind!r}")
        if not 0.0 < self.drop_threshold <= 1.0:
            raise ValueError("drop_threshold must lie in (0, 1]")
        if self.pca_dims is not None and self.pca_dims < 1:
            raise ValueError("pca_dims must be >= 1")


@dataclass
class KMeansResult:
    centroids: np.ndarray
    assignments: np.ndarray
    labels: np.ndarray
    loss: float
    iterations: int
    converged: bool
    assignment_history: list[np.ndarray] | None = None


def _lloyd(X, w, n_clusters, seed, init_labels, max_iter, track_assignments, weighted_loss):
    X = as_data_matrix(X)
    n = X.shape[0]
    if n_clusters > n:
        raise ValueError(f"n_clusters={n_clusters} exceeds sample count {n}")
    if init_labels is None:
        init_labels = _random_labels(n, n_clusters, seed)
    G = one_hot_rows(np.asarray(init_labels), n_clusters)
    history = [] if track_assignments else None
    previous = None
    converged = False
    F = np.zeros((X.shape[1], n_clusters))
    labels = G.argmax(axis=1)
    iterations = 0
    for _ in range(max_iter):
        F, G = _centroids_with_recovery(X, w, G)
        G = update_assignments(X, F)
        labels = G.argmax(axis=1)
        iterations += 1
        if history is not None:
            history.append(labels.copy())
        if previous is not None and np.array_equal(labels, previous):
            converged = True
            break
        previous = labels
    resid_sq = _row_sq_norms(X - G @ F.T)
    loss = float(w @ resid_sq) if weighted_loss else float(resid_sq.sum())
    return KMeansResult(
        centroids=F,
        assignments=G,
        labels=labels,
        loss=loss,
        iterations=iterations,
        converged=converged,
        assignment_history=history,
    )


def kmeans(X, n_clusters, seed=0, init_labels=None, max_iter=100, track_assignments=False):
    """Lloyd's algorithm in factorized form, to a fixed point of assignments.

    Internally runs with a uniform weight vector (weights cancel in the
    means), sharing the exact update and recovery code of the joint solver;
    the reported loss is the plain within-cluster sum of squares.
    """
    X = as_data_matrix(X)
    w = SampleWeights.uniform(X.shape[0]).w
    return _lloyd(
        X, w, n_clusters, seed, init_labels, max_iter, track_assignments, weighted_loss=False
    )


def weighted_kmeans(
    X, w, n_clusters, seed=0, init_labels=None, max_iter=100, track_assignments=False
):
    """Lloyd iterations on the weighted loss with a fixed weight vector."""
    X = as_data_matrix(X)
    if isinstance(w, SampleWeights):
        w = w.w
    w = np.asarray(w, dtype=np.float64)
    if w.shape != (X.shape[0],) or np.any(w < 0):
        raise ValueError("w must be a non-negative vector with one entry per sample")
    return _lloyd(
        X, w, n_clusters, seed, init_labels, max_iter, track_assignments, weighted_loss=True
    )


def balance_only_weights(X, params: HyperParams):
    """Learn weights from the balancing loss and penalties alone.

    Minimizes lambda1*balance_loss + lambda2*||w||^2 + lambda3*(sum w - 1)^2
    over the square-root parameterization by backtracking gradient descent
    from uniform weights (deterministic: the start point is fixed). Returns
    ``(weights, objective_history)``.
    """
    X = as_data_matrix(X)
    n = X.shape[0]
    omega = SampleWeights.uniform(n).omega.copy()

    def fun(om):
        w = om * om
        value = params.lambda2 * float(w @ w)
        value += params.lambda3 * (float(w.sum()) - 1.0) ** 2
        if params.lambda1 != 0.0:
            value += params.lambda1 * balance_loss(X, w).value
        return value

    def grad_fun(om):
        g = 4.0 * params.lambda2 * om**3
        g += 4.0 * params.lambda3 * (float(om @ om) - 1.0) * om
        if params.lambda1 != 0.0:
            g += params.lambda1 * balance_gradient(X, om)
        return g

    max_steps = params.max_outer_iters * params.max_w_iters
    value = fun(omega)
    history = [value]
    for _ in range(max_steps):
        g = grad_fun(omega)
        if not np.any(g):
            break
        omega, new_value, accepted = _backtrack(
            fun, omega, g, value, params.grad_step, params.backtrack_shrink
        )
        if not accepted:
            break
        history.append(new_value)
        if abs(new_value - value) <= params.outer_tol * max(1.0, abs(value)):
            value = new_value
            break
        value = new_value
    return SampleWeights(omega), history


@dataclass
class DecKMResult:
    clustering: KMeansResult
    weights: SampleWeights
    stage1_history: list[float]


def dec_km(X, params: HyperParams, max_iter=100, track_assignments=False) -> DecKMResult:
    """Two-step pipeline: learn balancing weights first, then run weighted
    k-means with them frozen."""
    weights, history = balance_only_weights(X, params)
    clustering = weighted_kmeans(
        X,
        weights.w,
        params.n_clusters,
        seed=params.seed,
        max_iter=max_iter,
        track_assignments=track_assignments,
    )
    return DecKMResult(clustering=clustering, weights=weights, stage1_history=history)


def pca_project(X, n_components):
    """Center columns and project onto the top principal directions.

    Returns ``(projected, basis)`` with orthonormal basis columns. When the
    centered matrix has lower rank than requested, only the available
    components are used (with a warning).
    """
    X = as_data_matrix(X)
    if n_components < 1:
        raise ValueError("n_components must be >= 1")
    centered = X - X.mean(axis=0)
    _, sing, vt = np.linalg.svd(centered, full_matrices=False)
    if sing.size == 0 or sing[0] == 0.0:
        rank = 0
    else:
        rank = int(np.sum(sing > sing[0] * max(X.shape) * np.finfo(np.float64).eps))
    use = min(n_components, rank)
    if use < n_components:
        warnings.warn(
            f"rank-deficient data: using {max(use, 1)} of {n_components} requested components",
            stacklevel=2,
        )
    use = max(use, 1)
    basis = vt[:use].T
    return centered @ basis, basis


@dataclass
class PcaKMResult:
    clustering: KMeansResult
    basis: np.ndarray


def pca_km(X, n_clusters, seed=0, n_components=None, max_iter=100) -> PcaKMResult:
    """Project onto the top (n_clusters - 1) principal directions, then cluster."""
    if n_components is None:
        n_components = n_clusters - 1
    if n_components < 1:
        raise ValueError("pca_km needs n_clusters >= 2 or an explicit n_components")
    projected, basis = pca_project(X, n_components)
    clustering = kmeans(projected, n_clusters, seed=seed, max_iter=max_iter)
    return PcaKMResult(clustering=clustering, basis=basis)


def _column_correlations(X: np.ndarray) -> np.ndarray:
    # Pearson correlation between columns; constant columns get 0 by convention.
    n = X.shape[0]
    centered = X - X.mean(axis=0)
    cov = centered.T @ centered / n
    std = np.sqrt(np.diag(cov))
    denom = np.outer(std, std)
    with np.errstate(invalid="ignore", divide="ignore"):
        corr = np.where(denom > 0, cov / np.where(denom > 0, denom, 1.0), 0.0)
    return np.clip(corr, -1.0, 1.0)


def select_uncorrelated_features(X, threshold=0.7) -> list[int]:
    """Greedy scan in column order, dropping any feature whose absolute
    correlation with an already-kept feature exceeds the threshold."""
    X = as_data_matrix(X)
    if not 0.0 < threshold <= 1.0:
        raise ValueError("threshold must lie in (0, 1]")
    corr = _column_correlations(X)
    kept: list[int] = []
    for j in range(X.shape[1]):
        if all(abs(corr[j, k]) <= threshold for k in kept):
            kept.append(j)
    if not kept:
        raise ValueError("all features dropped")
    return kept


@dataclass
class DropKMResult:
    clustering: KMeansResult
    kept_features: list[int]


def drop_km(X, n_clusters, threshold=0.7, seed=0, max_iter=100) -> DropKMResult:
    """Drop highly correlated features, then cluster the remaining columns."""
    X = as_data_matrix(X)
    kept = select_uncorrelated_features(X, threshold)
    clustering = kmeans(X[:, kept], n_clusters, seed=seed, max_iter=max_iter)
    return DropKMResult(clustering=clustering, kept_features=kept)
