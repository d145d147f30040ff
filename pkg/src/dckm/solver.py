"""Joint solver: weighted k-means coupled with the moment-balancing loss.

The objective is

    sum_i w_i * ||X_i - assigned centroid||^2
      + lambda1 * balance_loss(X, w)
      + lambda2 * ||w||^2
      + lambda3 * (sum_i w_i - 1)^2

minimized by block descent: a closed-form centroid update (per-cluster
weighted means), an exhaustive per-row assignment search, and backtracking
gradient descent on the square-root weight parameterization. Every block is
non-increasing in the objective, so the recorded per-sweep objective values
form a monotone sequence.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from .core import HyperParams, SampleWeights, as_data_matrix, one_hot_rows, validate_data
from .decorrelation import GROUP_MASS_EPS, balance_gradient, balance_loss

__all__ = [
    "EmptyClusterError",
    "FitResult",
    "RestartSummary",
    "fit",
    "fit_restarts",
    "objective",
    "omega_gradient",
    "omega_objective",
    "update_assignments",
    "update_centroids",
    "update_weights",
]

LINE_SEARCH_MIN_STEP = 1e-16
_RESEED_MAX_FAILURES = 3


class EmptyClusterError(RuntimeError):
    """A cluster lost all members and re-seeding could not repopulate it."""

    def __init__(self, clusters):
        self.clusters = list(clusters)
        super().__init__(f"empty cluster(s) {self.clusters} could not be re-seeded")


def _check_shapes(X, w, F, G):
    n, d = X.shape
    if F.ndim != 2 or F.shape[0] != d:
        raise ValueError(f"centroids must be (d, k) with d={d}, got {F.shape}")
    k = F.shape[1]
    if G.shape != (n, k):
        raise ValueError(f"assignments must be ({n}, {k}), got {G.shape}")
    if w.shape != (n,):
        raise ValueError(f"weights must have shape ({n},), got {w.shape}")


def _row_sq_norms(A: np.ndarray) -> np.ndarray:
    return np.sum(A * A, axis=1)


def _objective_terms(X, w, F, G, params: HyperParams):
    resid = X - G @ F.T
    value = float(w @ _row_sq_norms(resid))
    value += params.lambda2 * float(w @ w)
    value += params.lambda3 * (float(w.sum()) - 1.0) ** 2
    skipped = 0
    if params.lambda1 != 0.0:
        bal = balance_loss(X, w)
        value += params.lambda1 * bal.value
        skipped = bal.skipped_features
    return value, skipped


def objective(X, w, F, G, params: HyperParams) -> float:
    """Full joint objective at the given blocks."""
    X = as_data_matrix(X)
    if isinstance(w, SampleWeights):
        w = w.w
    w = np.asarray(w, dtype=np.float64)
    F = np.asarray(F, dtype=np.float64)
    G = np.asarray(G, dtype=np.float64)
    _check_shapes(X, w, F, G)
    return _objective_terms(X, w, F, G, params)[0]


def _weighted_means(X, w, G):
    """Per-cluster weighted means and the list of memberless clusters.

    A cluster whose members carry (numerically) zero total weight keeps the
    plain mean of its members: the weighted loss is indifferent to its
    centroid, and a finite deterministic value keeps the iteration stable.
    """
    k = G.shape[1]
    counts = G.sum(axis=0)
    mass = G.T @ w
    weighted_sums = X.T @ (G * w[:, None])
    F = np.zeros((X.shape[1], k))
    empty = []
    for c in range(k):
        if counts[c] == 0:
            empty.append(c)
        elif mass[c] > GROUP_MASS_EPS:
            F[:, c] = weighted_sums[:, c] / mass[c]
        else:
            F[:, c] = (X.T @ G[:, c]) / counts[c]
    return F, empty


def update_centroids(X, w, G) -> np.ndarray:
    """Closed-form centroid update: each column is its cluster's weighted mean.

    Raises :class:`EmptyClusterError` when a cluster has no members; the fit
    loop owns the re-seeding policy.
    """
    X = as_data_matrix(X)
    if isinstance(w, SampleWeights):
        w = w.w
    w = np.asarray(w, dtype=np.float64)
    G = np.asarray(G, dtype=np.float64)
    F, empty = _weighted_means(X, w, G)
    if empty:
        raise EmptyClusterError(empty)
    return F


def update_assignments(X, F) -> np.ndarray:
    """Assign every row to its nearest centroid (ties go to the lowest index).

    Independent of the sample weights: a row's best cluster does not change
    under positive rescaling of its own loss term.
    """
    X = as_data_matrix(X)
    F = np.asarray(F, dtype=np.float64)
    n = X.shape[0]
    k = F.shape[1]
    dists = np.empty((n, k))
    for c in range(k):
        diff = X - F[:, c][None, :]
        dists[:, c] = _row_sq_norms(diff)
    labels = np.argmin(dists, axis=1)
    return one_hot_rows(labels, k)


def _centroids_with_recovery(X, w, G):
    """Centroid update with empty-cluster re-seeding.

    Each empty cluster is re-seeded at the not-yet-taken sample with the
    largest weighted residual, then assignments are redone. A round that does
    not reduce the number of empty clusters counts as a failure; after
    _RESEED_MAX_FAILURES failures the fit gives up.
    """
    failures = 0
    prev_empty = None
    while True:
        F, empty = _weighted_means(X, w, G)
        if not empty:
            return F, G
        if prev_empty is not None and len(empty) >= prev_empty:
            failures += 1
            if failures >= _RESEED_MAX_FAILURES:
                raise EmptyClusterError(empty)
        prev_empty = len(empty)
        labels = G.argmax(axis=1)
        residuals = w * _row_sq_norms(X - F[:, labels].T)
        order = np.argsort(-residuals, kind="stable")
        for cluster, i in zip(empty, order):
            F[:, cluster] = X[i]
        G = update_assignments(X, F)


def omega_objective(X, F, G, omega, params: HyperParams) -> float:
    """Joint objective as a function of the square-root weights alone."""
    omega = np.asarray(omega, dtype=np.float64)
    return objective(X, omega * omega, F, G, params)


def omega_gradient(X, F, G, omega, params: HyperParams) -> np.ndarray:
    """Analytic gradient of :func:`omega_objective` with respect to omega.

    Per coordinate: 2*omega_i times the sample's squared reconstruction
    residual, plus the balancing gradient scaled by lambda1, plus
    4*lambda2*omega_i^3 and 4*lambda3*(sum(omega^2)-1)*omega_i from the two
    penalty terms.
    """
    X = as_data_matrix(X)
    F = np.asarray(F, dtype=np.float64)
    G = np.asarray(G, dtype=np.float64)
    omega = np.asarray(omega, dtype=np.float64)
    resid_sq = _row_sq_norms(X - G @ F.T)
    grad = 2.0 * omega * resid_sq
    grad += 4.0 * params.lambda2 * omega**3
    grad += 4.0 * params.lambda3 * (float(omega @ omega) - 1.0) * omega
    if params.lambda1 != 0.0:
        grad += params.lambda1 * balance_gradient(X, omega)
    return grad


def _backtrack(fun, x, grad, f0, step, shrink):
    """Shrink the step until the objective stops increasing.

    Returns (new_x, new_f, accepted); accepted is False when no step down to
    LINE_SEARCH_MIN_STEP achieves f(new_x) <= f0.
    """
    while step >= LINE_SEARCH_MIN_STEP:
        candidate = x - step * grad
        f_candidate = fun(candidate)
        if f_candidate <= f0:
            return candidate, f_candidate, True
        step *= shrink
    return x, f0, False


def update_weights(X, F, G, omega, params: HyperParams):
    """Run up to ``max_w_iters`` backtracking gradient steps on omega.

    Returns ``(weights, stalled)``; ``stalled`` is True when the line search
    found no non-increasing step, in which case the incoming omega is kept.
    """
    X = as_data_matrix(X)
    F = np.asarray(F, dtype=np.float64)
    G = np.asarray(G, dtype=np.float64)
    omega = np.asarray(omega, dtype=np.float64).copy()
    resid_sq = _row_sq_norms(X - G @ F.T)

    def fun(om):
        w = om * om
        value = float(w @ resid_sq)
        value += params.lambda2 * float(w @ w)
        value += params.lambda3 * (float(w.sum()) - 1.0) ** 2
        if params.lambda1 != 0.0:
            value += params.lambda1 * balance_loss(X, w).value
        return value

    def grad_fun(om):
        g = 2.0 * om * resid_sq
        g += 4.0 * params.lambda2 * om**3
        g += 4.0 * params.lambda3 * (float(om @ om) - 1.0) * om
        if params.lambda1 != 0.0:
            g += params.lambda1 * balance_gradient(X, om)
        return g

    f0 = fun(omega)
    stalled = False
    for _ in range(params.max_w_iters):
        g = grad_fun(omega)
        if not np.any(g):
            break
        omega, f0, accepted = _backtrack(
            fun, omega, g, f0, params.grad_step, params.backtrack_shrink
        )
        if not accepted:
            stalled = True
            break
    return SampleWeights(omega), stalled


@dataclass
class FitResult:
    """State at exit plus the per-sweep objective trace."""

    centroids: np.ndarray
    assignments: np.ndarray
    weights: SampleWeights
    objective_history: list[float]
    converged: bool
    iterations: int
    skipped_features_last: int
    assignment_history: list[np.ndarray] | None = None

    @property
    def labels(self) -> np.ndarray:
        return self.assignments.argmax(axis=1)

    @property
    def final_objective(self) -> float:
        return self.objective_history[-1]


def _random_labels(n: int, n_clusters: int, seed: int) -> np.ndarray:
    return np.random.default_rng(seed).integers(0, n_clusters, size=n)


def fit(
    X,
    params: HyperParams,
    init_labels=None,
    *,
    optimize_weights: bool = True,
    track_assignments: bool = False,
) -> FitResult:
    """Alternate centroid, assignment and weight updates until the objective
    settles.

    Starts from ``init_labels`` (or a seeded uniform-random labeling) and
    uniform weights summing to one. Stops when the relative objective change
    drops below ``outer_tol`` or after ``max_outer_iters`` sweeps. With
    ``optimize_weights=False`` the weights stay uniform and the iteration is
    plain Lloyd's algorithm on the (scaled) k-means loss.
    """
    X = as_data_matrix(X)
    report = validate_data(X)
    if not report.ok:
        raise ValueError("invalid data matrix: " + "; ".join(report.errors))
    n = X.shape[0]
    k = params.n_clusters
    if k > n:
        raise ValueError(f"n_clusters={k} exceeds sample count {n}")
    if init_labels is None:
        init_labels = _random_labels(n, k, params.seed)
    else:
        init_labels = np.asarray(init_labels)
        if init_labels.shape != (n,):
            raise ValueError(f"init_labels must have shape ({n},)")
    G = one_hot_rows(init_labels, k)
    weights = SampleWeights.uniform(n)

    history: list[float] = []
    assignment_history: list[np.ndarray] | None = [] if track_assignments else None
    previous = None
    converged = False
    skipped = 0
    F = np.zeros((X.shape[1], k))
    for _ in range(params.max_outer_iters):
        F, G = _centroids_with_recovery(X, weights.w, G)
        G = update_assignments(X, F)
        if optimize_weights:
            weights, _ = update_weights(X, F, G, weights.omega, params)
        value, skipped = _objective_terms(X, weights.w, F, G, params)
        history.append(value)
        if assignment_history is not None:
            assignment_history.append(G.argmax(axis=1))
        if previous is not None and abs(value - previous) <= params.outer_tol * max(
            1.0, abs(previous)
        ):
            converged = True
            break
        previous = value
    return FitResult(
        centroids=F,
        assignments=G,
        weights=weights,
        objective_history=history,
        converged=converged,
        iterations=len(history),
        skipped_features_last=skipped,
        assignment_history=assignment_history,
    )


@dataclass
class RestartSummary:
    seed: int
    objective: float
    iterations: int
    converged: bool
    labels: np.ndarray


def fit_restarts(X, params: HyperParams, **fit_kwargs):
    """Run ``params.restarts`` fits with seeds seed, seed+1, ... and keep the
    one with the lowest final objective (first wins ties).

    Returns ``(best_result, summaries)`` with one summary per restart, in
    restart order; deterministic for a fixed base seed.
    """
    best = None
    summaries: list[RestartSummary] = []
    for i in range(params.restarts):
        run_params = replace(params, seed=params.seed + i)
        result = fit(X, run_params, **fit_kwargs)
        summaries.append(
            RestartSummary(
                seed=run_params.seed,
                objective=result.final_objective,
                iterations=result.iterations,
                converged=result.converged,
                labels=result.labels,
            )
        )
        if best is None or result.final_objective < best.final_objective:
            best = result
    return best, summaries
