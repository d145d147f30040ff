"""Per-feature moment balancing.

For a target feature j of a binary data matrix, the rows with the feature on
form the treated group and the rest the control group. The balance residual
for j is the gap between the weighted means of the *remaining* features
(column j zeroed) in the two groups. The balancing loss sums the squared
residual norms over every target feature, all sharing one global weight
vector; driving it down makes features look mutually uncorrelated under the
weighted distribution.

Weights enter every term as a ratio, so the loss is invariant to rescaling
the weight vector. Features whose treated or control group carries
(numerically) no weight are skipped: there is no group to balance.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from .core import SampleWeights, as_data_matrix

__all__ = [
    "GROUP_MASS_EPS",
    "BalanceLoss",
    "BalanceResidual",
    "DegenerateGroupError",
    "balance_gradient",
    "balance_loss",
    "balance_residual",
    "remaining_features",
    "weighted_control_moment",
    "weighted_treated_moment",
]

# Below this weighted group mass a feature's balance term is undefined and
# the feature is skipped (zero loss, zero gradient).
GROUP_MASS_EPS = 1e-12


class DegenerateGroupError(ValueError):
    """Raised when a target feature's treated or control group has no weight."""

    def __init__(self, feature: int, group: str):
        self.feature = feature
        self.group = group
        super().__init__(f"feature {feature}: {group} group has no weight mass")


def _weight_vector(w, n: int) -> np.ndarray:
    if isinstance(w, SampleWeights):
        w = w.w
    w = np.asarray(w, dtype=np.float64)
    if w.shape != (n,):
        raise ValueError(f"weights must have shape ({n},), got {w.shape}")
    return w


def remaining_features(X, j: int) -> np.ndarray:
    """Copy of X with target column j zeroed out."""
    X = as_data_matrix(X)
    if not 0 <= j < X.shape[1]:
        raise ValueError(f"feature index {j} out of range [0, {X.shape[1]})")
    out = X.copy()
    out[:, j] = 0.0
    return out


def weighted_treated_moment(X, j: int, w) -> np.ndarray:
    """Weighted mean of the remaining features over rows with feature j on."""
    X = as_data_matrix(X)
    w = _weight_vector(w, X.shape[0])
    M = remaining_features(X, j)
    s = X[:, j]
    mass = float(w @ s)
    if mass <= GROUP_MASS_EPS:
        raise DegenerateGroupError(j, "treated")
    return M.T @ (w * s) / mass


def weighted_control_moment(X, j: int, w) -> np.ndarray:
    """Weighted mean of the remaining features over rows with feature j off."""
    X = as_data_matrix(X)
    w = _weight_vector(w, X.shape[0])
    M = remaining_features(X, j)
    c = 1.0 - X[:, j]
    mass = float(w @ c)
    if mass <= GROUP_MASS_EPS:
        raise DegenerateGroupError(j, "control")
    return M.T @ (w * c) / mass


@dataclass
class BalanceResidual:
    """Treated-minus-control moment gap for one target feature.

    ``residual[feature]`` is 0 by construction (the target column is zeroed
    before the group means are taken).
    """

    feature: int
    residual: np.ndarray

    def squared_norm(self) -> float:
        return float(self.residual @ self.residual)


def balance_residual(X, j: int, w) -> BalanceResidual:
    """Difference of the weighted treated and control moments for feature j."""
    treated = weighted_treated_moment(X, j, w)
    control = weighted_control_moment(X, j, w)
    return BalanceResidual(feature=j, residual=treated - control)


class BalanceLoss(NamedTuple):
    value: float
    skipped_features: int


def _group_stats(X: np.ndarray, w: np.ndarray):
    """Per-feature group masses and unnormalized group sums, batched.

    Column j of ``treated_sums`` equals ``X.T @ (w * X[:, j])``; the control
    sums are the complements against ``X.T @ w``. The residual matrix built
    from these has one column per target feature with the diagonal forced to
    zero, matching the per-feature definition with the target column removed.
    """
    col_mass = X.T @ w                      # treated mass per feature
    total = float(w.sum())
    treated_sums = X.T @ (X * w[:, None])   # (d, d): column j = X^T (w ⊙ X_{.j})
    control_sums = col_mass[:, None] - treated_sums
    alpha = col_mass
    beta = total - col_mass
    valid = (alpha > GROUP_MASS_EPS) & (beta > GROUP_MASS_EPS)
    return treated_sums, control_sums, alpha, beta, valid


def _residual_matrix(X: np.ndarray, w: np.ndarray):
    treated_sums, control_sums, alpha, beta, valid = _group_stats(X, w)
    alpha_safe = np.where(valid, alpha, 1.0)
    beta_safe = np.where(valid, beta, 1.0)
    R = treated_sums / alpha_safe[None, :] - control_sums / beta_safe[None, :]
    np.fill_diagonal(R, 0.0)
    R[:, ~valid] = 0.0
    return R, treated_sums, control_sums, alpha_safe, beta_safe, valid


def balance_loss(X, w) -> BalanceLoss:
    """Sum of squared balance residuals over all target features.

    Features with a degenerate treated or control group contribute nothing;
    their count comes back as ``skipped_features``.
    """
    X = as_data_matrix(X)
    w = _weight_vector(w, X.shape[0])
    R, *_rest, valid = _residual_matrix(X, w)
    return BalanceLoss(float(np.sum(R * R)), int(np.sum(~valid)))


def balance_gradient(X, omega) -> np.ndarray:
    """Gradient of ``balance_loss(X, omega**2)`` with respect to ``omega``.

    Derived by the quotient rule per target feature: with u = X @ residual,
    the weight-space gradient of one feature's term is
    ``2 * (s*(u - ta)/alpha - c*(u - tb)/beta)`` where s/c are the treated and
    control indicators, alpha/beta the group masses, and ta/tb the residual's
    inner products with the two normalized group moments. Summed over
    features and chained through w = omega**2. Skipped features contribute
    zero, consistently with :func:`balance_loss`.
    """
    X = as_data_matrix(X)
    omega = np.asarray(omega, dtype=np.float64)
    if omega.shape != (X.shape[0],):
        raise ValueError(f"omega must have shape ({X.shape[0]},), got {omega.shape}")
    w = omega * omega
    R, treated_sums, control_sums, alpha_safe, beta_safe, valid = _residual_matrix(X, w)
    U = X @ R                               # (n, d): column j = X @ residual_j
    ta = np.einsum("fj,fj->j", R, treated_sums) / alpha_safe
    tb = np.einsum("fj,fj->j", R, control_sums) / beta_safe
    P = (U - ta[None, :]) / alpha_safe[None, :]
    Q = (U - tb[None, :]) / beta_safe[None, :]
    P[:, ~valid] = 0.0
    Q[:, ~valid] = 0.0
    grad_w = 2.0 * np.sum(X * P - (1.0 - X) * Q, axis=1)
    return 2.0 * omega * grad_w
