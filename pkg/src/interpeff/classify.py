"""Multinomial logistic regression, written against numpy only.

The solver is deterministic full-batch gradient descent with Armijo
backtracking line search, so repeated fits on the same data are
bit-identical.  Regularization strength is chosen by stratified
cross-validation.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .core import InterpEffError, RngStream, stratified_folds
from .channels import Channel

__all__ = [
    "LogregModel",
    "fit_logreg",
    "cv_pick_l2",
    "logreg_cv_accuracy",
    "robustness_probe",
    "DEFAULT_L2_GRID",
]

DEFAULT_L2_GRID: tuple[float, ...] = (1e-4, 1e-3, 1e-2, 1e-1, 1.0)

_ARMIJO_C = 1e-4
_MAX_HALVINGS = 50


@dataclass(frozen=True)
class LogregModel:
    """Fitted multinomial logistic regression.

    ``weights`` has shape (n_classes, n_features + 1); the last column is
    the intercept.  ``classes`` maps row index to original label.
    """

    weights: np.ndarray
    classes: np.ndarray
    converged: bool
    n_iter: int

    def predict_proba(self, z: np.ndarray) -> np.ndarray:
        z = np.asarray(z, dtype=np.float64)
        logits = z @ self.weights[:, :-1].T + self.weights[:, -1]
        logits -= logits.max(axis=1, keepdims=True)
        p = np.exp(logits)
        p /= p.sum(axis=1, keepdims=True)
        return p

    def predict(self, z: np.ndarray) -> np.ndarray:
        return self.classes[np.argmax(self.predict_proba(z), axis=1)]

    def accuracy(self, z: np.ndarray, y: np.ndarray) -> float:
        return float(np.mean(self.predict(z) == np.asarray(y)))


def _loss_grad(
    w: np.ndarray, z1: np.ndarray, onehot: np.ndarray, l2: float
) -> tuple[float, np.ndarray]:
    """Mean cross-entropy + 0.5*l2*||W||^2 (intercept excluded), and its
    gradient.  ``z1`` carries a trailing all-ones column for the intercept."""
    n = z1.shape[0]
    logits = z1 @ w.T
    logits -= logits.max(axis=1, keepdims=True)
    exp = np.exp(logits)
    norm = exp.sum(axis=1, keepdims=True)
    log_p = logits - np.log(norm)
    loss = -float(np.sum(onehot * log_p)) / n
    penalty = w.copy()
    penalty[:, -1] = 0.0
    loss += 0.5 * l2 * float(np.sum(penalty**2))
    grad = (exp / norm - onehot).T @ z1 / n + l2 * penalty
    return loss, grad


def fit_logreg(
    z: np.ndarray,
    y: np.ndarray,
    l2: float = 1e-3,
    max_iter: int = 2000,
    tol: float = 1e-5,
) -> LogregModel:
    """Fit by full-batch gradient descent with Armijo backtracking.

    Starts from zero weights and stops when the gradient sup-norm falls
    below ``tol`` or after ``max_iter`` iterations.
    """
    z = np.asarray(z, dtype=np.float64)
    y = np.asarray(y)
    if z.ndim != 2 or z.shape[0] != y.shape[0]:
        raise ValueError("features must be 2-D with one row per label")
    if l2 < 0:
        raise ValueError(f"l2 must be >= 0, got {l2}")
    classes, y_idx = np.unique(y, return_inverse=True)
    if classes.size < 2:
        raise ValueError("need at least two classes")
    n, d = z.shape
    z1 = np.hstack([z, np.ones((n, 1))])
    onehot = np.zeros((n, classes.size))
    onehot[np.arange(n), y_idx] = 1.0

    w = np.zeros((classes.size, d + 1))
    loss, grad = _loss_grad(w, z1, onehot, l2)
    step = 1.0
    converged = False
    it = 0
    for it in range(1, max_iter + 1):
        grad_norm = float(np.max(np.abs(grad)))
        if grad_norm < tol:
            converged = True
            break
        sq = float(np.sum(grad**2))
        step = min(step * 2.0, 1e4)
        for _ in range(_MAX_HALVINGS):
            w_new = w - step * grad
            loss_new, grad_new = _loss_grad(w_new, z1, onehot, l2)
            if loss_new <= loss - _ARMIJO_C * step * sq:
                break
            step *= 0.5
        else:
            # No acceptable step at double precision: we are at a minimizer.
            converged = True
            break
        w, loss, grad = w_new, loss_new, grad_new
    if not np.all(np.isfinite(w)):
        raise InterpEffError("logistic regression diverged to non-finite weights")
    return LogregModel(weights=w, classes=classes, converged=converged, n_iter=it)


def cv_pick_l2(
    z: np.ndarray,
    y: np.ndarray,
    l2_grid: tuple[float, ...],
    n_folds: int,
    rng: RngStream,
) -> float:
    """Pick the l2 with the best mean fold accuracy (ties -> smaller l2)."""
    folds = stratified_folds(y, n_folds, rng)
    mean_acc = np.zeros(len(l2_grid))
    for val_idx in folds:
        train_idx = np.setdiff1d(np.arange(y.shape[0]), val_idx)
        for li, l2 in enumerate(l2_grid):
            model = fit_logreg(z[train_idx], y[train_idx], l2=l2)
            mean_acc[li] += model.accuracy(z[val_idx], y[val_idx])
    order = np.lexsort((np.asarray(l2_grid), -mean_acc))
    return float(l2_grid[order[0]])


def logreg_cv_accuracy(
    z: np.ndarray,
    y: np.ndarray,
    rng: RngStream,
    n_folds: int = 3,
    l2_grid: tuple[float, ...] = DEFAULT_L2_GRID,
    inner_folds: int = 3,
) -> tuple[float, float]:
    """Stratified K-fold accuracy with per-fold l2 chosen by inner CV.

    Returns (mean, std) of the fold accuracies.
    """
    z = np.asarray(z, dtype=np.float64)
    y = np.asarray(y)
    folds = stratified_folds(y, n_folds, rng)
    accs = []
    for fi, val_idx in enumerate(folds):
        train_idx = np.setdiff1d(np.arange(y.shape[0]), val_idx)
        l2 = cv_pick_l2(
            z[train_idx], y[train_idx], l2_grid, inner_folds, rng.child(f"inner[{fi}]")
        )
        model = fit_logreg(z[train_idx], y[train_idx], l2=l2)
        accs.append(model.accuracy(z[val_idx], y[val_idx]))
    accs = np.asarray(accs)
    return float(accs.mean()), float(accs.std())


def robustness_probe(
    channel: Channel,
    model: LogregModel,
    features: np.ndarray,
    labels: np.ndarray,
    sigma: float,
    rng: RngStream,
) -> tuple[float, float, float]:
    """Accuracy under test-time input noise, before the channel is applied.

    Returns (acc_clean, acc_robust, gap).  The noise perturbs the raw
    inputs — not the channel outputs — so channels that discard fragile
    coordinates can shrink the gap.
    """
    if sigma < 0:
        raise ValueError(f"sigma must be >= 0, got {sigma}")
    features = np.asarray(features, dtype=np.float64)
    gen = rng.generator()
    acc_clean = model.accuracy(channel.apply(features), labels)
    noisy = features + sigma * gen.standard_normal(features.shape)
    acc_robust = model.accuracy(channel.apply(noisy), labels)
    return acc_clean, acc_robust, acc_clean - acc_robust
