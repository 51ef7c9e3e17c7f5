"""Mutual-information estimators.

Four families, all reporting in nats:

* :func:`mi_plugin_discrete` — exact plug-in MI of a finite count table;
* :func:`mi_knn_cd` — k-nearest-neighbor estimator for continuous features
  against discrete labels (within-class k-th-neighbor radii, max norm);
* :func:`mi_ksg_cc` — the classic k-nearest-neighbor estimator for two
  continuous vectors (joint-space radii, strict marginal counts);
* :func:`mi_dv` / :func:`mi_nwj` — variational lower bounds with the MLP
  critic from :mod:`interpeff.critic`, trained and evaluated on disjoint
  stratified halves.

The kNN estimates are clamped at zero from below (and flagged), since small
negative values are pure estimator noise; variational estimates are reported
unclamped because their negativity measures critic slack, which callers may
want to see.  :func:`mi_featurewise` aggregates a 1-D-capable base estimator
over feature columns, the default scoring rule for channel comparisons.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.spatial import cKDTree
from scipy.special import digamma

from .core import RngStream
from .critic import CriticConfig, evaluate_bound, train_critic
from .core import stratified_split_indices

__all__ = [
    "MIEstimate",
    "ScoreSpec",
    "FeaturewiseResult",
    "mi_plugin_discrete",
    "mi_plugin_from_samples",
    "mi_knn_cd",
    "mi_ksg_cc",
    "mi_dv",
    "mi_nwj",
    "mi_featurewise",
]

_PROB_FLOOR = 1e-300
_JITTER_SCALE = 1e-10


@dataclass(frozen=True)
class MIEstimate:
    """One mutual-information estimate in nats.

    ``clamped`` records that a negative raw value was floored at zero;
    ``stderr`` is populated only by callers that repeat or jackknife.
    """

    value: float
    estimator: str
    n_samples: int
    stderr: float | None = None
    clamped: bool = False

    def __post_init__(self) -> None:
        if not np.isfinite(self.value):
            raise ValueError(f"MI estimate must be finite, got {self.value}")


@dataclass(frozen=True)
class ScoreSpec:
    """Which estimator a scoring rule uses, with its parameters.

    ``kind`` is one of ``featurewise-mi-sum`` (default channel score:
    sum of per-column estimates), ``knn-cd-mi``, ``dv-mi``, ``nwj-mi``,
    ``plugin-mi`` (exact plug-in over discrete-valued rows) or ``vgib``
    (information-bottleneck-style objective I(Z;Y) - beta*I(Z;X)).
    ``base`` picks the column estimator for the featurewise kind.
    """

    kind: str = "featurewise-mi-sum"
    k: int = 5
    base: str = "knn-cd"
    critic: CriticConfig | None = None
    beta: float = 0.0

    def __post_init__(self) -> None:
        kinds = (
            "featurewise-mi-sum",
            "knn-cd-mi",
            "dv-mi",
            "nwj-mi",
            "plugin-mi",
            "vgib",
        )
        if self.kind not in kinds:
            raise ValueError(f"kind must be one of {kinds}, got {self.kind!r}")
        if self.k < 1:
            raise ValueError(f"k must be >= 1, got {self.k}")
        if self.base not in ("knn-cd", "dv", "nwj"):
            raise ValueError(f"base must be knn-cd, dv or nwj, got {self.base!r}")
        if self.beta < 0:
            raise ValueError(f"beta must be >= 0, got {self.beta}")


def mi_plugin_discrete(joint_counts: np.ndarray) -> MIEstimate:
    """Plug-in MI of a K1 x K2 contingency table of counts, in nats."""
    counts = np.asarray(joint_counts, dtype=np.float64)
    if counts.ndim != 2:
        raise ValueError(f"joint_counts must be 2-D, got shape {counts.shape}")
    if np.any(counts < 0):
        raise ValueError("counts must be nonnegative")
    total = counts.sum()
    if total < 1:
        raise ValueError("table must contain at least one observation")
    p = counts / total
    rows = p.sum(axis=1)
    cols = p.sum(axis=0)
    mask = p > 0
    outer = np.maximum(np.outer(rows, cols)[mask], _PROB_FLOOR)
    value = float(np.sum(p[mask] * (np.log(p[mask]) - np.log(outer))))
    return MIEstimate(max(value, 0.0), "plugin-discrete", int(round(total)))


def mi_plugin_from_samples(z: np.ndarray, y: np.ndarray) -> MIEstimate:
    """Plug-in MI between discrete-valued feature rows and labels.

    Each distinct row of ``z`` is one category; suitable for channels with
    small finite alphabets (the exact-DPI setting), not continuous data.
    """
    z = _as_points(z)
    y = np.asarray(y).ravel()
    if z.shape[0] != y.size:
        raise ValueError("z and y must have equal length")
    _, z_idx = np.unique(z, axis=0, return_inverse=True)
    _, y_idx = np.unique(y, return_inverse=True)
    counts = np.zeros((z_idx.max() + 1, y_idx.max() + 1))
    np.add.at(counts, (z_idx, y_idx), 1.0)
    est = mi_plugin_discrete(counts)
    return MIEstimate(est.value, "plugin-mi", int(y.size), clamped=est.clamped)


def _jitter(x: np.ndarray, gen: np.random.Generator) -> np.ndarray:
    """Tiny tie-breaking noise, relative to per-column magnitude."""
    amplitude = _JITTER_SCALE * np.maximum(1.0, np.mean(np.abs(x), axis=0))
    return x + amplitude * gen.standard_normal(x.shape)


def _as_points(x: np.ndarray) -> np.ndarray:
    x = np.asarray(x, dtype=np.float64)
    if x.ndim == 1:
        x = x[:, None]
    if x.ndim != 2:
        raise ValueError(f"expected 1-D or 2-D features, got shape {x.shape}")
    return x


def mi_knn_cd(
    z: np.ndarray, y: np.ndarray, k: int = 5, rng: RngStream | None = None
) -> MIEstimate:
    """kNN mutual information between continuous features and discrete labels.

    For each sample, the radius is the max-norm distance to its k-th
    neighbor within its own class; ``m_i`` counts all samples (self
    included) strictly inside that radius.  The estimate is
    ``psi(N) - <psi(N_class)> + psi(k) - <psi(m)>``, clamped at zero from
    below with the ``clamped`` flag set.
    """
    z = _as_points(z)
    y = np.asarray(y).ravel()
    n = z.shape[0]
    if y.size != n:
        raise ValueError("z and y must have equal length")
    if k < 1:
        raise ValueError(f"k must be >= 1, got {k}")
    classes, counts = np.unique(y, return_counts=True)
    if classes.size < 2:
        raise ValueError("labels are constant: mutual information is identically 0")
    small = counts < k + 1
    if np.any(small):
        raise ValueError(
            f"every class needs more than k={k} members; "
            f"class {classes[small][0]} has {counts[small][0]}"
        )
    rng = rng or RngStream(0)
    z = _jitter(z, rng.child("knn-cd-jitter").generator())

    radius = np.empty(n)
    class_size = np.empty(n)
    for cls, count in zip(classes, counts):
        idx = np.flatnonzero(y == cls)
        dist, _ = cKDTree(z[idx]).query(z[idx], k=k + 1, p=np.inf)
        radius[idx] = dist[:, -1]
        class_size[idx] = count
    tree = cKDTree(z)
    m = tree.query_ball_point(z, r=np.nextafter(radius, 0.0), p=np.inf, return_length=True)
    value = float(
        digamma(n) - np.mean(digamma(class_size)) + digamma(k) - np.mean(digamma(np.maximum(m, 1)))
    )
    return MIEstimate(max(value, 0.0), "knn-cd", n, clamped=value < 0.0)


def mi_ksg_cc(
    z: np.ndarray, w: np.ndarray, k: int = 5, rng: RngStream | None = None
) -> MIEstimate:
    """kNN mutual information between two continuous vectors (max norm).

    The radius is the k-th neighbor distance in the joint space; marginal
    counts are strict (< radius) and exclude the sample itself; the estimate
    is ``psi(k) + psi(N) - <psi(n_z + 1) + psi(n_w + 1)>``, clamped at zero.
    """
    z = _as_points(z)
    w = _as_points(w)
    n = z.shape[0]
    if w.shape[0] != n:
        raise ValueError("z and w must have equal row counts")
    if not 1 <= k < n:
        raise ValueError(f"k must satisfy 1 <= k < {n}, got {k}")
    rng = rng or RngStream(0)
    z = _jitter(z, rng.child("ksg-jitter-z").generator())
    w = _jitter(w, rng.child("ksg-jitter-w").generator())

    joint = np.hstack([z, w])
    eps, _ = cKDTree(joint).query(joint, k=k + 1, p=np.inf)
    strict = np.nextafter(eps[:, -1], 0.0)
    n_z = cKDTree(z).query_ball_point(z, r=strict, p=np.inf, return_length=True) - 1
    n_w = cKDTree(w).query_ball_point(w, r=strict, p=np.inf, return_length=True) - 1
    value = float(
        digamma(k) + digamma(n) - np.mean(digamma(n_z + 1) + digamma(n_w + 1))
    )
    return MIEstimate(max(value, 0.0), "ksg-cc", n, clamped=value < 0.0)


def _variational(
    z: np.ndarray,
    y: np.ndarray,
    objective: str,
    cfg: CriticConfig | None,
    rng: RngStream | None,
) -> MIEstimate:
    z = _as_points(z)
    y = np.asarray(y).ravel()
    rng = rng or RngStream(0)
    fit_idx, eval_idx = stratified_split_indices(y, 0.5, rng.child("estimator-split"))
    critic = train_critic(z[fit_idx], y[fit_idx], objective, cfg, rng.child("critic"))
    value = evaluate_bound(critic, z[eval_idx], y[eval_idx], objective)
    return MIEstimate(value, objective, int(eval_idx.size))


def mi_dv(
    z: np.ndarray,
    y: np.ndarray,
    cfg: CriticConfig | None = None,
    rng: RngStream | None = None,
) -> MIEstimate:
    """Donsker-Varadhan lower bound with a critic fit on a disjoint half.

    May be negative on finite samples; reported unclamped.
    """
    return _variational(z, y, "dv", cfg, rng)


def mi_nwj(
    z: np.ndarray,
    y: np.ndarray,
    cfg: CriticConfig | None = None,
    rng: RngStream | None = None,
) -> MIEstimate:
    """Nguyen-Wainwright-Jordan lower bound, same protocol as :func:`mi_dv`."""
    return _variational(z, y, "nwj", cfg, rng)


@dataclass(frozen=True)
class FeaturewiseResult:
    per_feature: tuple[MIEstimate, ...]
    sum: float
    per_dim: float


def mi_featurewise(
    z: np.ndarray,
    y: np.ndarray,
    spec: ScoreSpec | None = None,
    rng: RngStream | None = None,
) -> FeaturewiseResult:
    """Columnwise MI against the labels: per-column estimates, sum, sum/d.

    The base estimator is ``spec.base`` (within-class kNN by default); each
    column gets an independent derived RNG stream, so column order and any
    parallel evaluation cannot change values.
    """
    spec = spec or ScoreSpec()
    z = _as_points(z)
    y = np.asarray(y).ravel()
    rng = rng or RngStream(0)
    estimates = []
    for j in range(z.shape[1]):
        col_rng = rng.child(f"feature[{j}]")
        col = z[:, j]
        if spec.base == "knn-cd":
            estimates.append(mi_knn_cd(col, y, spec.k, col_rng))
        elif spec.base == "dv":
            estimates.append(mi_dv(col, y, spec.critic, col_rng))
        else:
            estimates.append(mi_nwj(col, y, spec.critic, col_rng))
    total = float(sum(e.value for e in estimates))
    return FeaturewiseResult(tuple(estimates), total, total / z.shape[1])
