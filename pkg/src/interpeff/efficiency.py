"""The interpretive-efficiency functional and its supporting calculators.

The pipeline: score a channel (``score_channel``), score the identity
reference (``score_reference``), normalize their ratio — or, when the
reference is only bracketed, the calibrated difference against a floor —
optionally cross-fit over stratified folds and debias, and attach a
confidence radius.  :func:`compute_efficiency` runs the whole pipeline and
returns an :class:`EfficiencyReport` that serializes to one CSV row.

The ratio form is *not* clamped above 1: an estimated efficiency above 1 is
an estimator-calibration artifact worth surfacing, so it raises the
``ratio_exceeds_one`` flag instead.  The calibrated-difference form clamps
into [0, 1] and flags the clamp.

Also here: the two-sided mutual-information bounds on the efficiency, the
supermartingale-style tail bound for training dynamics, the Lipschitz
perturbation bound, and the bottleneck-objective score I(Z;Y) - beta*I(Z;X).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np
from scipy.special import digamma

from .channels import Channel, identity
from .core import (
    Dataset,
    DegenerateReferenceError,
    InterpEffError,
    RngStream,
    stratified_folds,
)
from .estimators import (
    ScoreSpec,
    mi_dv,
    mi_featurewise,
    mi_knn_cd,
    mi_ksg_cc,
    mi_nwj,
    mi_plugin_from_samples,
)

__all__ = [
    "DEGENERATE_REFERENCE_THRESHOLD",
    "REPORT_HEADER",
    "EfficiencyReport",
    "CalibConstants",
    "VgibScore",
    "score_channel",
    "score_reference",
    "normalize_ratio",
    "normalize_diff",
    "cross_fit_score",
    "jackknife",
    "median_of_means",
    "confidence_radius",
    "mi_ratio_bounds",
    "azuma_tail",
    "stability_bound",
    "vgib_score",
    "compute_efficiency",
]

DEGENERATE_REFERENCE_THRESHOLD = 1e-6

REPORT_HEADER = (
    "dataset",
    "map",
    "n_feat",
    "S",
    "S_ref",
    "E_ratio",
    "E_diff",
    "radius",
    "flags",
)


@dataclass(frozen=True)
class EfficiencyReport:
    """Everything one efficiency evaluation produced."""

    dataset: str
    map_label: str
    n_features: int
    s_hat: float
    s_ref_hat: float
    e_ratio: float
    s_min: float | None = None
    e_diff: float | None = None
    per_fold_s: tuple[float, ...] = ()
    confidence_radius: float | None = None
    flags: frozenset[str] = frozenset()

    def __post_init__(self) -> None:
        if self.s_ref_hat <= 0:
            raise ValueError("reference score must be positive")
        if self.e_ratio != self.s_hat / self.s_ref_hat:
            raise ValueError("e_ratio must equal s_hat / s_ref_hat exactly")
        if self.e_diff is not None and not 0.0 <= self.e_diff <= 1.0:
            raise ValueError("clamped e_diff must lie in [0, 1]")

    def csv_row(self) -> str:
        def fmt(v: float | None) -> str:
            return "" if v is None else repr(float(v))

        flags = ";".join(sorted(self.flags))
        return ",".join(
            [
                self.dataset,
                self.map_label,
                str(self.n_features),
                fmt(self.s_hat),
                fmt(self.s_ref_hat),
                fmt(self.e_ratio),
                fmt(self.e_diff),
                fmt(self.confidence_radius),
                flags,
            ]
        )


@dataclass(frozen=True)
class CalibConstants:
    """Two-sided calibration constants linking scores to mutual information.

    ``alpha * I <= S <= beta * I + gamma`` for the channel score and
    ``c * I_ref <= S_ref <= d * I_ref`` for the reference.
    """

    alpha: float = 1.0
    beta: float = 1.0
    gamma: float = 0.0
    c: float = 1.0
    d: float = 1.0

    def __post_init__(self) -> None:
        if min(self.alpha, self.beta, self.c, self.d) <= 0:
            raise ValueError("alpha, beta, c, d must be > 0")
        if self.gamma < 0:
            raise ValueError("gamma must be >= 0")
        if self.alpha > self.beta or self.c > self.d:
            raise ValueError("need alpha <= beta and c <= d")


# -- scoring -------------------------------------------------------------------


def _score_with_flags(
    data: Dataset, phi: Channel, spec: ScoreSpec, rng: RngStream
) -> tuple[float, set[str]]:
    z = phi.apply(data.features)
    y = data.labels
    flags: set[str] = set()
    if spec.kind == "featurewise-mi-sum":
        result = mi_featurewise(z, y, spec, rng)
        if any(e.clamped for e in result.per_feature):
            flags.add("negative_score_clamped")
        return result.sum, flags
    if spec.kind == "knn-cd-mi":
        est = mi_knn_cd(z, y, spec.k, rng)
        if est.clamped:
            flags.add("negative_score_clamped")
        return est.value, flags
    if spec.kind == "dv-mi":
        return mi_dv(z, y, spec.critic, rng).value, flags
    if spec.kind == "nwj-mi":
        return mi_nwj(z, y, spec.critic, rng).value, flags
    if spec.kind == "plugin-mi":
        return mi_plugin_from_samples(z, y).value, flags
    if spec.kind == "vgib":
        result = vgib_score(data.features, z, y, spec.beta, spec.k, rng)
        if result.divergent:
            flags.add("vgib_divergent")
        return result.value, flags
    raise AssertionError(f"unhandled score kind {spec.kind}")


def score_channel(
    data: Dataset,
    phi: Channel,
    spec: ScoreSpec | None = None,
    rng: RngStream | None = None,
) -> float:
    """The channel's task score S(phi; N) under the chosen scoring rule."""
    spec = spec or ScoreSpec()
    rng = rng or RngStream(0)
    return _score_with_flags(data, phi, spec, rng)[0]


def score_reference(
    data: Dataset, spec: ScoreSpec | None = None, rng: RngStream | None = None
) -> float:
    """The full-information reference score: the identity channel's score."""
    return score_channel(data, identity(data.n_features), spec, rng)


# -- normalization ---------------------------------------------------------------


def normalize_ratio(s: float, s_ref: float) -> tuple[float, frozenset[str]]:
    """Ratio efficiency ``s / s_ref``; flags (never clamps) values above 1."""
    if s_ref <= DEGENERATE_REFERENCE_THRESHOLD:
        raise DegenerateReferenceError(
            f"reference score {s_ref!r} is at or below the degeneracy "
            f"threshold {DEGENERATE_REFERENCE_THRESHOLD}"
        )
    e = s / s_ref
    flags = frozenset(("ratio_exceeds_one",)) if e > 1.0 else frozenset()
    return e, flags


def normalize_diff(
    s: float, s_ref: float, s_min: float
) -> tuple[float, frozenset[str]]:
    """Calibrated-difference efficiency ``1 - (s_ref - s)/(s_ref - s_min)``.

    Clamped into [0, 1]; scores outside [s_min, s_ref] raise the
    ``diff_clamped`` flag.
    """
    if s_min >= s_ref:
        raise ValueError(f"s_min ({s_min}) must be below s_ref ({s_ref})")
    raw = 1.0 - (s_ref - s) / (s_ref - s_min)
    clamped = min(max(raw, 0.0), 1.0)
    flags = frozenset(("diff_clamped",)) if clamped != raw else frozenset()
    return clamped, flags


# -- cross-fitting and debiasing ---------------------------------------------------


def cross_fit_score(
    data: Dataset,
    phi_fitter: Callable[[Dataset, RngStream], Channel],
    n_folds: int,
    spec: ScoreSpec | None = None,
    rng: RngStream | None = None,
) -> tuple[float, list[float]]:
    """K-fold score: fit the channel off-fold, evaluate on-fold, average.

    Folds are stratified by label; a fold missing any class is rejected
    because neither the classifier-style fitters nor the label-conditional
    estimators are defined there.
    """
    spec = spec or ScoreSpec()
    rng = rng or RngStream(0)
    folds = stratified_folds(data.labels, n_folds, rng.child("folds"))
    classes = set(data.labels.tolist())
    per_fold: list[float] = []
    for i, fold in enumerate(folds):
        if set(data.labels[fold].tolist()) != classes:
            raise InterpEffError(
                f"fold {i} is missing a class; use fewer folds or more data"
            )
        train_idx = np.setdiff1d(np.arange(data.n_samples), fold)
        phi = phi_fitter(data.subset(train_idx), rng.child(f"fold[{i}]-fit"))
        per_fold.append(
            score_channel(data.subset(fold), phi, spec, rng.child(f"fold[{i}]-score"))
        )
    return float(np.mean(per_fold)), per_fold


def jackknife(
    contributions: np.ndarray,
    statistic: Callable[[np.ndarray], float] = np.mean,
) -> tuple[float, float]:
    """Delete-one jackknife estimate and variance of a statistic.

    With the default mean statistic the estimate is the plain mean and the
    variance is the unbiased sample variance over n.
    """
    x = np.asarray(contributions, dtype=np.float64).ravel()
    n = x.size
    if n < 2:
        raise ValueError("jackknife needs at least two contributions")
    loo = np.array([statistic(np.delete(x, i)) for i in range(n)])
    full = float(statistic(x))
    estimate = n * full - (n - 1) * float(loo.mean())
    variance = float((n - 1) / n * np.sum((loo - loo.mean()) ** 2))
    return estimate, variance


def median_of_means(
    contributions: np.ndarray, blocks: int, rng: RngStream | None = None
) -> float:
    """Median of block means over a seeded random partition.

    One block is the plain mean; n blocks is the median.
    """
    x = np.asarray(contributions, dtype=np.float64).ravel()
    if not 1 <= blocks <= x.size:
        raise ValueError(f"blocks must lie in [1, {x.size}], got {blocks}")
    rng = rng or RngStream(0)
    perm = rng.generator().permutation(x.size)
    means = [chunk.mean() for chunk in np.array_split(x[perm], blocks)]
    return float(np.median(means))


def confidence_radius(c: float, comp: float, delta: float, n: int) -> float:
    """``C * sqrt((comp + ln(1/delta)) / N)``.

    ``C`` absorbs the (uncalibrated) sub-Gaussian constants; ``comp`` is the
    caller's complexity proxy for the channel (see ``Channel.complexity``).
    """
    if c <= 0:
        raise ValueError(f"C must be > 0, got {c}")
    if comp < 0:
        raise ValueError(f"comp must be >= 0, got {comp}")
    if not 0.0 < delta < 1.0:
        raise ValueError(f"delta must lie in (0, 1), got {delta}")
    if n < 1:
        raise ValueError(f"N must be >= 1, got {n}")
    return c * math.sqrt((comp + math.log(1.0 / delta)) / n)


# -- theory-side calculators -----------------------------------------------------


def mi_ratio_bounds(
    mi_z: float, mi_x: float, k: CalibConstants | None = None
) -> tuple[float, float]:
    """Two-sided bounds on the efficiency from the MI ratio.

    ``lower = (alpha/d) * mi_z/mi_x`` and
    ``upper = (beta/c) * mi_z/mi_x + gamma/(c * mi_x)``.
    """
    k = k or CalibConstants()
    if mi_x <= 0:
        raise ValueError(f"mi_x must be > 0, got {mi_x}")
    ratio = mi_z / mi_x
    return (k.alpha / k.d) * ratio, (k.beta / k.c) * ratio + k.gamma / (k.c * mi_x)


def azuma_tail(eps: float, s_ref: float, horizon: int, c: float) -> float:
    """Tail bound on an efficiency drop over a bounded-increment improvement run.

    For score increments bounded by ``c`` with nonnegative expected
    improvement, ``Pr(E_T - E_0 <= -eps) <= exp(-eps^2 s_ref^2 / (2 T c^2))``,
    capped at 1.
    """
    if min(eps, s_ref, c) <= 0 or horizon < 1:
        raise ValueError("eps, s_ref, c must be > 0 and horizon >= 1")
    return min(1.0, math.exp(-(eps**2) * s_ref**2 / (2.0 * horizon * c**2)))


def stability_bound(lips: float, radius: float, s_ref: float) -> float:
    """Efficiency change under per-sample or distributional perturbation.

    ``|E_perturbed - E| <= lips * radius / s_ref`` for an ``lips``-Lipschitz
    score; ``radius`` is the per-sample norm bound or the 1-Wasserstein
    shift.
    """
    if lips <= 0 or s_ref <= 0:
        raise ValueError("lips and s_ref must be > 0")
    if radius < 0:
        raise ValueError(f"radius must be >= 0, got {radius}")
    return lips * radius / s_ref


@dataclass(frozen=True)
class VgibScore:
    """Bottleneck objective I(Z;Y) - beta*I(Z;X) with its two components.

    ``divergent`` marks the degenerate regime where Z carries (nearly) all
    of a continuous X — there the compression term is a finite-sample
    artifact of the kNN estimator, not an estimate of a finite quantity.
    """

    value: float
    i_zy: float
    i_zx: float
    divergent: bool


def vgib_score(
    x: np.ndarray,
    z: np.ndarray,
    y: np.ndarray,
    beta: float = 0.0,
    k: int = 5,
    rng: RngStream | None = None,
) -> VgibScore:
    """Estimate I(Z;Y) - beta * I(Z;X) with the kNN estimators."""
    if beta < 0:
        raise ValueError(f"beta must be >= 0, got {beta}")
    rng = rng or RngStream(0)
    i_zy = mi_knn_cd(z, y, k, rng.child("vgib-zy"))
    if beta == 0.0:
        return VgibScore(i_zy.value, i_zy.value, 0.0, False)
    i_zx = mi_ksg_cc(z, x, k, rng.child("vgib-zx"))
    n = np.asarray(z).shape[0]
    # The kNN estimator saturates at digamma(n) - digamma(k) when Z
    # determines X (all joint neighborhoods collapse), so values near that
    # ceiling signal a divergent compression term rather than an estimate.
    ceiling = float(digamma(n) - digamma(k))
    divergent = i_zx.value > 0.9 * ceiling
    return VgibScore(i_zy.value - beta * i_zx.value, i_zy.value, i_zx.value, divergent)


# -- the full pipeline -------------------------------------------------------------


def compute_efficiency(
    data: Dataset,
    phi: Channel,
    spec: ScoreSpec | None = None,
    rng: RngStream | None = None,
    *,
    norm: str = "ratio",
    s_min: float | None = None,
    n_folds: int | None = None,
    phi_fitter: Callable[[Dataset, RngStream], Channel] | None = None,
    debias: str | None = None,
    mom_blocks: int = 4,
    radius_constant: float | None = None,
    comp: float | None = None,
    delta: float = 0.05,
) -> EfficiencyReport:
    """Score, normalize, optionally cross-fit/debias, and attach a radius.

    ``norm`` is ``"ratio"`` or ``"diff"`` (the latter requires ``s_min``).
    With ``n_folds`` the channel score is cross-fitted; ``phi_fitter``
    refits the channel per fold (defaults to reusing the given channel).
    ``debias`` is None, ``"jackknife"`` or ``"median-of-means"`` and acts on
    the per-fold scores.  A confidence radius is attached when
    ``radius_constant`` is given; ``comp`` defaults to
    ``phi.complexity()``.
    """
    spec = spec or ScoreSpec()
    rng = rng or RngStream(0)
    if norm not in ("ratio", "diff"):
        raise ValueError(f"norm must be 'ratio' or 'diff', got {norm!r}")
    if norm == "diff" and s_min is None:
        raise ValueError("the difference normalization requires s_min")
    if debias not in (None, "jackknife", "median-of-means"):
        raise ValueError(f"unknown debias mode {debias!r}")

    flags: set[str] = set()
    per_fold: tuple[float, ...] = ()
    if n_folds is not None:
        fitter = phi_fitter or (lambda _train, _rng: phi)
        s_hat, fold_scores = cross_fit_score(data, fitter, n_folds, spec, rng.child("crossfit"))
        per_fold = tuple(fold_scores)
        if debias == "jackknife":
            s_hat, _ = jackknife(np.asarray(fold_scores))
        elif debias == "median-of-means":
            blocks = min(mom_blocks, len(fold_scores))
            s_hat = median_of_means(
                np.asarray(fold_scores), blocks, rng.child("debias")
            )
    else:
        if debias is not None:
            raise ValueError("debiasing acts on fold scores; pass n_folds as well")
        s_hat, score_flags = _score_with_flags(data, phi, spec, rng.child("score"))
        flags |= score_flags

    s_ref_hat, ref_flags = _score_with_flags(
        data, identity(data.n_features), spec, rng.child("reference")
    )
    flags |= ref_flags

    e_ratio, ratio_flags = normalize_ratio(s_hat, s_ref_hat)
    flags |= ratio_flags
    e_diff = None
    if norm == "diff":
        e_diff, diff_flags = normalize_diff(s_hat, s_ref_hat, s_min)
        flags |= diff_flags

    radius = None
    if radius_constant is not None:
        radius = confidence_radius(
            radius_constant,
            phi.complexity() if comp is None else comp,
            delta,
            data.n_samples,
        )

    return EfficiencyReport(
        dataset=data.name,
        map_label=phi.label(),
        n_features=phi.out_dim,
        s_hat=s_hat,
        s_ref_hat=s_ref_hat,
        e_ratio=e_ratio,
        s_min=s_min,
        e_diff=e_diff,
        per_fold_s=per_fold,
        confidence_radius=radius,
        flags=frozenset(flags),
    )
