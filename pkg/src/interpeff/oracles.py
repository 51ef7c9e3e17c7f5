"""Closed-form ground truth for the efficiency functional and MI estimators.

Three analytically solvable tasks anchor every estimator in this package:

* a Gaussian location family observed through additive noise, whose
  efficiency is exactly ``sigma^2 / (sigma^2 + tau^2)``;
* a redundant pair ``Y = X + eps`` with an independent distractor, whose
  mutual information is ``0.5 * ln(1 + 1/sigma_eps^2)``;
* labels drawn from a (possibly asymmetric) cap on the unit circle with
  symmetric label noise, where both an angle channel and a cosine channel
  have closed-form mutual information.

A brute-force gridded MI plus exact joint builders for the circle task give
an independent numerical check of each closed form, and
:func:`projected_fisher_ratio` evaluates the curvature-projection limit that
the location family instantiates.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import integrate

from .core import NATS_PER_BIT, InterpEffError, binary_entropy

__all__ = [
    "OracleValue",
    "CircleOracle",
    "oracle_gaussian_location",
    "fisher_from_replications",
    "oracle_redundant",
    "oracle_circle",
    "gaussian_mi",
    "brute_force_mi",
    "circle_joint_angle",
    "circle_joint_cos",
    "projected_fisher_ratio",
    "gaussian_location_projection",
    "mixture_label_mi",
]

_PROB_FLOOR = 1e-300
_NORMALIZATION_TOL = 1e-9
_IDEMPOTENT_TOL = 1e-8
_SYMMETRY_TOL = 1e-8


@dataclass(frozen=True)
class OracleValue:
    """A single exact value with its unit and the identity of its formula."""

    value: float
    units: str  # one of {"nats", "bits", "dimensionless"}
    formula_id: str

    def __post_init__(self) -> None:
        if not np.isfinite(self.value):
            raise ValueError(f"oracle value must be finite, got {self.value}")
        if self.units not in ("nats", "bits", "dimensionless"):
            raise ValueError(f"unknown units {self.units!r}")
        if self.units == "dimensionless" and not 0.0 <= self.value <= 1.0:
            raise ValueError(f"efficiency-type value outside [0,1]: {self.value}")


@dataclass(frozen=True)
class CircleOracle:
    """Closed-form record for the circle-cap task (information in bits).

    ``p`` is the marginal label probability, ``i_a``/``i_b`` the mutual
    information of the angle and cosine channels, and ``e_a``/``e_b`` their
    efficiencies relative to the angle channel (which is lossless for this
    task, so ``e_a`` is always 1).
    """

    p: float
    i_a: float
    i_b: float
    e_a: float
    e_b: float

    @property
    def i_a_nats(self) -> float:
        return self.i_a * NATS_PER_BIT

    @property
    def i_b_nats(self) -> float:
        return self.i_b * NATS_PER_BIT


def oracle_gaussian_location(sigma2: float, tau2: float) -> OracleValue:
    """Efficiency of a mean statistic observed through N(0, tau2/N) noise.

    For a Gaussian location family with observation variance ``sigma2``, the
    noisy channel keeps exactly ``sigma2 / (sigma2 + tau2)`` of the Fisher
    information, independent of the sample size.
    """
    if sigma2 <= 0:
        raise ValueError(f"sigma2 must be > 0, got {sigma2}")
    if tau2 < 0:
        raise ValueError(f"tau2 must be >= 0, got {tau2}")
    return OracleValue(
        sigma2 / (sigma2 + tau2), "dimensionless", "gaussian-location-efficiency"
    )


def fisher_from_replications(zbars: np.ndarray) -> float:
    """Empirical Fisher information of a Gaussian statistic at fixed parameter.

    For replications of a Gaussian channel output the Fisher information is
    the reciprocal variance; this returns 1 / (unbiased sample variance).
    Intended for many replications (hundreds or more) — the estimate is
    noisy below that.
    """
    zbars = np.asarray(zbars, dtype=np.float64).ravel()
    if zbars.size < 2:
        raise ValueError("need at least two replications")
    var = float(np.var(zbars, ddof=1))
    if var == 0.0:
        raise InterpEffError("zero variance across replications: Fisher information undefined")
    return 1.0 / var


def oracle_redundant(sigma_eps2: float) -> OracleValue:
    """I(X;Y) in nats for X ~ N(0,1), Y = X + eps, eps ~ N(0, sigma_eps2)."""
    if sigma_eps2 <= 0:
        raise ValueError(f"sigma_eps2 must be > 0, got {sigma_eps2}")
    return OracleValue(
        0.5 * float(np.log1p(1.0 / sigma_eps2)), "nats", "redundant-pair-mi"
    )


def oracle_circle(alpha: float, q: float, symmetric: bool) -> CircleOracle:
    """Closed-form channel informations for cap labels on the unit circle.

    The latent angle is uniform on [0, 2*pi); the label is the cap indicator
    (symmetric cap [-alpha, alpha] or one-sided cap (0, alpha)) XOR-ed with
    Bernoulli(q) noise.  Channel A is the angle itself; channel B is the
    cosine, which collapses the two preimages of each cosine value.  For
    symmetric caps both preimages share the label, so channel B is lossless
    and ``e_b`` is exactly 1; for one-sided caps channel B mixes a labeled
    and an unlabeled preimage and loses ``(alpha/pi) * (1 - H_b(q))`` bits.
    """
    if not 0.0 < alpha < np.pi:
        raise ValueError(f"alpha must lie in (0, pi), got {alpha}")
    if not 0.0 <= q < 0.5:
        raise ValueError(f"q must lie in [0, 0.5), got {q}")
    cap_fraction = alpha / np.pi if symmetric else alpha / (2.0 * np.pi)
    p = q + cap_fraction * (1.0 - 2.0 * q)
    h_q = binary_entropy(q, units="bits")
    i_a = binary_entropy(p, units="bits") - h_q
    if i_a <= 0.0:
        raise InterpEffError(
            f"degenerate cap (alpha={alpha}, q={q}): angle channel carries no information"
        )
    if symmetric:
        i_b = i_a
    else:
        i_b = i_a - (alpha / np.pi) * (1.0 - h_q)
    return CircleOracle(p=p, i_a=i_a, i_b=i_b, e_a=1.0, e_b=i_b / i_a)


def gaussian_mi(rho: float) -> OracleValue:
    """I(X;Z) in nats for a bivariate Gaussian with correlation rho."""
    if not -1.0 < rho < 1.0:
        raise ValueError(f"rho must lie in (-1, 1), got {rho}")
    return OracleValue(
        -0.5 * float(np.log1p(-rho * rho)), "nats", "bivariate-gaussian-mi"
    )


def brute_force_mi(joint: np.ndarray, units: str = "nats") -> float:
    """Mutual information of a finite gridded joint distribution.

    ``joint[i, j]`` is the probability mass of grid cell ``i`` and label
    ``j``; the table must sum to 1 within 1e-9.  This is the direct
    double-sum over nonzero cells — an independent numerical oracle for the
    closed forms above and for the estimators.  Discretization accuracy is
    the caller's concern; the circle checks use grids of 4096 cells or more.
    """
    joint = np.asarray(joint, dtype=np.float64)
    if joint.ndim != 2:
        raise ValueError(f"joint must be 2-D, got shape {joint.shape}")
    if np.any(joint < 0):
        raise ValueError("joint entries must be nonnegative")
    total = float(joint.sum())
    if abs(total - 1.0) > _NORMALIZATION_TOL:
        raise InterpEffError(f"joint is not normalized: sums to {total!r}")
    rows = joint.sum(axis=1)
    cols = joint.sum(axis=0)
    mask = joint > 0
    pij = joint[mask]
    outer = np.maximum(np.outer(rows, cols)[mask], _PROB_FLOOR)
    value = float(np.sum(pij * (np.log(pij) - np.log(outer))))
    if units == "nats":
        return value
    if units == "bits":
        return value / NATS_PER_BIT
    raise ValueError(f"units must be 'nats' or 'bits', got {units!r}")


def _cap_intervals(alpha: float, symmetric: bool) -> list[tuple[float, float]]:
    """The cap as a union of disjoint intervals inside [0, 2*pi)."""
    if symmetric:
        return [(0.0, alpha), (2.0 * np.pi - alpha, 2.0 * np.pi)]
    return [(0.0, alpha)]


def _overlap(lo: float, hi: float, intervals: list[tuple[float, float]]) -> float:
    return sum(max(0.0, min(hi, b) - max(lo, a)) for a, b in intervals)


def circle_joint_angle(
    alpha: float, q: float, symmetric: bool, grid: int
) -> np.ndarray:
    """Exact (grid, 2) joint of the binned angle and the noisy cap label.

    Each angle cell's overlap with the cap is computed exactly, so the only
    information loss relative to the continuous channel is the within-cell
    mixing of the at most two cells that straddle a cap boundary.
    """
    if grid < 2:
        raise ValueError(f"grid must be >= 2, got {grid}")
    cap = _cap_intervals(alpha, symmetric)
    edges = np.linspace(0.0, 2.0 * np.pi, grid + 1)
    joint = np.empty((grid, 2))
    for i in range(grid):
        lo, hi = edges[i], edges[i + 1]
        frac = _overlap(lo, hi, cap) / (hi - lo)
        p1 = q + (1.0 - 2.0 * q) * frac
        joint[i, 1] = p1 / grid
        joint[i, 0] = (1.0 - p1) / grid
    return joint


def circle_joint_cos(
    alpha: float, q: float, symmetric: bool, n_bins: int
) -> np.ndarray:
    """Exact (n_bins, 2) joint of the binned cosine and the noisy cap label.

    Each cosine bin's two preimage arcs are intersected with the cap
    analytically (via arccos), so bin masses carry no quadrature error.
    """
    if n_bins < 2:
        raise ValueError(f"n_bins must be >= 2, got {n_bins}")
    cap = _cap_intervals(alpha, symmetric)
    z_edges = np.linspace(-1.0, 1.0, n_bins + 1)
    joint = np.empty((n_bins, 2))
    two_pi = 2.0 * np.pi
    for i in range(n_bins):
        z_lo, z_hi = z_edges[i], z_edges[i + 1]
        t_hi = float(np.arccos(np.clip(z_lo, -1.0, 1.0)))
        t_lo = float(np.arccos(np.clip(z_hi, -1.0, 1.0)))
        arcs = [(t_lo, t_hi), (two_pi - t_hi, two_pi - t_lo)]
        mass = sum(b - a for a, b in arcs)
        in_cap = sum(_overlap(a, b, cap) for a, b in arcs)
        p_y1 = ((1.0 - q) * in_cap + q * (mass - in_cap)) / two_pi
        joint[i, 1] = p_y1
        joint[i, 0] = mass / two_pi - p_y1
    return joint


def projected_fisher_ratio(
    info: np.ndarray, proj: np.ndarray, h: np.ndarray | None = None
) -> float:
    """Fraction of Fisher curvature preserved by a score-space projection.

    With ``h`` given, returns ``(h' P I P' h) / (h' I h)``; otherwise the
    direction-averaged form ``tr(P I) / tr(I)``.  The ratio is guaranteed to
    lie in [0, 1] when ``proj`` is self-adjoint with respect to the ``info``
    inner product (conditional-expectation-type projections, which covers
    every projector arising from a channel); the trace form also stays in
    [0, 1] for any symmetric idempotent ``proj``.  Oblique projectors can
    push the directional form above 1, and no clamping is applied.
    """
    info = np.asarray(info, dtype=np.float64)
    proj = np.asarray(proj, dtype=np.float64)
    if info.ndim != 2 or info.shape[0] != info.shape[1]:
        raise ValueError(f"info must be square, got shape {info.shape}")
    if proj.shape != info.shape:
        raise ValueError(f"proj shape {proj.shape} must match info shape {info.shape}")
    if np.max(np.abs(info - info.T)) > _SYMMETRY_TOL:
        raise ValueError("info must be symmetric")
    if float(np.min(np.linalg.eigvalsh(info))) <= 0.0:
        raise ValueError("info must be positive definite")
    if np.max(np.abs(proj @ proj - proj)) > _IDEMPOTENT_TOL:
        raise ValueError("proj must be idempotent")
    if h is None:
        return float(np.trace(proj @ info) / np.trace(info))
    h = np.asarray(h, dtype=np.float64).ravel()
    if h.shape != (info.shape[0],) or not np.any(h != 0):
        raise ValueError("h must be a nonzero vector matching info's dimension")
    projected = proj.T @ h
    return float((projected @ info @ projected) / (h @ info @ h))


def gaussian_location_projection(
    sigma2: float, tau2: float, n: int = 1
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Matrix instantiation of the noisy-location score projection.

    Returns ``(info, proj, h)`` such that
    ``projected_fisher_ratio(info, proj, h) == sigma2 / (sigma2 + tau2)``:
    ``info`` is the information of the (statistic, noise) coordinates, and
    ``proj`` the conditional-expectation projection onto functions of their
    sum.  ``proj`` is idempotent but deliberately not symmetric — it is
    self-adjoint in the ``info`` metric, which is what the [0, 1] guarantee
    actually requires.
    """
    if sigma2 <= 0 or tau2 <= 0:
        raise ValueError("sigma2 and tau2 must be > 0 (tau2 = 0 is the identity case)")
    if n < 1:
        raise ValueError(f"n must be >= 1, got {n}")
    info = np.diag([n / sigma2, n / tau2])
    proj = np.array([[sigma2, tau2], [sigma2, tau2]]) / (sigma2 + tau2)
    h = np.array([1.0, 0.0])
    return info, proj, h


def mixture_label_mi(
    means: np.ndarray,
    sigma: float = 1.0,
    weights: np.ndarray | None = None,
) -> float:
    """I(X;Y) in nats for X | Y=c ~ N(means[c], sigma^2) by quadrature.

    Evaluates ``sum_c w_c * KL(N(mu_c, sigma^2) || mixture)`` with adaptive
    integration; used as the ground truth for the class-conditional-Gaussian
    test tasks.
    """
    means = np.asarray(means, dtype=np.float64).ravel()
    if means.size < 2:
        raise ValueError("need at least two class means")
    if sigma <= 0:
        raise ValueError(f"sigma must be > 0, got {sigma}")
    if weights is None:
        weights = np.full(means.size, 1.0 / means.size)
    else:
        weights = np.asarray(weights, dtype=np.float64).ravel()
        if weights.shape != means.shape or np.any(weights <= 0):
            raise ValueError("weights must be positive and match means")
        weights = weights / weights.sum()

    norm = 1.0 / (sigma * np.sqrt(2.0 * np.pi))

    def condit(x: float, c: int) -> float:
        return norm * np.exp(-0.5 * ((x - means[c]) / sigma) ** 2)

    def mixture(x: float) -> float:
        return float(sum(w * condit(x, c) for c, w in enumerate(weights)))

    total = 0.0
    span = 12.0 * sigma
    lo_all, hi_all = means.min() - span, means.max() + span
    for c, w in enumerate(weights):

        def integrand(x: float, c: int = c) -> float:
            pc = condit(x, c)
            if pc <= 0.0:
                return 0.0
            return pc * np.log(pc / max(mixture(x), _PROB_FLOOR))

        val, _ = integrate.quad(
            integrand, lo_all, hi_all, points=list(means), limit=200
        )
        total += w * val
    return float(total)
