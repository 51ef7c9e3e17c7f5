"""Synthetic task generators and dataset ingestion.

Every generator is seed-deterministic: one :class:`~interpeff.core.RngStream`
fully determines the output, so equal configs produce bit-identical
datasets.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .core import Dataset, DatasetFormatError, RngStream, stratified_split_indices

__all__ = [
    "SinusoidConfig",
    "gen_gaussian_location",
    "gen_redundant",
    "gen_circle",
    "gen_class_gaussians",
    "gen_sinusoids",
    "circle_angle",
    "circle_cos",
    "load_digits_csv",
    "export_digits_csv",
    "train_test_split",
]


@dataclass(frozen=True)
class SinusoidConfig:
    """Two-class amplitude-modulated tone task.

    Class 0 carries a ``f0``-Hz tone, class 1 a ``f1``-Hz tone, each with a
    random amplitude, phase, and a slow AM envelope, plus white noise scaled
    to a per-sample SNR drawn uniformly in dB from ``snr_db_range``.
    """

    n: int = 5000
    fs: int = 128
    duration: float = 1.0
    f0: float = 5.0
    f1: float = 9.0
    amp_range: tuple[float, float] = (0.8, 1.2)
    am_band: tuple[float, float] = (0.5, 1.0)
    am_depth: float = 0.2
    snr_db_range: tuple[float, float] = (15.0, 20.0)

    def __post_init__(self) -> None:
        if self.n < 2:
            raise ValueError("need at least two samples")
        if self.fs < 2 or self.duration <= 0:
            raise ValueError("fs must be >= 2 and duration > 0")
        nyquist = self.fs / 2.0
        if self.f0 == self.f1 or max(self.f0, self.f1) >= nyquist:
            raise ValueError("class tones must differ and lie below fs/2")
        for name in ("amp_range", "am_band", "snr_db_range"):
            lo, hi = getattr(self, name)
            if not lo <= hi:
                raise ValueError(f"{name} must be ordered, got ({lo}, {hi})")
        if not 0.0 <= self.am_depth < 1.0:
            raise ValueError("am_depth must lie in [0, 1)")

    @property
    def n_timesteps(self) -> int:
        return int(round(self.fs * self.duration))


def gen_gaussian_location(
    n_reps: int,
    n_per_rep: int,
    theta: float,
    sigma: float,
    tau: float,
    rng: RngStream,
) -> np.ndarray:
    """Replications of a noisy mean statistic: mean of N(theta, sigma^2)
    samples plus N(0, tau^2 / n_per_rep) channel noise.

    Returns an array of ``n_reps`` channel outputs, suitable for
    :func:`~interpeff.oracles.fisher_from_replications`.
    """
    if n_reps < 1 or n_per_rep < 1:
        raise ValueError("n_reps and n_per_rep must be >= 1")
    if sigma <= 0 or tau < 0:
        raise ValueError("sigma must be > 0 and tau >= 0")
    gen = rng.generator()
    means = theta + sigma * gen.standard_normal((n_reps, n_per_rep)).mean(axis=1)
    if tau > 0:
        means = means + (tau / np.sqrt(n_per_rep)) * gen.standard_normal(n_reps)
    return means


def gen_redundant(
    n: int, sigma_eps2: float, rng: RngStream
) -> tuple[np.ndarray, np.ndarray]:
    """The redundant pair: features (X, W) and target Y = X + eps.

    X and the distractor W are independent standard normals and eps is
    N(0, sigma_eps2); W carries no information about Y beyond X.  Returns
    ``(features, target)`` with features of shape (n, 2) — the target is
    continuous, so this is not a labeled :class:`Dataset`.
    """
    if n < 2:
        raise ValueError("need at least two samples")
    if sigma_eps2 <= 0:
        raise ValueError(f"sigma_eps2 must be > 0, got {sigma_eps2}")
    gen = rng.generator()
    x = gen.standard_normal(n)
    w = gen.standard_normal(n)
    y = x + np.sqrt(sigma_eps2) * gen.standard_normal(n)
    return np.column_stack([x, w]), y


def gen_circle(
    n: int, alpha: float, q: float, symmetric: bool, rng: RngStream
) -> Dataset:
    """Noisy cap labels on the unit circle; features are (cos, sin) pairs.

    The label is the cap indicator XOR Bernoulli(q).  The angle and cosine
    channels of this task are :func:`circle_angle` and :func:`circle_cos`.
    """
    if n < 2:
        raise ValueError("need at least two samples")
    if not 0.0 < alpha < np.pi:
        raise ValueError(f"alpha must lie in (0, pi), got {alpha}")
    if not 0.0 <= q < 0.5:
        raise ValueError(f"q must lie in [0, 0.5), got {q}")
    gen = rng.generator()
    theta = gen.uniform(0.0, 2.0 * np.pi, size=n)
    if symmetric:
        in_cap = (theta <= alpha) | (theta >= 2.0 * np.pi - alpha)
    else:
        in_cap = (theta > 0.0) & (theta < alpha)
    flips = gen.uniform(size=n) < q
    labels = (in_cap ^ flips).astype(np.int64)
    features = np.column_stack([np.cos(theta), np.sin(theta)])
    kind = "sym" if symmetric else "asym"
    return Dataset(features, labels, name=f"circle-{kind}")


def circle_angle(features: np.ndarray) -> np.ndarray:
    """The lossless angle channel atan2(x2, x1), one column."""
    return np.arctan2(features[:, 1], features[:, 0])[:, None]


def circle_cos(features: np.ndarray) -> np.ndarray:
    """The cosine channel, which collapses the two preimages of each value."""
    return features[:, [0]].copy()


def gen_class_gaussians(
    n: int,
    means: np.ndarray,
    sigma: float,
    rng: RngStream,
    weights: np.ndarray | None = None,
) -> Dataset:
    """Class-conditional Gaussian features: X | Y=c ~ N(means[c], sigma^2 I).

    ``means`` is (K,) for one feature or (K, d) for d features; classes are
    drawn with the given weights (balanced by default).  The exact task MI
    for the 1-D case comes from :func:`~interpeff.oracles.mixture_label_mi`.
    """
    means = np.asarray(means, dtype=np.float64)
    if means.ndim == 1:
        means = means[:, None]
    if means.shape[0] < 2:
        raise ValueError("need at least two classes")
    if sigma <= 0:
        raise ValueError(f"sigma must be > 0, got {sigma}")
    k = means.shape[0]
    if weights is None:
        weights = np.full(k, 1.0 / k)
    else:
        weights = np.asarray(weights, dtype=np.float64)
        weights = weights / weights.sum()
    gen = rng.generator()
    labels = gen.choice(k, size=n, p=weights)
    features = means[labels] + sigma * gen.standard_normal((n, means.shape[1]))
    return Dataset(features, labels, name="class-gaussians")


def gen_sinusoids(cfg: SinusoidConfig, rng: RngStream) -> Dataset:
    """Generate the two-class tone dataset described by ``cfg``.

    Labels alternate 0,1,0,1,... so class counts differ by at most one.
    """
    gen = rng.generator()
    n, d = cfg.n, cfg.n_timesteps
    t = np.arange(d) / cfg.fs
    labels = (np.arange(n) % 2).astype(np.int64)
    freq = np.where(labels == 0, cfg.f0, cfg.f1)[:, None]
    amp = gen.uniform(*cfg.amp_range, size=(n, 1))
    phase = gen.uniform(0.0, 2.0 * np.pi, size=(n, 1))
    f_env = gen.uniform(*cfg.am_band, size=(n, 1))
    phase_env = gen.uniform(0.0, 2.0 * np.pi, size=(n, 1))
    snr_db = gen.uniform(*cfg.snr_db_range, size=n)
    envelope = 1.0 + cfg.am_depth * np.sin(2.0 * np.pi * f_env * t + phase_env)
    clean = amp * envelope * np.sin(2.0 * np.pi * freq * t + phase)
    signal_power = np.mean(clean**2, axis=1)
    noise_std = np.sqrt(signal_power / 10.0 ** (snr_db / 10.0))
    features = clean + noise_std[:, None] * gen.standard_normal((n, d))
    return Dataset(features, labels, name="sinusoids")


_DIGITS_DIM = 64
_DIGITS_CLASSES = 10
_DIGITS_EXPORT_RECIPE = (
    "export it with: python -c \"from interpeff.datagen import export_digits_csv; "
    "export_digits_csv('digits.csv')\" (requires scikit-learn)"
)


def load_digits_csv(path: str | Path) -> Dataset:
    """Load the 8x8 grayscale digits corpus from the package CSV format.

    Expects 64 feature columns, labels 0-9, pixel values in [0, 16].  See
    :func:`export_digits_csv` for producing the file.
    """
    from .core import load_csv

    path = Path(path)
    if not path.exists():
        raise DatasetFormatError(
            f"{path}: file not found; expected schema 'label,f0,...,f63' with "
            f"labels 0-9 and pixel values in [0, 16] — {_DIGITS_EXPORT_RECIPE}"
        )
    data = load_csv(path, name="digits")
    if data.n_features != _DIGITS_DIM:
        raise DatasetFormatError(
            f"{path}: expected {_DIGITS_DIM} feature columns, got {data.n_features}"
        )
    if data.labels.min() < 0 or data.labels.max() >= _DIGITS_CLASSES:
        raise DatasetFormatError(f"{path}: labels must lie in 0-9")
    if data.features.min() < 0.0 or data.features.max() > 16.0:
        raise DatasetFormatError(f"{path}: pixel values must lie in [0, 16]")
    return data


def export_digits_csv(path: str | Path) -> Path:
    """Write the scikit-learn 8x8 digits corpus in the package CSV format.

    This is the documented export recipe — the corpus itself is not bundled.
    """
    from sklearn.datasets import load_digits

    from .core import save_csv

    raw = load_digits()
    dataset = Dataset(raw.data, raw.target, name="digits")
    path = Path(path)
    save_csv(dataset, path)
    return path


def train_test_split(
    data: Dataset, train_fraction: float, rng: RngStream
) -> tuple[Dataset, Dataset]:
    """Seeded stratified split into (train, test) datasets."""
    train_idx, test_idx = stratified_split_indices(data.labels, train_fraction, rng)
    return (
        data.subset(train_idx, name=f"{data.name}-train"),
        data.subset(test_idx, name=f"{data.name}-test"),
    )
