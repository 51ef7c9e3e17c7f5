"""Interpretive channels: maps Z = phi(X) and admissible post-maps.

A :class:`Channel` is an immutable description of one feature map — identity,
standardization, PCA, Gaussian random projection, FFT energy-top-k,
time-downsampling, invertible affine, additive Gaussian noise, or a
composition of those.  ``apply`` never mutates its input, and every kind is
deterministic except ``gauss_noise``, which is deterministic given its RNG
stream and the sequence of apply calls.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any

import numpy as np

from .core import InterpEffError, RngStream

__all__ = [
    "Channel",
    "identity",
    "fit_standardizer",
    "fit_pca",
    "make_randproj",
    "fit_fft_topk",
    "make_downsample",
    "make_affine",
    "make_gauss_noise",
    "compose",
    "channel_to_json",
    "channel_from_json",
]

_KINDS = (
    "identity",
    "standardize",
    "pca",
    "randproj",
    "fft_topk",
    "downsample",
    "affine",
    "gauss_noise",
    "compose",
)

_MIN_ABS_DET = 1e-12
_PCA_ORTHO_TOL = 1e-8


@dataclass(frozen=True)
class Channel:
    """One interpretive map with its fitted parameters.

    Construct through the factory functions in this module rather than
    directly; they validate parameters and fix conventions (PCA sign rule,
    FFT tie-breaking, downsample index formula).
    """

    kind: str
    in_dim: int
    out_dim: int
    params: dict[str, Any] = field(default_factory=dict)

    def __post_init__(self) -> None:
        if self.kind not in _KINDS:
            raise ValueError(f"unknown channel kind {self.kind!r}")
        if self.in_dim < 1 or self.out_dim < 1:
            raise ValueError("channel dimensions must be positive")

    # -- application -------------------------------------------------------

    def apply(self, x: np.ndarray) -> np.ndarray:
        """Rowwise map of an (n, in_dim) matrix to (n, out_dim)."""
        x = np.asarray(x, dtype=np.float64)
        if x.ndim != 2:
            raise ValueError(f"expected a 2-D matrix, got shape {x.shape}")
        if x.shape[1] != self.in_dim:
            raise ValueError(
                f"channel expects {self.in_dim} input columns, got {x.shape[1]}"
            )
        p = self.params
        if self.kind == "identity":
            return x.copy()
        if self.kind == "standardize":
            return (x - p["mean"]) * p["inv_scale"]
        if self.kind == "pca":
            return (x - p["mean"]) @ p["components"].T
        if self.kind == "randproj":
            return x @ p["matrix"].T
        if self.kind == "fft_topk":
            return np.abs(np.fft.rfft(x, axis=1))[:, p["bins"]]
        if self.kind == "downsample":
            return x[:, p["indices"]].copy()
        if self.kind == "affine":
            return x @ p["matrix"].T + p["offset"]
        if self.kind == "gauss_noise":
            sigma = p["sigma"]
            if sigma == 0.0:
                return x.copy()
            return x + sigma * p["_generator"].standard_normal(x.shape)
        if self.kind == "compose":
            out = x
            for stage in p["stages"]:
                out = stage.apply(out)
            return out
        raise AssertionError(f"unhandled kind {self.kind}")

    # -- bookkeeping -------------------------------------------------------

    def complexity(self) -> float:
        """Default complexity proxy: the number of free parameters of the map.

        Used as the ``comp`` input of the confidence radius when the caller
        does not supply one; any nonnegative scalar may be substituted.
        """
        p = self.params
        if self.kind == "identity":
            return 0.0
        if self.kind == "standardize":
            return float(2 * self.in_dim)
        if self.kind == "pca":
            return float(p["components"].size + self.in_dim)
        if self.kind == "randproj":
            return float(p["matrix"].size)
        if self.kind == "fft_topk":
            return float(len(p["bins"]))
        if self.kind == "downsample":
            return float(len(p["indices"]))
        if self.kind == "affine":
            return float(p["matrix"].size + self.in_dim)
        if self.kind == "gauss_noise":
            return 1.0
        if self.kind == "compose":
            return float(sum(s.complexity() for s in p["stages"]))
        raise AssertionError(f"unhandled kind {self.kind}")

    def label(self) -> str:
        """Short human-readable tag used in report rows."""
        if self.kind == "compose":
            return ">".join(s.label() for s in self.params["stages"])
        if self.kind in ("pca", "randproj", "fft_topk", "downsample"):
            return f"{self.kind}_k={self.out_dim}"
        return self.kind


# -- factories ---------------------------------------------------------------


def identity(d: int) -> Channel:
    return Channel("identity", d, d)


def fit_standardizer(train: np.ndarray) -> Channel:
    """Column-wise (x - train mean) / train std; constant columns map to 0."""
    train = _as_matrix(train)
    mean = train.mean(axis=0)
    std = train.std(axis=0, ddof=0)
    inv = np.where(std > 0.0, 1.0 / np.where(std > 0.0, std, 1.0), 0.0)
    return Channel(
        "standardize", train.shape[1], train.shape[1], {"mean": mean, "inv_scale": inv}
    )


def fit_pca(train: np.ndarray, k: int) -> Channel:
    """Projection onto the top-k eigenvectors of the training covariance.

    The eigendecomposition is the symmetric one of the covariance matrix
    (not an SVD of the data), eigenvalues sorted descending, and each
    component's sign is fixed so its largest-magnitude entry is positive.
    """
    train = _as_matrix(train)
    n, d = train.shape
    if not 1 <= k <= d:
        raise ValueError(f"k must be in [1, {d}], got {k}")
    if n < 2:
        raise ValueError("PCA needs at least two training rows")
    mean = train.mean(axis=0)
    centered = train - mean
    cov = (centered.T @ centered) / (n - 1)
    eigvals, eigvecs = np.linalg.eigh(cov)
    order = np.argsort(eigvals)[::-1][:k]
    components = eigvecs[:, order].T.copy()
    eigvals = eigvals[order].copy()
    for row in components:
        if row[np.argmax(np.abs(row))] < 0:
            row *= -1.0
    gram_dev = np.max(np.abs(components @ components.T - np.eye(k)))
    if gram_dev > _PCA_ORTHO_TOL:
        raise InterpEffError(f"PCA components lost orthonormality ({gram_dev:.2e})")
    return Channel(
        "pca", d, k, {"mean": mean, "components": components, "eigvals": eigvals}
    )


def make_randproj(d: int, k: int, rng: RngStream) -> Channel:
    """k x d matrix of i.i.d. N(0, 1/k) entries, fixed after construction."""
    if k < 1:
        raise ValueError(f"k must be >= 1, got {k}")
    matrix = rng.generator().standard_normal((k, d)) / np.sqrt(k)
    return Channel("randproj", d, k, {"matrix": matrix})


def fit_fft_topk(train: np.ndarray, k: int) -> Channel:
    """Keep the k highest-energy real-FFT bins of the training rows.

    Bin 0 (DC) is excluded; energies are |rfft|^2 averaged over training
    rows; ties break toward the lower bin index; the selected bins are
    stored sorted ascending and fixed afterwards.  ``apply`` returns the
    magnitudes at those bins.
    """
    train = _as_matrix(train)
    d = train.shape[1]
    if not 1 <= k < d / 2:
        raise ValueError(f"k must satisfy 1 <= k < d/2 = {d / 2}, got {k}")
    energy = np.mean(np.abs(np.fft.rfft(train, axis=1)) ** 2, axis=0)
    candidates = np.arange(1, energy.shape[0])
    order = np.lexsort((candidates, -energy[candidates]))
    bins = np.sort(candidates[order[:k]])
    return Channel("fft_topk", d, k, {"bins": bins})


def make_downsample(d: int, m: int) -> Channel:
    """Keep time indices round(j*(d-1)/(m-1)) for j = 0..m-1 (index 0 if m=1)."""
    if not 1 <= m <= d:
        raise ValueError(f"m must be in [1, {d}], got {m}")
    if m == 1:
        indices = np.array([0])
    else:
        indices = np.round(np.arange(m) * (d - 1) / (m - 1)).astype(np.int64)
    if len(np.unique(indices)) != m:
        raise InterpEffError("downsample indices collided")
    return Channel("downsample", d, m, {"indices": indices})


def make_affine(matrix: np.ndarray, offset: np.ndarray) -> Channel:
    """x -> A x + b for an invertible square A (|det A| > 1e-12)."""
    matrix = np.asarray(matrix, dtype=np.float64)
    offset = np.asarray(offset, dtype=np.float64)
    if matrix.ndim != 2 or matrix.shape[0] != matrix.shape[1]:
        raise ValueError(f"affine matrix must be square, got shape {matrix.shape}")
    d = matrix.shape[0]
    if offset.shape != (d,):
        raise ValueError(f"offset must have shape ({d},), got {offset.shape}")
    if abs(np.linalg.det(matrix)) <= _MIN_ABS_DET:
        raise ValueError("affine matrix is numerically singular")
    return Channel("affine", d, d, {"matrix": matrix.copy(), "offset": offset.copy()})


def make_gauss_noise(sigma: float, rng: RngStream, d: int) -> Channel:
    """Adds i.i.d. N(0, sigma^2) per coordinate; fresh noise each apply call.

    Callers that need a frozen corruption should snapshot the output.
    """
    if sigma < 0:
        raise ValueError(f"sigma must be >= 0, got {sigma}")
    params = {
        "sigma": float(sigma),
        "seed": rng.seed,
        "stream": rng.stream,
        "_generator": rng.generator(),
    }
    return Channel("gauss_noise", d, d, params)


def compose(outer: Channel, inner: Channel) -> Channel:
    """The chained map ``outer(inner(x))``."""
    if inner.out_dim != outer.in_dim:
        raise ValueError(
            f"cannot compose: inner out_dim {inner.out_dim} != outer in_dim {outer.in_dim}"
        )
    stages: list[Channel] = []
    for c in (inner, outer):
        stages.extend(c.params["stages"] if c.kind == "compose" else [c])
    return Channel("compose", inner.in_dim, outer.out_dim, {"stages": tuple(stages)})


def _as_matrix(x: np.ndarray) -> np.ndarray:
    x = np.asarray(x, dtype=np.float64)
    if x.ndim != 2 or x.size == 0:
        raise ValueError(f"expected a nonempty 2-D matrix, got shape {x.shape}")
    return x


# -- serialization ------------------------------------------------------------


def _params_to_doc(channel: Channel) -> dict[str, Any]:
    doc: dict[str, Any] = {}
    for key, value in channel.params.items():
        if key.startswith("_"):
            continue
        if key == "stages":
            doc[key] = [_channel_to_doc(s) for s in value]
        elif isinstance(value, np.ndarray):
            doc[key] = value.tolist()
        else:
            doc[key] = value
    return doc


def _channel_to_doc(channel: Channel) -> dict[str, Any]:
    return {
        "kind": channel.kind,
        "in_dim": channel.in_dim,
        "out_dim": channel.out_dim,
        "params": _params_to_doc(channel),
    }


def channel_to_json(channel: Channel) -> str:
    """JSON document (kind, dims, parameter arrays) for persistence."""
    return json.dumps(_channel_to_doc(channel), sort_keys=True)


_INT_ARRAY_KEYS = {"bins", "indices"}


def _channel_from_doc(doc: dict[str, Any]) -> Channel:
    kind = doc["kind"]
    params: dict[str, Any] = {}
    for key, value in doc["params"].items():
        if key == "stages":
            params[key] = tuple(_channel_from_doc(s) for s in value)
        elif isinstance(value, list):
            dtype = np.int64 if key in _INT_ARRAY_KEYS else np.float64
            params[key] = np.asarray(value, dtype=dtype)
        else:
            params[key] = value
    if kind == "gauss_noise":
        params["_generator"] = RngStream(params["seed"], params["stream"]).generator()
    return Channel(kind, doc["in_dim"], doc["out_dim"], params)


def channel_from_json(text: str | Path) -> Channel:
    """Inverse of :func:`channel_to_json`.

    A restored ``gauss_noise`` channel restarts its noise stream from the
    beginning of the stored RNG stream.
    """
    if isinstance(text, Path):
        text = text.read_text(encoding="utf-8")
    return _channel_from_doc(json.loads(text))
