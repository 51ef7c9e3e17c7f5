"""Core primitives: seeded RNG streams, labeled datasets, CSV interchange.

Everything downstream (estimators, channels, experiments) is deterministic
given an :class:`RngStream`, so reproducibility reduces to carrying one
``(seed, stream)`` pair through the pipeline.  All information quantities in
this package are measured in nats internally; convert at presentation time
with :data:`NATS_PER_BIT`.
"""

from __future__ import annotations

import csv
import hashlib
from dataclasses import dataclass
from pathlib import Path

import numpy as np

NATS_PER_BIT = float(np.log(2.0))

__all__ = [
    "NATS_PER_BIT",
    "InterpEffError",
    "DatasetFormatError",
    "DegenerateReferenceError",
    "RngStream",
    "Dataset",
    "binary_entropy",
    "nats_to_bits",
    "bits_to_nats",
    "stratified_split_indices",
    "stratified_folds",
    "load_csv",
    "save_csv",
    "canonical_json",
]


class InterpEffError(Exception):
    """Base class for errors raised by this package."""


class DatasetFormatError(InterpEffError):
    """Raised when a dataset file violates the expected CSV layout."""


class DegenerateReferenceError(InterpEffError):
    """Raised when a reference score is too close to zero to normalize by."""


@dataclass(frozen=True)
class RngStream:
    """A named, splittable source of randomness.

    Two streams with the same ``(seed, stream)`` produce identical draws;
    streams with different ids are statistically independent.  Child streams
    are derived from string labels by hashing, so the set of children a
    caller requests — and the order it requests them in — never perturbs any
    sibling's draws.

    Parameters
    ----------
    seed : int
        Experiment-level entropy. Non-negative.
    stream : int
        Sub-stream identifier. Non-negative.
    """

    seed: int
    stream: int = 0

    def __post_init__(self) -> None:
        if not isinstance(self.seed, (int, np.integer)) or self.seed < 0:
            raise ValueError(f"seed must be a non-negative int, got {self.seed!r}")
        if not isinstance(self.stream, (int, np.integer)) or self.stream < 0:
            raise ValueError(f"stream must be a non-negative int, got {self.stream!r}")

    def generator(self) -> np.random.Generator:
        """Fresh generator positioned at the start of this stream."""
        seq = np.random.SeedSequence(entropy=int(self.seed), spawn_key=(int(self.stream),))
        return np.random.default_rng(seq)

    def child(self, label: str) -> "RngStream":
        """Derive an independent stream from a string label."""
        digest = hashlib.sha256(f"{self.stream}/{label}".encode("utf-8")).digest()
        return RngStream(self.seed, int.from_bytes(digest[:8], "big"))

    def children(self, label: str, n: int) -> list["RngStream"]:
        """``n`` independent streams derived from ``label`` and an index."""
        return [self.child(f"{label}[{i}]") for i in range(n)]


@dataclass(frozen=True)
class Dataset:
    """An array of feature rows with integer class labels.

    Attributes
    ----------
    features : ndarray, shape (n, d), float64
        One row per observation. Finite.
    labels : ndarray, shape (n,), int64
        Class label per observation.
    name : str
        Free-form tag carried into reports.
    """

    features: np.ndarray
    labels: np.ndarray
    name: str = "dataset"

    def __post_init__(self) -> None:
        x = np.asarray(self.features, dtype=np.float64)
        y = np.asarray(self.labels)
        if x.ndim != 2:
            raise ValueError(f"features must be 2-D, got shape {x.shape}")
        if y.ndim != 1:
            raise ValueError(f"labels must be 1-D, got shape {y.shape}")
        if x.shape[0] != y.shape[0]:
            raise ValueError(
                f"features rows ({x.shape[0]}) and labels length ({y.shape[0]}) differ"
            )
        if x.shape[0] == 0:
            raise ValueError("dataset must contain at least one row")
        if not np.all(np.isfinite(x)):
            raise ValueError("features must be finite")
        if not np.issubdtype(y.dtype, np.integer):
            y_int = y.astype(np.int64)
            if not np.array_equal(y_int, y):
                raise ValueError("labels must be integers")
            y = y_int
        object.__setattr__(self, "features", x)
        object.__setattr__(self, "labels", y.astype(np.int64))

    @property
    def n_samples(self) -> int:
        return int(self.features.shape[0])

    @property
    def n_features(self) -> int:
        return int(self.features.shape[1])

    @property
    def classes(self) -> np.ndarray:
        return np.unique(self.labels)

    def with_features(self, features: np.ndarray, name: str | None = None) -> "Dataset":
        """Same labels, new feature matrix (e.g. after an interpretive map)."""
        return Dataset(features, self.labels, self.name if name is None else name)

    def subset(self, idx: np.ndarray, name: str | None = None) -> "Dataset":
        idx = np.asarray(idx)
        return Dataset(
            self.features[idx], self.labels[idx], self.name if name is None else name
        )


def binary_entropy(p: float, units: str = "nats") -> float:
    """Entropy of a Bernoulli(p) variable.

    ``units`` is ``"nats"`` (default, consistent with every internal score)
    or ``"bits"``.
    """
    if not 0.0 <= p <= 1.0:
        raise ValueError(f"p must lie in [0, 1], got {p}")
    if p in (0.0, 1.0):
        h = 0.0
    else:
        h = float(-(p * np.log(p) + (1.0 - p) * np.log(1.0 - p)))
    if units == "nats":
        return h
    if units == "bits":
        return h / NATS_PER_BIT
    raise ValueError(f"units must be 'nats' or 'bits', got {units!r}")


def nats_to_bits(x: float) -> float:
    return float(x) / NATS_PER_BIT


def bits_to_nats(x: float) -> float:
    return float(x) * NATS_PER_BIT


def stratified_split_indices(
    labels: np.ndarray, train_fraction: float, rng: RngStream
) -> tuple[np.ndarray, np.ndarray]:
    """Seeded two-way split preserving class proportions.

    The total train size is ``round(train_fraction * n)``; per-class quotas
    use floor allocation with the remaining slots going to the largest
    fractional remainders (ties to the smaller class label), so repeated
    calls with one seed give one split exactly.
    """
    labels = np.asarray(labels).ravel()
    n = labels.size
    if n < 2:
        raise ValueError("need at least two samples to split")
    if not 0.0 < train_fraction < 1.0:
        raise ValueError(f"train_fraction must lie in (0, 1), got {train_fraction}")
    classes, counts = np.unique(labels, return_counts=True)
    target = int(round(train_fraction * n))
    target = min(max(target, 1), n - 1)
    exact = counts * train_fraction
    quotas = np.floor(exact).astype(np.int64)
    remainders = exact - quotas
    short = target - int(quotas.sum())
    if short > 0:
        order = np.lexsort((np.arange(classes.size), -remainders))
        for idx in order[:short]:
            quotas[idx] += 1
    elif short < 0:
        order = np.lexsort((np.arange(classes.size), remainders))
        gave = 0
        for idx in order:
            if gave == -short:
                break
            if quotas[idx] > 0:
                quotas[idx] -= 1
                gave += 1
    quotas = np.minimum(quotas, counts)
    gen = rng.generator()
    train_parts, test_parts = [], []
    for cls, quota in zip(classes, quotas):
        idx = np.flatnonzero(labels == cls)
        idx = idx[gen.permutation(idx.size)]
        train_parts.append(idx[:quota])
        test_parts.append(idx[quota:])
    train_idx = np.sort(np.concatenate(train_parts))
    test_idx = np.sort(np.concatenate(test_parts))
    return train_idx, test_idx


def stratified_folds(
    labels: np.ndarray, n_folds: int, rng: RngStream
) -> list[np.ndarray]:
    """Seeded fold assignment keeping class proportions per fold.

    Returns ``n_folds`` disjoint index arrays covering every sample.  Within
    each class the shuffled members are split into near-equal chunks, and
    the chunk-to-fold mapping rotates with the class position so no fold is
    systematically the large one.
    """
    labels = np.asarray(labels).ravel()
    if n_folds < 2:
        raise ValueError(f"n_folds must be >= 2, got {n_folds}")
    if n_folds > labels.size:
        raise ValueError(f"n_folds={n_folds} exceeds the sample count {labels.size}")
    gen = rng.generator()
    folds: list[list[np.ndarray]] = [[] for _ in range(n_folds)]
    for rank, cls in enumerate(np.unique(labels)):
        idx = np.flatnonzero(labels == cls)
        idx = idx[gen.permutation(idx.size)]
        for offset, chunk in enumerate(np.array_split(idx, n_folds)):
            folds[(offset + rank) % n_folds].append(chunk)
    return [np.sort(np.concatenate(parts)) for parts in folds]


def _expected_header(d: int) -> list[str]:
    return ["label"] + [f"f{j}" for j in range(d)]


def save_csv(dataset: Dataset, path: str | Path) -> None:
    """Write ``label,f0,...,f{d-1}`` rows; floats use shortest round-trip repr."""
    path = Path(path)
    d = dataset.n_features
    lines = [",".join(_expected_header(d))]
    for yi, row in zip(dataset.labels, dataset.features):
        lines.append(f"{int(yi)}," + ",".join(repr(float(v)) for v in row))
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")


def load_csv(path: str | Path, name: str | None = None) -> Dataset:
    """Read a dataset written by :func:`save_csv`.

    Raises
    ------
    DatasetFormatError
        On a bad header, a short/long row, or a non-numeric field; the
        message names the 1-based line number.
    """
    path = Path(path)
    with path.open(newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise DatasetFormatError(f"{path}: empty file") from None
        header = [h.strip() for h in header]
        if len(header) < 2 or header[0] != "label":
            raise DatasetFormatError(
                f"{path}, line 1: header must be 'label,f0,...', got {','.join(header)!r}"
            )
        d = len(header) - 1
        if header != _expected_header(d):
            raise DatasetFormatError(
                f"{path}, line 1: feature columns must be f0..f{d - 1} in order"
            )
        labels: list[int] = []
        rows: list[list[float]] = []
        for lineno, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != d + 1:
                raise DatasetFormatError(
                    f"{path}, line {lineno}: expected {d + 1} fields, got {len(row)}"
                )
            try:
                labels.append(int(row[0]))
            except ValueError:
                raise DatasetFormatError(
                    f"{path}, line {lineno}: label {row[0]!r} is not an integer"
                ) from None
            try:
                rows.append([float(v) for v in row[1:]])
            except ValueError:
                raise DatasetFormatError(
                    f"{path}, line {lineno}: non-numeric feature field"
                ) from None
    if not rows:
        raise DatasetFormatError(f"{path}: no data rows")
    return Dataset(np.array(rows), np.array(labels), name or path.stem)


def canonical_json(obj) -> str:
    """Serialize to a byte-stable JSON document (sorted keys, fixed layout).

    Floats keep their shortest round-trip repr, so equal inputs always
    produce identical bytes — reports written through this helper can be
    compared with ``cmp``/hashing.
    """
    import json

    return json.dumps(obj, sort_keys=True, indent=2, allow_nan=False) + "\n"
