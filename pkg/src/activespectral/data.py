"""Dataset loading and similarity-kernel construction."""

from __future__ import annotations

import csv
import struct
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import (
    AsymmetryError,
    InvalidInput,
    InvalidParameter,
    ParseError,
    ShapeError,
    TooFewSamples,
)

CHI2_EPS = 1e-12
SYMMETRY_TOL = 1e-8
ACSM_MAGIC = b"ACSM"


@dataclass
class Dataset:
    """Feature matrix with optional ground-truth labels.

    Labels exist only for simulated oracles and evaluation metrics; the
    clustering engine itself never reads them.
    """

    features: np.ndarray                  # (n, d) float64
    labels: np.ndarray | None = None      # (n,) int, canonical {0..C-1}
    class_count: int | None = None
    ids: np.ndarray | None = None

    def __post_init__(self):
        self.features = np.asarray(self.features, dtype=np.float64)
        if self.features.ndim != 2:
            raise ShapeError(f"features must be 2-D, got shape {self.features.shape}")
        if self.n < 2:
            raise TooFewSamples(f"need at least 2 samples, got {self.n}")
        if self.features.shape[1] < 1:
            raise ShapeError("need at least one feature dimension")
        if self.ids is None:
            self.ids = np.arange(self.n)
        if self.labels is not None:
            self.labels = np.asarray(self.labels)
            if self.labels.shape != (self.n,):
                raise ShapeError("labels length does not match sample count")
            self.labels, self.class_count = canonicalize_labels(self.labels)

    @property
    def n(self) -> int:
        return self.features.shape[0]

    @property
    def d(self) -> int:
        return self.features.shape[1]


@dataclass
class SimilarityMatrix:
    """Symmetric affinity matrix with zero diagonal.

    Kernel-built entries lie in [0, 1]; constraint edits later push entries
    into [-1, 1]. The zero diagonal keeps node degrees equal to off-diagonal
    mass (self-similarity is never used).
    """

    w: np.ndarray

    def __post_init__(self):
        self.w = np.asarray(self.w, dtype=np.float64)
        if self.w.ndim != 2 or self.w.shape[0] != self.w.shape[1]:
            raise ShapeError(f"similarity matrix must be square, got {self.w.shape}")
        if not np.array_equal(self.w, self.w.T):
            raise AsymmetryError("similarity matrix must be exactly symmetric")
        np.fill_diagonal(self.w, 0.0)

    @property
    def n(self) -> int:
        return self.w.shape[0]

    def copy(self) -> "SimilarityMatrix":
        return SimilarityMatrix(self.w.copy())


def canonicalize_labels(raw) -> tuple[np.ndarray, int]:
    """Map arbitrary label values to dense integers {0..C-1}.

    Simulated oracles only need equality tests, so the mapping (sorted
    unique order) is arbitrary but deterministic.
    """
    raw = np.asarray(raw)
    uniques, dense = np.unique(raw, return_inverse=True)
    return dense.astype(np.int64), len(uniques)


def _parse_csv_rows(path) -> tuple[list[list[str]], list[str] | None]:
    """Read CSV rows; detect an optional header (non-numeric first row)."""
    with open(path, newline="") as fh:
        rows = [row for row in csv.reader(fh) if row]
    if not rows:
        raise ParseError(f"{path}: empty file")
    width = len(rows[0])
    for i, row in enumerate(rows):
        if len(row) != width:
            raise ParseError(f"{path}: ragged row {i} (expected {width} cells, got {len(row)})")

    def _numeric(cell: str) -> bool:
        try:
            float(cell)
            return True
        except ValueError:
            return False

    # Header heuristic: the first row is a header iff some column is
    # non-numeric there but numeric in every data row (a string *label*
    # column is non-numeric all the way down and must not trigger).
    header = None
    if len(rows) > 1:
        is_header = any(
            not _numeric(rows[0][col]) and all(_numeric(r[col]) for r in rows[1:])
            for col in range(width)
        )
        if is_header:
            header = [c.strip() for c in rows[0]]
            rows = rows[1:]
    return rows, header


def load_dataset(
    path,
    format: str = "csv_features",
    label_column: int | str | None = None,
) -> Dataset:
    """Load a feature dataset from CSV.

    format "csv_features" reads every column as a feature;
    "csv_features_labeled" extracts one label column (by index or header
    name; default last column). A non-numeric first row is treated as a
    header.
    """
    if format not in ("csv_features", "csv_features_labeled"):
        raise InvalidParameter(f"unknown dataset format {format!r}")
    rows, header = _parse_csv_rows(path)

    labels = None
    if format == "csv_features_labeled":
        width = len(rows[0])
        if label_column is None:
            col = width - 1
        elif isinstance(label_column, str):
            if header is None or label_column not in header:
                raise ParseError(f"{path}: label column {label_column!r} not in header")
            col = header.index(label_column)
        else:
            col = label_column if label_column >= 0 else width + label_column
            if not 0 <= col < width:
                raise ParseError(f"{path}: label column index {label_column} out of range")
        labels = [row[col] for row in rows]
        rows = [[c for j, c in enumerate(row) if j != col] for row in rows]

    try:
        features = np.array([[float(c) for c in row] for row in rows], dtype=np.float64)
    except ValueError as exc:
        raise ParseError(f"{path}: non-numeric feature value ({exc})") from exc
    if features.size == 0 or features.shape[0] < 2:
        raise TooFewSamples(f"{path}: need at least 2 samples")
    return Dataset(features=features, labels=np.array(labels) if labels is not None else None)


def pairwise_sq_dists(x: np.ndarray) -> np.ndarray:
    sq = np.sum(x * x, axis=1)
    d2 = sq[:, None] + sq[None, :] - 2.0 * (x @ x.T)
    np.maximum(d2, 0.0, out=d2)
    return d2


def median_heuristic_sigma(ds: Dataset) -> float:
    """Median of off-diagonal pairwise distances; fallback bandwidth when
    none is configured (the usual choice when a kernel width is unknown)."""
    d2 = pairwise_sq_dists(ds.features)
    dists = np.sqrt(d2[np.triu_indices(ds.n, k=1)])
    med = float(np.median(dists))
    if med <= 0.0:
        # All points coincide; any positive bandwidth gives the same kernel.
        return 1.0
    return med


def gaussian_similarity(ds: Dataset, sigma: float | None = None) -> SimilarityMatrix:
    """w_ij = exp(-||x_i - x_j||^2 / (2 sigma^2)), zero diagonal."""
    if sigma is None:
        sigma = median_heuristic_sigma(ds)
    if sigma <= 0:
        raise InvalidParameter(f"sigma must be positive, got {sigma}")
    d2 = pairwise_sq_dists(ds.features)
    w = np.exp(-d2 / (2.0 * sigma * sigma))
    w = (w + w.T) / 2.0  # exact symmetry despite float noise
    np.fill_diagonal(w, 0.0)
    return SimilarityMatrix(w)


def chi2_similarity(ds: Dataset, gamma: float = 1.0) -> SimilarityMatrix:
    """w_ij = exp(-gamma * sum_k (x_ik - x_jk)^2 / (x_ik + x_jk + eps)).

    Requires nonnegative features; eps guards zero-sum bins.
    """
    if gamma <= 0:
        raise InvalidParameter(f"gamma must be positive, got {gamma}")
    x = ds.features
    if np.any(x < 0):
        raise InvalidInput("chi-squared kernel requires nonnegative features")
    diff2 = (x[:, None, :] - x[None, :, :]) ** 2
    denom = x[:, None, :] + x[None, :, :] + CHI2_EPS
    dist = np.sum(diff2 / denom, axis=2)
    w = np.exp(-gamma * dist)
    w = (w + w.T) / 2.0
    np.fill_diagonal(w, 0.0)
    return SimilarityMatrix(w)


def load_precomputed_similarity(path) -> SimilarityMatrix:
    """Load a precomputed similarity matrix (square CSV or ACSM binary).

    Minor float asymmetry (max |M - M^T| <= 1e-8) is averaged away; anything
    larger is an error. The diagonal is always forced to zero.
    """
    path = Path(path)
    with open(path, "rb") as fh:
        magic = fh.read(4)
    if magic == ACSM_MAGIC:
        m = _read_acsm(path)
    else:
        rows, _ = _parse_csv_rows(path)
        try:
            m = np.array([[float(c) for c in row] for row in rows], dtype=np.float64)
        except ValueError as exc:
            raise ParseError(f"{path}: non-numeric matrix entry ({exc})") from exc
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise ShapeError(f"{path}: expected a square matrix, got shape {m.shape}")
    asym = float(np.max(np.abs(m - m.T))) if m.size else 0.0
    if asym > SYMMETRY_TOL:
        raise AsymmetryError(f"{path}: asymmetry {asym:.3e} exceeds {SYMMETRY_TOL}")
    m = (m + m.T) / 2.0
    np.fill_diagonal(m, 0.0)
    return SimilarityMatrix(m)


def save_similarity(sim: SimilarityMatrix, path, binary: bool | None = None) -> None:
    """Write a similarity matrix; binary ACSM if requested or path ends .acsm."""
    path = Path(path)
    if binary is None:
        binary = path.suffix == ".acsm"
    if binary:
        with open(path, "wb") as fh:
            fh.write(ACSM_MAGIC)
            fh.write(struct.pack("<Q", sim.n))
            fh.write(sim.w.astype("<f8").tobytes())
    else:
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh)
            for row in sim.w:
                writer.writerow([repr(float(v)) for v in row])


def _read_acsm(path: Path) -> np.ndarray:
    raw = path.read_bytes()
    if len(raw) < 12:
        raise ParseError(f"{path}: truncated ACSM file")
    (n,) = struct.unpack_from("<Q", raw, 4)
    expected = 4 + 8 + 8 * n * n  # magic + u64 n + n^2 little-endian f64
    if len(raw) != expected:
        raise ParseError(f"{path}: ACSM payload size mismatch (n={n})")
    flat = np.frombuffer(raw, dtype="<f8", offset=12, count=n * n)
    return flat.reshape(n, n).astype(np.float64)
