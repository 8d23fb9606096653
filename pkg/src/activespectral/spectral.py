"""Graph Laplacian, partial eigendecomposition, k-means, and constraint edits."""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from enum import Enum

import numpy as np
import scipy.linalg
import scipy.sparse.linalg

from .data import SimilarityMatrix
from .errors import InvalidConstraint, InvalidParameter, NumericalError

log = logging.getLogger(__name__)

DENSE_EIG_LIMIT = 2000
KMEANS_RESTARTS = 10
KMEANS_MAX_ITER = 300
KMEANS_REL_TOL = 1e-8


class Kind(Enum):
    MUST_LINK = "must"
    CANNOT_LINK = "cannot"


@dataclass
class ConstraintSet:
    """Pairwise constraint log, deduplicated on the unordered pair.

    A later entry for the same pair overwrites the earlier one; a conflicting
    overwrite (must vs cannot, possible with a noisy oracle) is kept verbatim
    but logged as a warning.
    """

    _entries: dict[tuple[int, int], Kind] = field(default_factory=dict)

    def add(self, i: int, j: int, kind: Kind) -> None:
        if i == j:
            raise InvalidConstraint(f"constraint on identical indices ({i}, {i})")
        key = (i, j) if i < j else (j, i)
        old = self._entries.get(key)
        if old is not None and old is not kind:
            log.warning("conflicting constraint on pair %s: %s overwrites %s",
                        key, kind.value, old.value)
        self._entries[key] = kind

    def extend(self, other: "ConstraintSet") -> None:
        for (i, j), kind in other._entries.items():
            self.add(i, j, kind)

    def entries(self) -> list[tuple[int, int, Kind]]:
        return [(i, j, kind) for (i, j), kind in self._entries.items()]

    def __len__(self) -> int:
        return len(self._entries)

    def __contains__(self, pair: tuple[int, int]) -> bool:
        i, j = pair
        key = (i, j) if i < j else (j, i)
        return key in self._entries


@dataclass
class SpectralEmbedding:
    """First n_c eigenpairs of the Laplacian, eigenvalues ascending.

    Column i of `vectors` is the unit-norm eigenvector for `values[i]`; the
    sign is fixed so each eigenvector's largest-magnitude entry is positive,
    keeping downstream derivatives and mixture fits reproducible.
    """

    vectors: np.ndarray   # (n, n_c)
    values: np.ndarray    # (n_c,)

    @property
    def n(self) -> int:
        return self.vectors.shape[0]

    @property
    def n_c(self) -> int:
        return self.vectors.shape[1]


@dataclass
class ClusterAssignment:
    labels: np.ndarray                     # (n,) ints in {0..n_c-1}
    n_c: int
    centers: np.ndarray                    # (n_c, dim) k-means centroids
    empty_clusters: tuple[int, ...] = ()
    inertia: float = 0.0


def build_laplacian(w: SimilarityMatrix | np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Unnormalized Laplacian L = D - W with D the degree matrix.

    Negative entries (cannot-link edits) are allowed; degrees may go
    negative and L stays symmetric with zero row sums.
    """
    m = w.w if isinstance(w, SimilarityMatrix) else np.asarray(w, dtype=np.float64)
    degrees = m.sum(axis=1)
    d = np.diag(degrees)
    lap = d - m
    return lap, d


def _fix_signs(vectors: np.ndarray) -> np.ndarray:
    for i in range(vectors.shape[1]):
        col = vectors[:, i]
        if col[np.argmax(np.abs(col))] < 0:
            vectors[:, i] = -col
    return vectors


def smallest_eigenpairs(lap: np.ndarray, n_c: int) -> SpectralEmbedding:
    """The n_c smallest eigenpairs of a symmetric (possibly indefinite) matrix.

    Dense LAPACK path up to DENSE_EIG_LIMIT; Lanczos beyond that. Raises
    NumericalError if the iterative solver fails to converge.
    """
    lap = np.asarray(lap, dtype=np.float64)
    n = lap.shape[0]
    if not 1 <= n_c <= n:
        raise InvalidParameter(f"n_c must be in [1, {n}], got {n_c}")
    if n <= DENSE_EIG_LIMIT or n_c >= n - 1:
        vals, vecs = scipy.linalg.eigh(lap, subset_by_index=[0, n_c - 1])
    else:
        try:
            vals, vecs = scipy.sparse.linalg.eigsh(lap, k=n_c, which="SA", tol=1e-8)
        except scipy.sparse.linalg.ArpackNoConvergence as exc:
            raise NumericalError(f"eigensolver did not converge: {exc}") from exc
        order = np.argsort(vals)
        vals, vecs = vals[order], vecs[:, order]
    vecs = _fix_signs(np.ascontiguousarray(vecs))
    residuals = np.linalg.norm(lap @ vecs - vecs * vals[None, :], axis=0)
    bounds = 1e-6 * np.maximum(1.0, np.abs(vals))
    if np.any(residuals > bounds):
        raise NumericalError(
            f"eigenpair residual {residuals.max():.3e} exceeds tolerance")
    return SpectralEmbedding(vectors=vecs, values=vals)


def _kmeans_pp_init(x: np.ndarray, k: int, rng: np.random.Generator) -> np.ndarray:
    n = x.shape[0]
    centers = np.empty((k, x.shape[1]))
    centers[0] = x[rng.integers(n)]
    closest = np.sum((x - centers[0]) ** 2, axis=1)
    for c in range(1, k):
        total = closest.sum()
        if total <= 0:
            centers[c:] = x[rng.integers(n, size=k - c)]
            break
        probs = closest / total
        centers[c] = x[rng.choice(n, p=probs)]
        closest = np.minimum(closest, np.sum((x - centers[c]) ** 2, axis=1))
    return centers


def _lloyd(x: np.ndarray, centers: np.ndarray) -> tuple[np.ndarray, np.ndarray, float]:
    k = centers.shape[0]
    prev_inertia = np.inf
    labels = np.zeros(x.shape[0], dtype=np.int64)
    for _ in range(KMEANS_MAX_ITER):
        d2 = np.sum((x[:, None, :] - centers[None, :, :]) ** 2, axis=2)
        labels = np.argmin(d2, axis=1)
        inertia = float(d2[np.arange(x.shape[0]), labels].sum())
        new_centers = centers.copy()
        for c in range(k):
            mask = labels == c
            if mask.any():
                new_centers[c] = x[mask].mean(axis=0)
        if prev_inertia - inertia <= KMEANS_REL_TOL * max(abs(prev_inertia), 1.0):
            centers = new_centers
            break
        centers = new_centers
        prev_inertia = inertia
    d2 = np.sum((x[:, None, :] - centers[None, :, :]) ** 2, axis=2)
    labels = np.argmin(d2, axis=1)
    inertia = float(d2[np.arange(x.shape[0]), labels].sum())
    return labels, centers, inertia


def kmeans_assign(emb: SpectralEmbedding | np.ndarray, n_c: int, seed: int) -> ClusterAssignment:
    """Best-of-10 k-means++ runs on the embedding rows, by within-cluster SSE.

    Deterministic for a fixed seed. Clusters that end empty (degenerate
    embeddings) are flagged rather than force-filled.
    """
    x = emb.vectors if isinstance(emb, SpectralEmbedding) else np.asarray(emb, dtype=np.float64)
    n = x.shape[0]
    if n < n_c:
        raise InvalidParameter(f"cannot split {n} samples into {n_c} clusters")
    rng = np.random.default_rng(seed)
    best: tuple[np.ndarray, np.ndarray, float] | None = None
    for _ in range(KMEANS_RESTARTS):
        centers = _kmeans_pp_init(x, n_c, rng)
        labels, centers, inertia = _lloyd(x, centers)
        if best is None or inertia < best[2]:
            best = (labels, centers, inertia)
    labels, centers, inertia = best
    empty = tuple(int(c) for c in range(n_c) if not np.any(labels == c))
    return ClusterAssignment(labels=labels, n_c=n_c, centers=centers,
                             empty_clusters=empty, inertia=inertia)


def apply_constraints(w: SimilarityMatrix, q: ConstraintSet) -> SimilarityMatrix:
    """Overwrite similarity entries: must-link pairs to +1, cannot-link to -1.

    Returns an edited copy; the input matrix is never mutated.
    """
    out = w.w.copy()
    n = out.shape[0]
    for i, j, kind in q.entries():
        if not (0 <= i < n and 0 <= j < n):
            raise InvalidConstraint(f"constraint ({i}, {j}) out of range for n={n}")
        value = 1.0 if kind is Kind.MUST_LINK else -1.0
        out[i, j] = value
        out[j, i] = value
    return SimilarityMatrix(out)


def spectral_learning_cluster(
    w: SimilarityMatrix,
    q: ConstraintSet,
    n_c: int,
    seed: int,
) -> tuple[ClusterAssignment, SpectralEmbedding, SimilarityMatrix]:
    """Constraint edits -> Laplacian -> smallest eigenpairs -> k-means.

    Returns the assignment plus the intermediates (embedding, edited W) so
    the uncertainty model can reuse them without recomputation.
    """
    edited = apply_constraints(w, q)
    lap, _ = build_laplacian(edited)
    emb = smallest_eigenpairs(lap, n_c)
    asg = kmeans_assign(emb, n_c, seed)
    return asg, emb, edited
