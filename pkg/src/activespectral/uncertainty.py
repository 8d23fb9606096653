"""Expected-uncertainty-reduction scoring and informative sample selection.

Each candidate's expected impact factors into a gradient (first-order
sensitivity of the top eigenvectors to the similarity edits its resolution
would cause) and a step scale (its current cluster-assignment entropy, which
resolution drives to zero). Selection maximizes the product; a cheap top-b
prefilter on step scales keeps the per-iteration cost linear in n.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np
from scipy.special import logsumexp

from .constraints import CertainSets, representatives
from .data import SimilarityMatrix
from .errors import AllSamplesCertain, InvalidPair, InvalidParameter, NoCertainSets
from .spectral import ClusterAssignment, SpectralEmbedding

log = logging.getLogger(__name__)

DEFAULT_KNN = 20
DEFAULT_BUDGET = 20
EM_MAX_ITER = 200
EM_REL_TOL = 1e-7
COV_REG = 1e-6

MODES = ("N", "P", "GO", "NO", "PO")


@dataclass
class ClusterDistribution:
    """Probability of each cluster for one sample; normalized, nonnegative."""

    probs: np.ndarray

    def __post_init__(self):
        self.probs = np.asarray(self.probs, dtype=np.float64)
        if np.any(self.probs < 0):
            raise InvalidParameter("cluster probabilities must be nonnegative")
        total = float(self.probs.sum())
        if abs(total - 1.0) > 1e-9:
            raise InvalidParameter(f"cluster probabilities sum to {total}, not 1")


@dataclass
class UncertaintyScore:
    sample: int
    gradient: float
    step_scale: float

    @property
    def product(self) -> float:
        return self.gradient * self.step_scale


@dataclass
class MixtureModel:
    """Gaussian mixture on the embedding rows, fitted by EM."""

    weights: np.ndarray       # (n_c,)
    means: np.ndarray         # (n_c, dim)
    covariances: np.ndarray   # (n_c, dim, dim)
    log_likelihoods: list[float] = field(default_factory=list)

    @property
    def n_components(self) -> int:
        return self.weights.shape[0]


def _degeneracy_floor(values: np.ndarray) -> float:
    return 1e-8 * max(1.0, float(np.max(np.abs(values))) if values.size else 1.0)


def _gap_weights(values: np.ndarray) -> np.ndarray:
    """1/(lambda_i - lambda_p) with degenerate and diagonal pairs zeroed.

    First-order perturbation theory is invalid for near-equal eigenvalues,
    so those terms are skipped rather than regularized.
    """
    gaps = values[:, None] - values[None, :]
    ok = np.abs(gaps) >= _degeneracy_floor(values)
    inv = np.zeros_like(gaps)
    inv[ok] = 1.0 / gaps[ok]
    return inv


def eigvec_derivative(emb: SpectralEmbedding, j: int, k: int) -> np.ndarray:
    """First-order derivatives dv_i/dw_jk for a symmetric entry perturbation.

    Row i of the result is the derivative of eigenvector i, expanded over the
    computed eigenpairs only: sum_p (v_i[j]-v_i[k])(v_p[j]-v_p[k])/(l_i-l_p) v_p.
    """
    if j == k:
        raise InvalidPair("similarity perturbation requires two distinct indices")
    v = emb.vectors
    diff = v[j, :] - v[k, :]
    coeffs = np.outer(diff, diff) * _gap_weights(emb.values)
    return coeffs @ v.T


def gradient_score(
    x: int,
    emb: SpectralEmbedding,
    certain: CertainSets,
    w: SimilarityMatrix,
) -> float:
    """Aggregate eigenvector sensitivity to resolving sample x.

    Sums, over the computed eigenvectors, the Euclidean norm of the combined
    derivative with respect to the similarity edits x would receive (one per
    certain-set representative).
    """
    if certain.m == 0:
        raise NoCertainSets("gradient needs at least one certain set")
    reps = [r[1] for r in representatives(x, certain, w)]
    v = emb.vectors
    diffs = v[x, :][None, :] - v[reps, :]           # (m, n_c)
    coeffs = (diffs.T @ diffs) * _gap_weights(emb.values)
    derivs = coeffs @ v.T                            # row i = summed dv_i
    return float(np.linalg.norm(derivs, axis=1).sum())


def knn_lists(w: SimilarityMatrix, k: int = DEFAULT_KNN) -> np.ndarray:
    """Per-sample k most similar neighbors (self excluded), ties to lower index.

    Computed once per session from the kernel matrix; constraint edits never
    touch an unresolved sample's row, so the lists stay valid.
    """
    if k < 1:
        raise InvalidParameter(f"neighbor count must be >= 1, got {k}")
    k = min(k, w.n - 1)
    sims = w.w.copy()
    np.fill_diagonal(sims, -np.inf)
    return np.argsort(-sims, axis=1, kind="stable")[:, :k]


def nonparametric_probs(
    x: int,
    w: SimilarityMatrix,
    asg: ClusterAssignment,
    k: int = DEFAULT_KNN,
    neighbors: np.ndarray | None = None,
) -> ClusterDistribution:
    """Cluster probabilities from similarity mass over x's k nearest neighbors.

    Cannot-link edits make entries negative; those are clamped to zero so
    the distribution stays a distribution. Falls back to uniform when no
    neighbor carries positive mass.
    """
    neigh = neighbors[x] if neighbors is not None else knn_lists(w, k)[x]
    weights = np.maximum(w.w[x, neigh], 0.0)
    total = weights.sum()
    if total <= 0.0:
        return ClusterDistribution(np.full(asg.n_c, 1.0 / asg.n_c))
    probs = np.zeros(asg.n_c)
    np.add.at(probs, asg.labels[neigh], weights)
    return ClusterDistribution(probs / total)


def entropy(dist: ClusterDistribution) -> float:
    """Shannon entropy in nats with 0 log 0 = 0; lies in [0, ln n_c]."""
    p = dist.probs[dist.probs > 0]
    return float(-(p * np.log(p)).sum())


def _log_gaussian(points: np.ndarray, mean: np.ndarray, cov: np.ndarray) -> np.ndarray:
    dim = mean.shape[0]
    chol = np.linalg.cholesky(cov)
    diff = (points - mean).T
    solved = np.linalg.solve(chol, diff)
    log_det = 2.0 * np.log(np.diag(chol)).sum()
    maha = np.sum(solved * solved, axis=0)
    return -0.5 * (dim * np.log(2.0 * np.pi) + log_det + maha)


def _component_log_densities(points: np.ndarray, mm: MixtureModel) -> np.ndarray:
    out = np.empty((points.shape[0], mm.n_components))
    for c in range(mm.n_components):
        out[:, c] = _log_gaussian(points, mm.means[c], mm.covariances[c])
    return out


def fit_mixture(emb: SpectralEmbedding, asg: ClusterAssignment, n_c: int) -> MixtureModel:
    """EM-fitted Gaussian mixture on the embedding, seeded from the assignment.

    Covariances carry a +1e-6 I floor; iteration stops on relative
    log-likelihood change below 1e-7 or after 200 rounds. The log-likelihood
    trajectory is retained (it must be non-decreasing).
    """
    x = emb.vectors
    n, dim = x.shape
    if n_c > n:
        raise InvalidParameter(f"cannot fit {n_c} components to {n} samples")

    weights = np.zeros(n_c)
    means = np.zeros((n_c, dim))
    covs = np.zeros((n_c, dim, dim))
    global_mean = x.mean(axis=0)
    global_cov = np.cov(x, rowvar=False).reshape(dim, dim) + COV_REG * np.eye(dim)
    for c in range(n_c):
        mask = asg.labels == c
        count = int(mask.sum())
        if count == 0:
            weights[c] = 1.0 / n
            means[c] = global_mean
            covs[c] = global_cov
        else:
            weights[c] = count / n
            means[c] = x[mask].mean(axis=0)
            centered = x[mask] - means[c]
            covs[c] = (centered.T @ centered) / count + COV_REG * np.eye(dim)
    weights /= weights.sum()

    mm = MixtureModel(weights=weights, means=means, covariances=covs)
    prev_ll = -np.inf
    for _ in range(EM_MAX_ITER):
        # E step
        log_dens = _component_log_densities(x, mm) + np.log(mm.weights)[None, :]
        log_norm = logsumexp(log_dens, axis=1)
        ll = float(log_norm.sum())
        mm.log_likelihoods.append(ll)
        resp = np.exp(log_dens - log_norm[:, None])
        # M step
        mass = resp.sum(axis=0)
        mm.weights = mass / n
        mm.means = (resp.T @ x) / mass[:, None]
        for c in range(n_c):
            centered = x - mm.means[c]
            mm.covariances[c] = (
                (resp[:, c][:, None] * centered).T @ centered / mass[c]
                + COV_REG * np.eye(dim)
            )
        if np.isfinite(prev_ll) and abs(ll - prev_ll) <= EM_REL_TOL * max(1.0, abs(prev_ll)):
            break
        prev_ll = ll
    return mm


def parametric_probs(x: int, mm: MixtureModel, emb: SpectralEmbedding) -> ClusterDistribution:
    """Posterior component responsibilities at sample x's embedding row."""
    point = emb.vectors[x][None, :]
    log_dens = _component_log_densities(point, mm)[0] + np.log(mm.weights)
    norm = logsumexp(log_dens)
    if not np.isfinite(norm):
        log.warning("all component densities underflowed for sample %d; "
                    "falling back to uniform", x)
        return ClusterDistribution(np.full(mm.n_components, 1.0 / mm.n_components))
    return ClusterDistribution(np.exp(log_dens - norm))


@dataclass
class SelectionSnapshot:
    """Read-only view of session state needed to score candidates."""

    w: SimilarityMatrix
    embedding: SpectralEmbedding
    assignment: ClusterAssignment
    certain: CertainSets
    knn_k: int = DEFAULT_KNN
    neighbors: np.ndarray | None = None
    mixture: MixtureModel | None = None


def _step_scale(x: int, snap: SelectionSnapshot, parametric: bool) -> float:
    if parametric:
        dist = parametric_probs(x, snap.mixture, snap.embedding)
    else:
        dist = nonparametric_probs(x, snap.w, snap.assignment,
                                   k=snap.knn_k, neighbors=snap.neighbors)
    return entropy(dist)


def select_informative(
    candidates,
    snap: SelectionSnapshot,
    mode: str = "N",
    b: int = DEFAULT_BUDGET,
) -> tuple[int, list[UncertaintyScore]]:
    """Pick the unresolved sample with the largest expected uncertainty reduction.

    Full modes N (nonparametric) and P (parametric) rank by gradient x entropy,
    computing gradients only for the b candidates with the largest step scales.
    Ablation modes GO / NO / PO rank by a single factor. Ties break to the
    lowest sample index; components that a mode does not evaluate stay 0.
    """
    if mode not in MODES:
        raise InvalidParameter(f"unknown selection mode {mode!r}")
    candidates = sorted(int(c) for c in candidates)
    if not candidates:
        raise AllSamplesCertain("every sample is already resolved")
    if b < 1:
        raise InvalidParameter(f"candidate budget must be >= 1, got {b}")

    parametric = mode in ("P", "PO")
    if parametric and snap.mixture is None:
        snap.mixture = fit_mixture(snap.embedding, snap.assignment, snap.assignment.n_c)

    scores: dict[int, UncertaintyScore]
    if mode == "GO":
        scores = {
            x: UncertaintyScore(x, gradient_score(x, snap.embedding, snap.certain, snap.w), 0.0)
            for x in candidates
        }
        key = lambda s: s.gradient
    elif mode in ("NO", "PO"):
        scores = {
            x: UncertaintyScore(x, 0.0, _step_scale(x, snap, parametric))
            for x in candidates
        }
        key = lambda s: s.step_scale
    else:
        steps = {x: _step_scale(x, snap, parametric) for x in candidates}
        shortlist = sorted(candidates, key=lambda x: (-steps[x], x))[:b]
        scores = {x: UncertaintyScore(x, 0.0, steps[x]) for x in candidates}
        for x in shortlist:
            scores[x] = UncertaintyScore(
                x, gradient_score(x, snap.embedding, snap.certain, snap.w), steps[x])
        key = lambda s: s.product

    chosen = candidates[0]
    best = key(scores[chosen])
    for x in candidates[1:]:
        value = key(scores[x])
        if value > best:
            chosen, best = x, value
    return chosen, [scores[x] for x in candidates]
