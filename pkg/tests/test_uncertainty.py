"""Uncertainty model tests: perturbation gradients, entropy scales, selection."""

from __future__ import annotations

import numpy as np
import pytest
from scipy.stats import multivariate_normal

from activespectral import (
    CertainSets,
    ClusterDistribution,
    ConstraintSet,
    SelectionSnapshot,
    SimilarityMatrix,
    SpectralEmbedding,
    build_laplacian,
    eigvec_derivative,
    entropy,
    fit_mixture,
    gradient_score,
    kmeans_assign,
    knn_lists,
    nonparametric_probs,
    parametric_probs,
    select_informative,
    smallest_eigenpairs,
    spectral_learning_cluster,
)
from activespectral.constraints import representatives
from activespectral.errors import (
    AllSamplesCertain,
    InvalidPair,
    InvalidParameter,
    NoCertainSets,
)


def random_similarity(rng, n) -> SimilarityMatrix:
    m = rng.uniform(size=(n, n))
    m = (m + m.T) / 2
    np.fill_diagonal(m, 0.0)
    return SimilarityMatrix(m)


def make_store(*sets) -> CertainSets:
    cs = CertainSets()
    for idx, members in enumerate(sets):
        cs.sets.append(set(members))
        for x in members:
            cs.membership[x] = idx
    return cs


def fd_eigvec_derivative(w: np.ndarray, j: int, k: int, n_c: int, eps: float = 1e-5) -> np.ndarray:
    """Central differences of the re-decomposed Laplacian's eigenvectors.

    Perturbs the (j,k)/(k,j) entries together (the edit is symmetric) and
    sign-aligns each eigenvector against the unperturbed one.
    """
    def eig(matrix):
        lap, _ = build_laplacian(SimilarityMatrix(matrix))
        return smallest_eigenpairs(lap, n_c)

    base = eig(w)
    plus, minus = w.copy(), w.copy()
    plus[j, k] += eps
    plus[k, j] += eps
    minus[j, k] -= eps
    minus[k, j] -= eps
    ep, em = eig(plus), eig(minus)
    out = np.zeros((n_c, w.shape[0]))
    for i in range(n_c):
        vp, vm = ep.vectors[:, i], em.vectors[:, i]
        if vp @ base.vectors[:, i] < 0:
            vp = -vp
        if vm @ base.vectors[:, i] < 0:
            vm = -vm
        out[i] = (vp - vm) / (2 * eps)
    return out


def well_gapped(values: np.ndarray, i: int, gap: float = 0.1) -> bool:
    others = np.delete(values, i)
    return bool(np.all(np.abs(values[i] - others) > gap))


def rel_l2_error(analytic: np.ndarray, numeric: np.ndarray) -> float:
    """Relative L2 error with an absolute floor for near-zero derivatives.

    The constant eigenvector of a connected graph has an exactly-zero
    derivative; the finite-difference side is then pure round-off and a bare
    ratio would be 0/0.
    """
    scale = max(np.linalg.norm(numeric), 1e-6)
    return float(np.linalg.norm(analytic - numeric) / scale)


class TestEigvecDerivative:
    def test_two_node_finite_difference(self):
        w = np.array([[0.0, 0.6], [0.6, 0.0]])
        lap, _ = build_laplacian(SimilarityMatrix(w))
        emb = smallest_eigenpairs(lap, 2)
        analytic = eigvec_derivative(emb, 0, 1)
        numeric = fd_eigvec_derivative(w, 0, 1, 2)
        for i in range(2):
            if well_gapped(emb.values, i):
                assert rel_l2_error(analytic[i], numeric[i]) <= 1e-3

    def test_random_matrices_match_fd(self, rng):
        # full spectrum computed, so the expansion over computed pairs is exact
        for _ in range(5):
            n = int(rng.integers(6, 14))
            w = random_similarity(rng, n).w
            lap, _ = build_laplacian(SimilarityMatrix(w))
            emb = smallest_eigenpairs(lap, n)
            j, k = 0, int(rng.integers(1, n))
            analytic = eigvec_derivative(emb, j, k)
            numeric = fd_eigvec_derivative(w, j, k, n)
            for i in range(n):
                if not well_gapped(emb.values, i):
                    continue
                assert rel_l2_error(analytic[i], numeric[i]) <= 1e-3

    def test_orthogonal_perturbation_gives_zero(self):
        # equal eigenvector rows j and k annihilate every numerator
        vectors = np.array([[0.5, 0.5], [0.5, 0.5], [0.5, -0.5], [0.5, -0.5]])
        emb = SpectralEmbedding(vectors=vectors, values=np.array([0.3, 1.7]))
        np.testing.assert_array_equal(eigvec_derivative(emb, 0, 1), np.zeros((2, 4)))

    def test_degenerate_pair_skipped(self):
        vectors = np.eye(3)
        emb = SpectralEmbedding(vectors=vectors, values=np.array([1.0, 1.0 + 1e-12, 5.0]))
        out = eigvec_derivative(emb, 0, 1)
        assert np.all(np.isfinite(out))
        # the (0,1) eigen-gap is below the guard, so those cross terms vanish
        assert out[0] @ vectors[:, 1] == 0.0
        assert out[1] @ vectors[:, 0] == 0.0

    def test_diagonal_pair_rejected(self):
        emb = SpectralEmbedding(vectors=np.eye(3), values=np.arange(3.0))
        with pytest.raises(InvalidPair):
            eigvec_derivative(emb, 1, 1)


class TestGradientScore:
    def test_requires_certain_sets(self, rng):
        w = random_similarity(rng, 5)
        lap, _ = build_laplacian(w)
        emb = smallest_eigenpairs(lap, 2)
        with pytest.raises(NoCertainSets):
            gradient_score(1, emb, CertainSets(), w)

    def test_matches_compositional_oracle(self, rng):
        w = random_similarity(rng, 6)
        lap, _ = build_laplacian(w)
        emb = smallest_eigenpairs(lap, 3)
        cs = make_store({0, 1}, {2})
        x = 4
        score = gradient_score(x, emb, cs, w)
        expected = 0.0
        summed = np.zeros((3, 6))
        for _, rep, _ in representatives(x, cs, w):
            summed += eigvec_derivative(emb, x, rep)
        expected = float(np.linalg.norm(summed, axis=1).sum())
        assert score == pytest.approx(expected, rel=1e-10)

    def test_inverse_scaling_with_eigen_gaps(self, rng):
        q, _ = np.linalg.qr(rng.normal(size=(8, 8)))
        vectors = q[:, :3]
        values = np.array([0.1, 0.9, 2.3])
        emb1 = SpectralEmbedding(vectors=vectors, values=values)
        emb2 = SpectralEmbedding(vectors=vectors, values=4.0 * values)
        w = random_similarity(rng, 8)
        cs = make_store({0}, {1, 2})
        s1 = gradient_score(5, emb1, cs, w)
        s2 = gradient_score(5, emb2, cs, w)
        assert s1 == pytest.approx(4.0 * s2, rel=1e-9)


class TestNonparametricProbs:
    def test_all_neighbors_one_cluster(self, rng):
        w = random_similarity(rng, 10)
        asg = kmeans_assign(np.arange(10.0).reshape(-1, 1), 2, seed=0)
        asg.labels[:] = 0
        dist = nonparametric_probs(3, w, asg, k=5)
        np.testing.assert_allclose(dist.probs, [1.0, 0.0], atol=1e-12)

    def test_balanced_split(self):
        m = np.zeros((5, 5))
        m[0, 1] = m[0, 2] = 0.4  # two neighbors, equal weight
        m = m + m.T
        w = SimilarityMatrix(m)
        asg = kmeans_assign(np.arange(5.0).reshape(-1, 1), 2, seed=0)
        asg.labels[:] = [0, 0, 1, 0, 1]
        dist = nonparametric_probs(0, w, asg, k=2)
        np.testing.assert_allclose(dist.probs, [0.5, 0.5], atol=1e-12)

    def test_matches_brute_force(self, rng):
        n, k = 30, 7
        w = random_similarity(rng, n)
        labels = rng.integers(0, 3, size=n)
        asg = kmeans_assign(rng.normal(size=(n, 3)), 3, seed=1)
        asg.labels = labels
        for x in range(0, n, 5):
            dist = nonparametric_probs(x, w, asg, k=k)
            sims = [(w.w[x, l], -l, l) for l in range(n) if l != x]
            sims.sort(reverse=True)
            neigh = [l for _, _, l in sims[:k]]
            weights = np.array([max(w.w[x, l], 0.0) for l in neigh])
            expected = np.zeros(3)
            for wgt, l in zip(weights, neigh):
                expected[labels[l]] += wgt
            expected /= weights.sum()
            np.testing.assert_allclose(dist.probs, expected, atol=1e-12)

    def test_zero_mass_uniform_fallback(self):
        m = np.zeros((4, 4))
        w = SimilarityMatrix(m)
        asg = kmeans_assign(np.arange(4.0).reshape(-1, 1), 2, seed=0)
        dist = nonparametric_probs(0, w, asg, k=3)
        np.testing.assert_allclose(dist.probs, [0.5, 0.5])

    def test_precomputed_neighbor_lists_agree(self, rng):
        w = random_similarity(rng, 15)
        asg = kmeans_assign(rng.normal(size=(15, 2)), 2, seed=0)
        neighbors = knn_lists(w, 6)
        for x in range(15):
            a = nonparametric_probs(x, w, asg, k=6)
            b = nonparametric_probs(x, w, asg, k=6, neighbors=neighbors)
            np.testing.assert_array_equal(a.probs, b.probs)


class TestEntropy:
    def test_delta_distribution(self):
        assert entropy(ClusterDistribution(np.array([1.0, 0.0, 0.0]))) == 0.0

    def test_uniform_four(self):
        h = entropy(ClusterDistribution(np.full(4, 0.25)))
        assert h == pytest.approx(np.log(4), abs=1e-12)

    def test_fair_coin(self):
        h = entropy(ClusterDistribution(np.array([0.5, 0.5])))
        assert h == pytest.approx(np.log(2), abs=1e-12)

    def test_bounds(self, rng):
        for _ in range(50):
            raw = rng.uniform(size=4)
            dist = ClusterDistribution(raw / raw.sum())
            assert 0.0 <= entropy(dist) <= np.log(4) + 1e-12

    def test_distribution_validation(self):
        with pytest.raises(InvalidParameter):
            ClusterDistribution(np.array([0.7, 0.7]))
        with pytest.raises(InvalidParameter):
            ClusterDistribution(np.array([1.5, -0.5]))


class TestMixture:
    def test_separated_blobs_recover_centroids(self, rng):
        blob_sigma = 0.05
        a = rng.normal(size=(40, 2)) * blob_sigma
        b = rng.normal(size=(40, 2)) * blob_sigma + np.array([5.0, -3.0])
        x = np.vstack([a, b])
        emb = SpectralEmbedding(vectors=x, values=np.array([0.0, 1.0]))
        asg = kmeans_assign(x, 2, seed=0)
        mm = fit_mixture(emb, asg, 2)
        for c in range(2):
            members = x[asg.labels == c]
            centroid = members.mean(axis=0)
            best = min(np.linalg.norm(mm.means - centroid, axis=1))
            assert best <= 0.05 * blob_sigma

    def test_single_component_closed_form(self, rng):
        x = rng.normal(size=(20, 3))
        emb = SpectralEmbedding(vectors=x, values=np.zeros(3))
        asg = kmeans_assign(x, 1, seed=0)
        mm = fit_mixture(emb, asg, 1)
        np.testing.assert_allclose(mm.weights, [1.0])
        np.testing.assert_allclose(mm.means[0], x.mean(axis=0), atol=1e-9)

    def test_loglikelihood_non_decreasing(self, rng):
        x = rng.normal(size=(60, 2))
        x[30:] += 2.0
        emb = SpectralEmbedding(vectors=x, values=np.zeros(2))
        asg = kmeans_assign(x, 3, seed=5)
        mm = fit_mixture(emb, asg, 3)
        lls = mm.log_likelihoods
        assert len(lls) >= 2
        for prev, cur in zip(lls, lls[1:]):
            assert cur >= prev - 1e-8 * max(1.0, abs(prev))

    def test_covariances_regularized(self, rng):
        # rank-deficient data: a constant column
        x = np.column_stack([rng.normal(size=25), np.zeros(25)])
        emb = SpectralEmbedding(vectors=x, values=np.zeros(2))
        asg = kmeans_assign(x, 2, seed=1)
        mm = fit_mixture(emb, asg, 2)
        for cov in mm.covariances:
            assert np.linalg.eigvalsh(cov).min() >= 1e-6 * 0.99

    def test_too_many_components(self, rng):
        x = rng.normal(size=(3, 2))
        emb = SpectralEmbedding(vectors=x, values=np.zeros(2))
        asg = kmeans_assign(x, 2, seed=0)
        with pytest.raises(InvalidParameter):
            fit_mixture(emb, asg, 4)


class TestParametricProbs:
    def test_point_at_component_mean(self):
        vectors = np.array([[0.0, 0.0], [10.0, 10.0], [10.0, 10.1]])
        emb = SpectralEmbedding(vectors=vectors, values=np.zeros(2))
        from activespectral import MixtureModel

        mm = MixtureModel(
            weights=np.array([0.5, 0.5]),
            means=np.array([[0.0, 0.0], [10.0, 10.0]]),
            covariances=np.stack([np.eye(2) * 1e-4, np.eye(2) * 1e-4]),
        )
        dist = parametric_probs(0, mm, emb)
        assert dist.probs[0] == pytest.approx(1.0, abs=1e-6)

    def test_identical_components_uniform(self, rng):
        from activespectral import MixtureModel

        x = rng.normal(size=(6, 2))
        emb = SpectralEmbedding(vectors=x, values=np.zeros(2))
        mm = MixtureModel(
            weights=np.array([0.5, 0.5]),
            means=np.zeros((2, 2)),
            covariances=np.stack([np.eye(2), np.eye(2)]),
        )
        for x_idx in range(6):
            dist = parametric_probs(x_idx, mm, emb)
            np.testing.assert_allclose(dist.probs, [0.5, 0.5], atol=1e-12)

    def test_matches_density_ratio_oracle(self, rng):
        from activespectral import MixtureModel

        x = rng.normal(size=(8, 2))
        emb = SpectralEmbedding(vectors=x, values=np.zeros(2))
        means = rng.normal(size=(2, 2))
        covs = []
        for _ in range(2):
            a = rng.normal(size=(2, 2))
            covs.append(a @ a.T + 0.5 * np.eye(2))
        weights = np.array([0.3, 0.7])
        mm = MixtureModel(weights=weights, means=means, covariances=np.stack(covs))
        for idx in range(8):
            dist = parametric_probs(idx, mm, emb)
            dens = np.array([
                weights[c] * multivariate_normal.pdf(x[idx], means[c], covs[c])
                for c in range(2)
            ])
            np.testing.assert_allclose(dist.probs, dens / dens.sum(), atol=1e-10)


def build_selection_case(rng, n=24, n_c=2, resolved=(0, 12)):
    """A small clustered problem with two singleton certain sets."""
    a = rng.normal(size=(n // 2, 2)) * 0.8
    b = rng.normal(size=(n // 2, 2)) * 0.8 + np.array([4.0, 0.0])
    x = np.vstack([a, b])
    d2 = np.sum((x[:, None] - x[None, :]) ** 2, axis=2)
    w = SimilarityMatrix(np.exp(-d2 / 2.0))
    asg, emb, edited = spectral_learning_cluster(w, ConstraintSet(), n_c, seed=0)
    cs = make_store(*[{r} for r in resolved])
    snap = SelectionSnapshot(w=edited, embedding=emb, assignment=asg, certain=cs,
                             knn_k=5, neighbors=knn_lists(edited, 5))
    candidates = [i for i in range(n) if i not in cs.membership]
    return snap, candidates


class TestSelection:
    def test_single_candidate(self, rng):
        snap, candidates = build_selection_case(rng)
        chosen, scores = select_informative(candidates[:1], snap, mode="N", b=5)
        assert chosen == candidates[0]
        assert len(scores) == 1

    def test_mode_no_picks_max_entropy(self, rng):
        snap, candidates = build_selection_case(rng)
        chosen, scores = select_informative(candidates, snap, mode="NO", b=5)
        steps = {s.sample: s.step_scale for s in scores}
        assert steps[chosen] == max(steps.values())
        for s in scores:
            assert s.gradient == 0.0 and s.product == 0.0

    def test_full_b_equals_exhaustive_oracle(self, rng):
        snap, candidates = build_selection_case(rng)
        chosen, _ = select_informative(candidates, snap, mode="N", b=len(candidates))
        # independent exhaustive scoring
        best, best_val = None, -1.0
        for x in candidates:
            step = entropy(nonparametric_probs(x, snap.w, snap.assignment,
                                               k=snap.knn_k, neighbors=snap.neighbors))
            grad = gradient_score(x, snap.embedding, snap.certain, snap.w)
            product = grad * step
            if product > best_val:
                best, best_val = x, product
        assert chosen == best

    def test_step_scale_equals_entropy(self, rng):
        # the reported step scale IS the current entropy (ambiguity goes to 0)
        snap, candidates = build_selection_case(rng)
        _, scores = select_informative(candidates, snap, mode="N", b=3)
        for s in scores:
            dist = nonparametric_probs(s.sample, snap.w, snap.assignment,
                                       k=snap.knn_k, neighbors=snap.neighbors)
            assert s.step_scale == entropy(dist)

    def test_monotone_in_b(self, rng):
        snap, candidates = build_selection_case(rng)
        products = []
        for b in (1, 3, 6, len(candidates)):
            chosen, scores = select_informative(candidates, snap, mode="N", b=b)
            by_sample = {s.sample: s for s in scores}
            products.append(by_sample[chosen].product)
        for prev, cur in zip(products, products[1:]):
            assert cur >= prev

    def test_scaling_products_keeps_argmax(self, rng):
        snap, candidates = build_selection_case(rng)
        chosen, scores = select_informative(candidates, snap, mode="N", b=6)
        values = np.array([s.product for s in scores])
        # entropy in bits instead of nats rescales every product uniformly
        assert candidates[int(np.argmax(values / np.log(2)))] == chosen

    def test_empty_candidates(self, rng):
        snap, _ = build_selection_case(rng)
        with pytest.raises(AllSamplesCertain):
            select_informative([], snap, mode="N", b=5)

    def test_parametric_modes_run(self, rng):
        snap, candidates = build_selection_case(rng)
        chosen_p, scores_p = select_informative(candidates, snap, mode="P", b=4)
        assert chosen_p in candidates
        assert snap.mixture is not None
        snap2, candidates2 = build_selection_case(rng)
        chosen_po, scores_po = select_informative(candidates2, snap2, mode="PO", b=4)
        assert chosen_po in candidates2

    def test_go_mode_gradient_only(self, rng):
        snap, candidates = build_selection_case(rng)
        chosen, scores = select_informative(candidates, snap, mode="GO", b=4)
        grads = {s.sample: s.gradient for s in scores}
        assert grads[chosen] == max(grads.values())
        for s in scores:
            assert s.step_scale == 0.0

    def test_normalization_of_all_distributions(self, rng):
        snap, candidates = build_selection_case(rng)
        for x in candidates:
            dist = nonparametric_probs(x, snap.w, snap.assignment,
                                       k=snap.knn_k, neighbors=snap.neighbors)
            assert abs(dist.probs.sum() - 1.0) <= 1e-9
