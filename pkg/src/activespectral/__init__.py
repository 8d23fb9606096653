"""Active semi-supervised spectral clustering with uncertainty-reduction selection."""

from .constraints import CertainSets, QueryRecord, expand_constraints, representatives, resolve_sample
from .data import (
    Dataset,
    SimilarityMatrix,
    chi2_similarity,
    gaussian_similarity,
    load_dataset,
    load_precomputed_similarity,
    save_similarity,
)
from .engine import (
    CurvePoint,
    SessionConfig,
    SessionState,
    curve_key,
    init_session,
    load_session,
    run,
    save_session,
    step,
)
from .metrics import PairCounts, jaccard, pair_counts, v_measure
from .oracle import Answer, GroundTruthOracle, InteractiveOracle, NoisyOracle, ReplayOracle
from .spectral import (
    ClusterAssignment,
    ConstraintSet,
    Kind,
    SpectralEmbedding,
    apply_constraints,
    build_laplacian,
    kmeans_assign,
    smallest_eigenpairs,
    spectral_learning_cluster,
)
from .uncertainty import (
    ClusterDistribution,
    MixtureModel,
    SelectionSnapshot,
    UncertaintyScore,
    eigvec_derivative,
    entropy,
    fit_mixture,
    gradient_score,
    knn_lists,
    nonparametric_probs,
    parametric_probs,
    select_informative,
)

__version__ = "0.1.0"

__all__ = [
    "Answer", "CertainSets", "ClusterAssignment", "ClusterDistribution",
    "ConstraintSet", "CurvePoint", "Dataset", "GroundTruthOracle",
    "InteractiveOracle", "Kind", "MixtureModel", "NoisyOracle", "PairCounts",
    "QueryRecord", "ReplayOracle", "SelectionSnapshot", "SessionConfig",
    "SessionState", "SimilarityMatrix", "SpectralEmbedding", "UncertaintyScore",
    "apply_constraints", "build_laplacian", "chi2_similarity", "curve_key",
    "eigvec_derivative", "entropy", "expand_constraints", "fit_mixture",
    "gaussian_similarity", "gradient_score", "init_session", "jaccard",
    "kmeans_assign", "knn_lists", "load_dataset", "load_precomputed_similarity",
    "load_session", "nonparametric_probs", "pair_counts", "parametric_probs",
    "representatives", "resolve_sample", "run", "save_session", "save_similarity",
    "select_informative", "smallest_eigenpairs", "spectral_learning_cluster",
    "step", "v_measure",
]
