"""Low-rank kernel representations for clustering and anomaly detection.

The central object is a self-expressive coefficient matrix computed in
closed form from the eigendecomposition of a kernel Gram matrix with a
singular-value shrinkage rule. On top of it sit similarity matrices,
nearest-neighbor graphs, clustering drivers, and a p-value based anomaly
detector with a k-NN baseline.
"""

from .anomaly import (AnomalyModel, RocCurve, ScoreReport, decide,
                      fit_anomaly, knn_pvalue_baseline, knn_pvalues,
                      mean_roc, roc, score, score_batch)
from .clustering import (ClusterResult, TrialSummary, error_rate,
                         kernel_space_kmeans, kmeans, run_trials,
                         similarity_kmeans, spectral_cluster)
from .data import (Dataset, SplitPlan, TrainTest, anomaly_labels_for_split,
                   gen_clusters, gen_line_circle, gen_linear_subspace,
                   load_csv, sample_clusters_nominal, split_ionosphere)
from .kernels import (GramMatrix, Linear, Polynomial, Product, RBF,
                      cross_gram, eval_kernel, gram, kernel_from_config,
                      kernel_to_config, median_bandwidth)
from .lowrank import (DEFAULT_LAMBDA, KlrrModel, LambdaRule,
                      PerturbationReport, Spectrum, TestRepresentation, fit,
                      load_model, nuclear_norm, objective, offblock_bound,
                      perturbation_check, project_test, prox_gradient_solve,
                      prox_nuclear, save_model, spectral_objective)
from .similarity import (NeighborGraph, SimilarityMatrix, cosine_similarity,
                         cross_structure_edge_fraction, distance_matrix,
                         knn_graph, structural_distance,
                         structured_similarity, write_edge_list)
from .util import InputError

__version__ = "0.1.0"

__all__ = [
    "AnomalyModel", "ClusterResult", "DEFAULT_LAMBDA", "Dataset",
    "GramMatrix", "InputError", "KlrrModel", "LambdaRule", "Linear",
    "NeighborGraph", "PerturbationReport", "Polynomial", "Product", "RBF",
    "RocCurve", "ScoreReport", "SimilarityMatrix", "SplitPlan", "Spectrum",
    "TestRepresentation", "TrainTest", "TrialSummary",
    "anomaly_labels_for_split", "cosine_similarity", "cross_gram",
    "cross_structure_edge_fraction", "decide", "distance_matrix",
    "error_rate", "eval_kernel", "fit", "fit_anomaly", "gen_clusters",
    "gen_line_circle", "gen_linear_subspace", "gram", "kernel_from_config",
    "kernel_space_kmeans", "kernel_to_config", "kmeans",
    "knn_graph", "knn_pvalue_baseline", "knn_pvalues", "load_csv",
    "load_model", "mean_roc", "median_bandwidth", "nuclear_norm",
    "objective", "offblock_bound", "perturbation_check", "project_test",
    "prox_gradient_solve", "prox_nuclear", "roc", "run_trials",
    "sample_clusters_nominal", "save_model", "score", "score_batch",
    "similarity_kmeans", "spectral_cluster", "spectral_objective",
    "split_ionosphere", "structural_distance", "structured_similarity",
    "write_edge_list",
]
