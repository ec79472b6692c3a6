"""Lloyd-style clustering in observation, kernel and similarity spaces.

All variants share one engine: random-assignment initialization from a
seeded generator, assignment updates with ties broken toward the lower
cluster index, empty clusters repaired by carving out the point farthest
from its own centroid, and a hard iteration cap so degenerate inputs still
terminate. Identical seeds therefore walk identical trajectories whenever
the distance computations agree, which makes the linear-kernel variant
reproduce raw k-means exactly.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field

import numpy as np

from .data import Dataset
from .kernels import GramMatrix, KernelSpec, gram
from .lowrank import DEFAULT_LAMBDA, LambdaRule, fit
from .similarity import SimilarityMatrix, cosine_similarity, structured_similarity
from .util import InputError

MAX_ITER = 300


@dataclass
class ClusterResult:
    assignments: np.ndarray
    n_iter: int
    converged: bool
    error: float | None = None
    flags: tuple = ()


@dataclass
class TrialSummary:
    dataset: str
    representation: str
    algorithm: str
    k: int
    trials: int
    mean_error: float
    std_error: float
    errors: np.ndarray = field(repr=False, default=None)


def _lloyd(dist_fn, sizes_of, n: int, k: int, seed: int, max_iter: int) -> ClusterResult:
    # dist_fn(assign) -> (n, k) squared distances to each cluster's centroid,
    # +inf columns for empty clusters.
    rng = np.random.default_rng(seed)
    assign = rng.integers(0, k, n)
    converged = False
    it = 0
    for it in range(1, max_iter + 1):
        d = dist_fn(assign)
        repaired = False
        sizes = sizes_of(assign)
        for c in range(k):
            if sizes[c] == 0:
                own = d[np.arange(n), assign]
                movable = sizes[assign] > 1
                own = np.where(movable, own, -np.inf)
                pick = int(np.argmax(own))
                assign = assign.copy()
                assign[pick] = c
                sizes = sizes_of(assign)
                d = dist_fn(assign)
                repaired = True
        new = np.argmin(d, axis=1)
        if not repaired and np.array_equal(new, assign):
            converged = True
            break
        assign = new
    return ClusterResult(assignments=assign.astype(int), n_iter=it, converged=converged)


def _sizes(assign: np.ndarray, k: int) -> np.ndarray:
    return np.bincount(assign, minlength=k)


def kmeans(points: np.ndarray, k: int, seed: int, max_iter: int = MAX_ITER) -> ClusterResult:
    """Plain k-means on row vectors (n, m)."""
    pts = np.asarray(points, dtype=float)
    if pts.ndim != 2:
        raise InputError(f"points must be 2-D (n, m), got ndim={pts.ndim}")
    n = pts.shape[0]
    if not (1 <= k <= n):
        raise InputError(f"need 1 <= k <= n, got k={k}, n={n}")

    def dist(assign):
        d = np.full((n, k), np.inf)
        for c in range(k):
            members = assign == c
            if not members.any():
                continue
            centroid = pts[members].mean(axis=0)
            diff = pts - centroid
            d[:, c] = np.sum(diff * diff, axis=1)
        return d

    return _lloyd(dist, lambda a: _sizes(a, k), n, k, seed, max_iter)


def kernel_space_kmeans(gram_matrix, k: int, seed: int,
                        max_iter: int = MAX_ITER) -> ClusterResult:
    """k-means in the kernel's feature space, using Gram entries only.

    Squared distance of point i to the centroid of cluster C expands as
    K_ii - 2 mean_{j in C} K_ij + mean_{j,l in C} K_jl.
    """
    km = gram_matrix.values if isinstance(gram_matrix, GramMatrix) else np.asarray(gram_matrix, dtype=float)
    n = km.shape[0]
    if not (1 <= k <= n):
        raise InputError(f"need 1 <= k <= n, got k={k}, n={n}")
    diag = np.diag(km)

    def dist(assign):
        d = np.full((n, k), np.inf)
        for c in range(k):
            members = assign == c
            m = int(members.sum())
            if m == 0:
                continue
            cross = km[:, members].mean(axis=1)
            within = float(km[np.ix_(members, members)].sum()) / (m * m)
            d[:, c] = diag - 2.0 * cross + within
        return d

    return _lloyd(dist, lambda a: _sizes(a, k), n, k, seed, max_iter)


def similarity_kmeans(sim, k: int, seed: int, max_iter: int = MAX_ITER) -> ClusterResult:
    """k-means on the rows of a similarity matrix."""
    v = sim.values if isinstance(sim, SimilarityMatrix) else np.asarray(sim, dtype=float)
    return kmeans(v, k, seed, max_iter)


def spectral_cluster(affinity, k: int, seed: int, max_iter: int = MAX_ITER) -> ClusterResult:
    """Normalized spectral clustering on an affinity matrix.

    Takes absolute entries, zeroes the diagonal, symmetrically normalizes by
    degree (zero-degree nodes get unit degree and a flag), embeds into the
    top-k eigenvectors with rows scaled to unit length, and runs the shared
    k-means engine on the embedding.
    """
    if isinstance(affinity, (SimilarityMatrix, GramMatrix)):
        a = affinity.values
    else:
        a = np.asarray(affinity, dtype=float)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise InputError(f"affinity must be square, got {a.shape}")
    n = a.shape[0]
    if not (1 <= k <= n):
        raise InputError(f"need 1 <= k <= n, got k={k}, n={n}")
    a = np.abs(a)
    a = 0.5 * (a + a.T)
    np.fill_diagonal(a, 0.0)
    deg = a.sum(axis=1)
    isolated = deg <= 0.0
    flags = ()
    if isolated.any():
        flags = (f"isolated nodes treated with unit degree: {np.flatnonzero(isolated).tolist()}",)
    root = np.sqrt(np.where(isolated, 1.0, deg))
    m = a / root[:, None] / root[None, :]
    m = 0.5 * (m + m.T)
    w, v = np.linalg.eigh(m)
    emb = v[:, ::-1][:, :k]
    norms = np.linalg.norm(emb, axis=1)
    emb = emb / np.where(norms > 0.0, norms, 1.0)[:, None]
    res = kmeans(emb, k, seed, max_iter)
    res.flags = flags
    return res


def error_rate(assignments, labels, force: str | None = None) -> float:
    """Clustering error under the best cluster-to-class matching.

    Exhaustive matching for at most 8 clusters/classes, assignment
    optimization beyond that; ``force`` pins one path for cross-checks.
    """
    assignments = np.asarray(assignments)
    labels = np.asarray(labels)
    if assignments.shape != labels.shape or assignments.ndim != 1:
        raise InputError("assignments and labels must be equal-length vectors")
    n = assignments.size
    if n == 0:
        raise InputError("empty assignment vector")
    _, ai = np.unique(assignments, return_inverse=True)
    _, li = np.unique(labels, return_inverse=True)
    nc = int(ai.max()) + 1
    nl = int(li.max()) + 1
    conf = np.zeros((nc, nl), dtype=int)
    np.add.at(conf, (ai, li), 1)

    method = force or ("exhaustive" if max(nc, nl) <= 8 else "hungarian")
    if method == "exhaustive":
        rows, cols = conf.shape
        transposed = rows > cols
        c = conf.T if transposed else conf
        best = 0
        for perm in itertools.permutations(range(c.shape[1]), c.shape[0]):
            best = max(best, int(sum(c[i, p] for i, p in enumerate(perm))))
    elif method == "hungarian":
        from scipy.optimize import linear_sum_assignment

        ri, ci = linear_sum_assignment(-conf)
        best = int(conf[ri, ci].sum())
    else:
        raise InputError(f"unknown matching method {method!r}")
    return 1.0 - best / n


REPRESENTATIONS = ("observation", "kernel", "cosine", "structured")
ALGORITHMS = ("kmeans", "spectral")


def run_trials(dataset: Dataset, representation: str, algorithm: str, k: int,
               n_trials: int, base_seed: int, kernel: KernelSpec | None = None,
               lam: LambdaRule | float = DEFAULT_LAMBDA,
               bandwidth: float | None = None) -> TrialSummary:
    """Repeat a clustering setup over seeds base_seed .. base_seed+n_trials-1.

    The representation (Gram matrix, cosine or structured similarity) is
    deterministic and computed once; only the clustering seed varies. The
    standard deviation is the population one, so a single trial reports 0.
    """
    if dataset.labels is None:
        raise InputError("run_trials needs labeled data to report error rates")
    if representation not in REPRESENTATIONS:
        raise InputError(f"unknown representation {representation!r}")
    if algorithm not in ALGORITHMS:
        raise InputError(f"unknown algorithm {algorithm!r}")
    if n_trials < 1:
        raise InputError("n_trials must be >= 1")

    needs_kernel = representation != "observation"
    if needs_kernel and kernel is None:
        raise InputError(f"representation {representation!r} needs a kernel")
    if representation == "observation" and algorithm == "spectral":
        raise InputError("spectral clustering needs an affinity; pick a kernel-based representation")

    if representation == "observation":
        target = dataset.X.T

        def run(seed):
            return kmeans(target, k, seed)
    elif representation == "kernel":
        g = gram(kernel, dataset)
        if algorithm == "kmeans":
            def run(seed):
                return kernel_space_kmeans(g, k, seed)
        else:
            def run(seed):
                return spectral_cluster(g, k, seed)
    else:
        g = gram(kernel, dataset)
        model = fit(g, lam)
        if representation == "cosine":
            sim = cosine_similarity(model)
        else:
            sim = structured_similarity(model, dataset, bandwidth=bandwidth)
        if algorithm == "kmeans":
            def run(seed):
                return similarity_kmeans(sim, k, seed)
        else:
            def run(seed):
                return spectral_cluster(sim, k, seed)

    errors = np.empty(n_trials)
    for t in range(n_trials):
        res = run(base_seed + t)
        errors[t] = error_rate(res.assignments, dataset.labels)
    return TrialSummary(dataset=dataset.name, representation=representation,
                        algorithm=algorithm, k=k, trials=n_trials,
                        mean_error=float(errors.mean()),
                        std_error=float(errors.std()),
                        errors=errors)
