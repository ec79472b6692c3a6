"""Similarity matrices, structural distances and neighbor graphs.

Representation columns compare by cosine; the structured variant scales each
cosine by a Gaussian factor in observation space, which keeps the matrix
positive semidefinite (entrywise product of PSD matrices) and induces a
pseudometric d(i,j) = sqrt(s_ii + s_jj - 2 s_ij).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .kernels import median_bandwidth
from .lowrank import KlrrModel
from .util import InputError, fmt9

ZERO_COLUMN_REL = 1e-12


@dataclass(frozen=True)
class SimilarityMatrix:
    values: np.ndarray
    kind: str
    bandwidth: float | None = None

    def __post_init__(self):
        v = np.asarray(self.values, dtype=float)
        if v.ndim != 2 or v.shape[0] != v.shape[1]:
            raise InputError(f"similarity matrix must be square, got {v.shape}")
        object.__setattr__(self, "values", v)

    @property
    def n(self) -> int:
        return self.values.shape[0]


def cosine_similarity(model: KlrrModel, use_absolute: bool = False) -> SimilarityMatrix:
    """Cosine similarity between representation columns.

    Columns with (numerically) zero norm get all-zero rows and columns,
    including the diagonal; every other diagonal entry is exactly 1. Signed
    by default; ``use_absolute`` takes entrywise absolute values.
    """
    z = model.z
    norms = np.linalg.norm(z, axis=0)
    scale = float(norms.max()) if norms.size else 0.0
    zero = norms <= ZERO_COLUMN_REL * scale if scale > 0.0 else np.ones_like(norms, bool)
    safe = np.where(zero, 1.0, norms)
    zn = z / safe
    zn[:, zero] = 0.0
    w = zn.T @ zn
    w = 0.5 * (w + w.T)
    diag = np.where(zero, 0.0, 1.0)
    np.fill_diagonal(w, diag)
    if use_absolute:
        w = np.abs(w)
    return SimilarityMatrix(values=w, kind="cosine")


def structured_similarity(model: KlrrModel, data, bandwidth: float | None = None,
                          use_absolute: bool = False) -> SimilarityMatrix:
    """Cosine similarity damped by observation-space proximity.

    s_ij = w_ij * exp(-||x_i - x_j||^2 / (2 bandwidth^2)). The bandwidth
    defaults to the median pairwise distance of the data.
    """
    x = np.asarray(getattr(data, "X", data), dtype=float)
    if x.shape[1] != model.n:
        raise InputError(f"data has {x.shape[1]} points, model has {model.n}")
    if bandwidth is None:
        bandwidth = median_bandwidth(x)
    if not (bandwidth > 0.0):
        raise InputError(f"bandwidth must be positive, got {bandwidth}")
    w = cosine_similarity(model, use_absolute=use_absolute).values
    sq = np.sum(x * x, axis=0)
    d2 = sq[:, None] + sq[None, :] - 2.0 * (x.T @ x)
    np.clip(d2, 0.0, None, out=d2)
    np.fill_diagonal(d2, 0.0)
    s = w * np.exp(-d2 / (2.0 * bandwidth * bandwidth))
    s = 0.5 * (s + s.T)
    return SimilarityMatrix(values=s, kind="structured", bandwidth=float(bandwidth))


def structural_distance(sim: SimilarityMatrix, i: int, j: int) -> float:
    """Pseudometric between points induced by the similarity matrix."""
    n = sim.n
    if not (0 <= i < n and 0 <= j < n):
        raise InputError(f"indices ({i}, {j}) out of range for n={n}")
    v = sim.values
    return float(np.sqrt(max(0.0, v[i, i] + v[j, j] - 2.0 * v[i, j])))


def distance_matrix(sim: SimilarityMatrix) -> np.ndarray:
    """All pairwise structural distances at once."""
    v = sim.values
    diag = np.diag(v)
    d2 = diag[:, None] + diag[None, :] - 2.0 * v
    np.clip(d2, 0.0, None, out=d2)
    np.fill_diagonal(d2, 0.0)
    return np.sqrt(d2)


@dataclass(frozen=True)
class NeighborGraph:
    """Undirected weighted graph; edges sorted as (i, j, weight) with i < j."""

    n: int
    edges: tuple
    construction: str


def knn_graph(weights: np.ndarray, k: int, construction: str = "knn") -> NeighborGraph:
    """Mutual-proposal k-nearest graph under a weight matrix (larger = closer).

    Every node proposes its k largest-weight neighbors (self excluded, ties
    broken toward the lower index); the edge set is the union of proposals,
    so each node keeps degree >= k up to duplicate merging. Weights may be
    similarities or negative distances.
    """
    w = np.asarray(weights, dtype=float)
    if w.ndim != 2 or w.shape[0] != w.shape[1]:
        raise InputError(f"weight matrix must be square, got {w.shape}")
    n = w.shape[0]
    if not (1 <= k <= n - 1):
        raise InputError(f"need 1 <= k <= n-1, got k={k}, n={n}")
    edges = {}
    for i in range(n):
        order = np.argsort(-w[i], kind="stable")
        picked = 0
        for j in order:
            j = int(j)
            if j == i:
                continue
            key = (min(i, j), max(i, j))
            if key not in edges:
                edges[key] = float(w[key[0], key[1]])
            picked += 1
            if picked == k:
                break
    out = tuple((i, j, edges[(i, j)]) for i, j in sorted(edges))
    return NeighborGraph(n=n, edges=out, construction=construction)


def cross_structure_edge_fraction(graph: NeighborGraph, labels) -> float:
    """Fraction of edges whose endpoints carry different labels."""
    labels = np.asarray(labels)
    if labels.shape != (graph.n,):
        raise InputError(f"labels shape {labels.shape} does not match n={graph.n}")
    if not graph.edges:
        return 0.0
    cross = sum(1 for i, j, _ in graph.edges if labels[i] != labels[j])
    return cross / len(graph.edges)


def write_edge_list(graph: NeighborGraph, path: str) -> None:
    """One 'i j weight' line per edge, zero-based, 9 significant digits."""
    with open(path, "w") as fh:
        for i, j, w in graph.edges:
            fh.write(f"{i} {j} {fmt9(w)}\n")
