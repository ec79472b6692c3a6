"""Rank p-value anomaly detection on top of the low-rank representation.

Each reference point i carries a score G_i = wbar_i * exp(-r_i), combining
how strongly it couples to the rest of the reference set (mean absolute
cosine of representations, self excluded) with how well the model
reconstructs it (feature-space residual r_i). A test point is scored the
same way against the reference set and its p-value is the fraction of
reference scores strictly below its own; nominal points then get
approximately uniform p-values and anomalies small ones.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .data import Dataset
from .kernels import KernelSpec, cross_gram, eval_kernel, gram
from .lowrank import DEFAULT_LAMBDA, KlrrModel, LambdaRule, fit, project_test
from .similarity import ZERO_COLUMN_REL, cosine_similarity
from .util import InputError


@dataclass(eq=False)
class AnomalyModel:
    klrr: KlrrModel
    kernel: KernelSpec
    train_columns: np.ndarray
    reference_z: np.ndarray
    reference_residuals: np.ndarray
    reference_weights: np.ndarray
    reference_scores: np.ndarray
    reference_indices: np.ndarray
    mode: str
    seed: int | None = None

    @property
    def n_reference(self) -> int:
        return self.reference_scores.shape[0]


def _mean_abs_cosine(ref_z: np.ndarray, exclude_self: bool) -> np.ndarray:
    """Mean |cos| of each column against the others (or all, for test points)."""
    norms = np.linalg.norm(ref_z, axis=0)
    scale = float(norms.max()) if norms.size else 0.0
    zero = norms <= ZERO_COLUMN_REL * scale if scale > 0.0 else np.ones_like(norms, bool)
    zn = ref_z / np.where(zero, 1.0, norms)
    zn[:, zero] = 0.0
    c = np.abs(zn.T @ zn)
    m = c.shape[0]
    if exclude_self:
        if m < 2:
            raise InputError("reference set needs at least two points")
        return (c.sum(axis=1) - np.diag(c)) / (m - 1)
    return c.mean(axis=1)


def fit_anomaly(dataset: Dataset, kernel: KernelSpec,
                lam: LambdaRule | float = DEFAULT_LAMBDA, mode: str = "full",
                seed: int | None = None) -> AnomalyModel:
    """Fit the detector on nominal data.

    full mode fits the representation on every point and scores each one
    in-sample (residual of the point's own coefficient column). split mode
    fits on a seeded uniform half (floor(n/2) points) and builds the
    reference scores from the held-out half through the test projection, the
    variant whose p-values have the exchangeability guarantee.
    """
    x = dataset.X
    n = dataset.n
    if mode not in ("full", "split"):
        raise InputError(f"mode must be full|split, got {mode!r}")
    if mode == "split":
        if seed is None:
            raise InputError("split mode needs a seed")
        if n < 4:
            raise InputError("split mode needs at least four points")
        rng = np.random.default_rng(seed)
        perm = rng.permutation(n)
        half = n // 2
        s1 = np.sort(perm[:half])
        s2 = np.sort(perm[half:])
        train = x[:, s1]
        model = fit(gram(kernel, train), lam)
        kc = cross_gram(kernel, train, x[:, s2])
        zs, rs = [], []
        for j in range(s2.size):
            tr = project_test(model, kc[:, j], eval_kernel(kernel, x[:, s2[j]], x[:, s2[j]]))
            zs.append(tr.z)
            rs.append(tr.residual)
        ref_z = np.stack(zs, axis=1)
        residuals = np.asarray(rs)
        ref_idx = s2
    else:
        train = x
        model = fit(gram(kernel, train), lam)
        ref_z = model.z.copy()
        resid = np.eye(n) - model.z
        r2 = np.einsum("ij,ji->i", resid, model.gram.values @ resid)
        residuals = np.sqrt(np.clip(r2, 0.0, None))
        ref_idx = np.arange(n)

    weights = _mean_abs_cosine(ref_z, exclude_self=True)
    scores = weights * np.exp(-residuals)
    return AnomalyModel(klrr=model, kernel=kernel, train_columns=train,
                        reference_z=ref_z, reference_residuals=residuals,
                        reference_weights=weights, reference_scores=scores,
                        reference_indices=ref_idx, mode=mode, seed=seed)


@dataclass(frozen=True)
class ScoreReport:
    p: float
    score: float
    residual: float
    weight: float
    z: np.ndarray


def score(model: AnomalyModel, x_t: np.ndarray) -> ScoreReport:
    """Score one test point: p = fraction of reference scores strictly below."""
    x_t = np.asarray(x_t, dtype=float).ravel()
    if x_t.shape[0] != model.train_columns.shape[0]:
        raise InputError(
            f"test point has dimension {x_t.shape[0]}, data has {model.train_columns.shape[0]}")
    kc = cross_gram(model.kernel, model.train_columns, x_t[:, None])[:, 0]
    return _score_from_cross(model, kc, eval_kernel(model.kernel, x_t, x_t))


def _score_from_cross(model: AnomalyModel, k_cross: np.ndarray, k_self: float) -> ScoreReport:
    tr = project_test(model.klrr, k_cross, k_self)
    z = tr.z
    nz = float(np.linalg.norm(z))
    ref_norms = np.linalg.norm(model.reference_z, axis=0)
    scale = float(ref_norms.max()) if ref_norms.size else 0.0
    if nz <= ZERO_COLUMN_REL * max(scale, 1e-300):
        weight = 0.0
    else:
        zero = ref_norms <= ZERO_COLUMN_REL * scale if scale > 0.0 else np.ones_like(ref_norms, bool)
        zn = model.reference_z / np.where(zero, 1.0, ref_norms)
        zn[:, zero] = 0.0
        weight = float(np.mean(np.abs(zn.T @ (z / nz))))
    g = weight * float(np.exp(-tr.residual))
    p = float(np.mean(model.reference_scores < g))
    return ScoreReport(p=p, score=g, residual=tr.residual, weight=weight, z=z)


def score_batch(model: AnomalyModel, test: Dataset | np.ndarray) -> list[ScoreReport]:
    """Score many points with one cross-kernel pass; per-point math unchanged."""
    x = np.asarray(getattr(test, "X", test), dtype=float)
    kc = cross_gram(model.kernel, model.train_columns, x)
    out = []
    for j in range(x.shape[1]):
        ks = eval_kernel(model.kernel, x[:, j], x[:, j])
        out.append(_score_from_cross(model, kc[:, j], ks))
    return out


def decide(p: float, alpha: float, literal_rule: bool = False) -> bool:
    """Flag a point as anomalous.

    Default rule: anomalous iff p <= alpha (small p means few reference
    points score worse). ``literal_rule`` flips the comparison to p > alpha.
    """
    if not (0.0 < alpha < 1.0):
        raise InputError(f"alpha must lie in (0, 1), got {alpha}")
    if not (0.0 <= p <= 1.0):
        raise InputError(f"p must lie in [0, 1], got {p}")
    return p > alpha if literal_rule else p <= alpha


def _kth_smallest(d: np.ndarray, k: int) -> float:
    return float(np.partition(d, k - 1)[k - 1])


def knn_pvalue_baseline(train, x_t: np.ndarray, n_neighbors: int) -> float:
    """Rank p-value from K-th nearest neighbor distances on raw observations.

    Each training point is scored by its K-th nearest distance to the other
    training points; the test point by its K-th nearest distance to the
    training set. Larger distance is worse; p is the fraction of training
    points scoring strictly worse than the test point.
    """
    x = np.asarray(getattr(train, "X", train), dtype=float)
    n = x.shape[1]
    if not (1 <= n_neighbors <= n - 1):
        raise InputError(f"need 1 <= n_neighbors <= n-1, got {n_neighbors}, n={n}")
    x_t = np.asarray(x_t, dtype=float).ravel()
    if x_t.shape[0] != x.shape[0]:
        raise InputError("test point dimension mismatch")
    ref = _knn_reference_distances(x, n_neighbors)
    dt = np.linalg.norm(x - x_t[:, None], axis=0)
    d_test = _kth_smallest(dt, n_neighbors)
    return float(np.mean(ref > d_test))


def _knn_reference_distances(x: np.ndarray, k: int) -> np.ndarray:
    sq = np.sum(x * x, axis=0)
    d2 = sq[:, None] + sq[None, :] - 2.0 * (x.T @ x)
    np.clip(d2, 0.0, None, out=d2)
    d = np.sqrt(d2)
    np.fill_diagonal(d, np.inf)
    return np.array([_kth_smallest(d[i], k) for i in range(x.shape[1])])


def knn_pvalues(train, test, n_neighbors: int) -> np.ndarray:
    """Baseline p-values for a whole test set, sharing the reference pass."""
    x = np.asarray(getattr(train, "X", train), dtype=float)
    t = np.asarray(getattr(test, "X", test), dtype=float)
    n = x.shape[1]
    if not (1 <= n_neighbors <= n - 1):
        raise InputError(f"need 1 <= n_neighbors <= n-1, got {n_neighbors}, n={n}")
    ref = _knn_reference_distances(x, n_neighbors)
    out = np.empty(t.shape[1])
    for j in range(t.shape[1]):
        dt = np.linalg.norm(x - t[:, j][:, None], axis=0)
        out[j] = np.mean(ref > _kth_smallest(dt, n_neighbors))
    return out


@dataclass(frozen=True)
class RocCurve:
    fpr: np.ndarray
    tpr: np.ndarray
    auc: float


def roc(p_nominal, p_anomalous) -> RocCurve:
    """Operating curve of the rule 'flag when p <= threshold'.

    Thresholds sweep every distinct p-value; endpoints (0,0) and (1,1) are
    always present; the area is the trapezoidal integral.
    """
    p_nom = np.asarray(p_nominal, dtype=float)
    p_ano = np.asarray(p_anomalous, dtype=float)
    if p_nom.size == 0 or p_ano.size == 0:
        raise InputError("roc needs nonempty nominal and anomalous score sets")
    fprs, tprs = [0.0], [0.0]
    for thr in np.unique(np.concatenate([p_nom, p_ano])):
        fprs.append(float(np.mean(p_nom <= thr)))
        tprs.append(float(np.mean(p_ano <= thr)))
    if fprs[-1] != 1.0 or tprs[-1] != 1.0:
        fprs.append(1.0)
        tprs.append(1.0)
    fpr = np.asarray(fprs)
    tpr = np.asarray(tprs)
    return RocCurve(fpr=fpr, tpr=tpr, auc=float(np.trapezoid(tpr, fpr)))


def mean_roc(curves: list[RocCurve], grid_points: int = 101) -> RocCurve:
    """Average curves on a fixed FPR grid (upper step envelope, interpolated).

    The reported area is the trapezoidal area of the averaged curve; the
    usual summary statistic (mean of per-curve areas) is a separate number.
    """
    if not curves:
        raise InputError("mean_roc needs at least one curve")
    grid = np.linspace(0.0, 1.0, grid_points)
    acc = np.zeros_like(grid)
    for c in curves:
        # collapse duplicate fpr values to their largest tpr
        best = {}
        for f, t in zip(c.fpr.tolist(), c.tpr.tolist()):
            best[f] = max(best.get(f, 0.0), t)
        xs = np.asarray(sorted(best))
        ys = np.asarray([best[v] for v in xs])
        acc += np.interp(grid, xs, ys)
    tpr = acc / len(curves)
    return RocCurve(fpr=grid, tpr=tpr, auc=float(np.trapezoid(tpr, grid)))
