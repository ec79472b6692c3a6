"""Closed-form low-rank self-representation in kernel feature space.

The model solves

    min_Z  0.5 * ||phi(X) - phi(X) Z||_F^2  +  lam * ||Z||_*

through a single symmetric eigendecomposition of the Gram matrix K: with
K = U diag(sigma) U^T, the minimizer is Z = U diag(d) U^T where
d_i = 1 - lam / sigma_i when sigma_i > lam and 0 otherwise. Everything the
model exposes (objective, projection of held-out points, entry bounds) is
computed from K alone; the feature map never appears.

A plain proximal-gradient solver over the same objective is included as an
independent cross-check and for timing comparisons. It is not the primary
path.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

from .kernels import GramMatrix, KernelSpec, kernel_from_config, kernel_to_config
from .util import InputError, check_finite

EIG_CLAMP_REL = 1e-10
PINV_RCOND = 1e-10
# r2 below this fraction of its constituent terms is rounding noise, not
# signal: the residual is a difference of O(k_self) quantities
RESIDUAL_NOISE_REL = 1e-12


@dataclass(frozen=True)
class LambdaRule:
    """Regularization weight, absolute or relative to the largest eigenvalue."""

    kind: str
    value: float

    def __post_init__(self):
        if self.kind not in ("absolute", "relative"):
            raise InputError(f"lambda rule kind must be absolute|relative, got {self.kind!r}")
        if not (float(self.value) >= 0.0):
            raise InputError(f"lambda value must be >= 0, got {self.value}")
        object.__setattr__(self, "value", float(self.value))

    def resolve(self, sigma_max: float) -> float:
        if self.kind == "absolute":
            return self.value
        return self.value * sigma_max


DEFAULT_LAMBDA = LambdaRule("relative", 0.1)


@dataclass(frozen=True)
class Spectrum:
    """Eigendecomposition of the Gram matrix plus the thresholded weights.

    ``values`` are clamped eigenvalues in nonincreasing order, ``vectors``
    the matching orthonormal columns, ``retained`` the shrunk weights d.
    """

    values: np.ndarray
    vectors: np.ndarray
    lam: float
    retained: np.ndarray

    def __post_init__(self):
        v = np.asarray(self.values, dtype=float)
        if np.any(v < 0.0):
            raise InputError("spectrum has a negative eigenvalue after clamping")
        if np.any(np.diff(v) > 0.0):
            raise InputError("spectrum eigenvalues are not sorted nonincreasing")
        d_expect = _threshold(v, self.lam)
        if not np.array_equal(np.asarray(self.retained, dtype=float), d_expect):
            raise InputError("retained weights do not match the threshold rule")
        u = np.asarray(self.vectors, dtype=float)
        gap = np.max(np.abs(u.T @ u - np.eye(u.shape[1]))) if u.size else 0.0
        if gap > 1e-8:
            raise InputError(f"eigenvectors are not orthonormal (max deviation {gap:.2e})")

    @property
    def rank(self) -> int:
        return int(np.count_nonzero(self.retained))


def _threshold(sigma: np.ndarray, lam: float) -> np.ndarray:
    keep = sigma > lam
    safe = np.where(keep, sigma, 1.0)
    return np.where(keep, 1.0 - lam / safe, 0.0)


@dataclass(eq=False)
class KlrrModel:
    """Fitted representation: spectrum, coefficient matrix and provenance."""

    spectrum: Spectrum
    z: np.ndarray
    gram: GramMatrix
    _proj: np.ndarray | None = field(default=None, repr=False)

    @property
    def lam(self) -> float:
        return self.spectrum.lam

    @property
    def rank(self) -> int:
        return self.spectrum.rank

    @property
    def n(self) -> int:
        return self.z.shape[0]

    @property
    def kernel(self) -> KernelSpec | None:
        return self.gram.kernel


def fit(gram_matrix: GramMatrix, lam: LambdaRule | float = DEFAULT_LAMBDA) -> KlrrModel:
    """Fit the representation by spectral soft-thresholding.

    Eigenvalues below 1e-10 times the largest (including negative round-off)
    are clamped to zero before thresholding. ``lam`` may be a rule or a plain
    nonnegative number (treated as absolute).

    Raises
    ------
    InputError
        If the Gram matrix is invalid or lam is negative.
    """
    if not isinstance(gram_matrix, GramMatrix):
        gram_matrix = GramMatrix.from_matrix(np.asarray(gram_matrix, dtype=float))
    rule = lam if isinstance(lam, LambdaRule) else LambdaRule("absolute", lam)

    w, u = np.linalg.eigh(gram_matrix.values)
    w = w[::-1].copy()
    u = u[:, ::-1].copy()
    smax = float(w[0]) if w.size else 0.0
    w[w < EIG_CLAMP_REL * max(smax, 0.0)] = 0.0

    lam_val = rule.resolve(smax)
    d = _threshold(w, lam_val)
    z = (u * d) @ u.T
    z = 0.5 * (z + z.T)
    spec = Spectrum(values=w, vectors=u, lam=lam_val, retained=d)
    return KlrrModel(spectrum=spec, z=z, gram=gram_matrix)


def nuclear_norm(m: np.ndarray) -> float:
    return float(np.sum(np.linalg.svd(m, compute_uv=False)))


def objective(model: KlrrModel, z_any: np.ndarray) -> float:
    """Evaluate 0.5 tr((I-Z)^T K (I-Z)) + lam ||Z||_* at an arbitrary Z.

    Kernel-only evaluation; uses the model's Gram matrix and lam.
    """
    z_any = np.asarray(z_any, dtype=float)
    if z_any.shape != model.z.shape:
        raise InputError(f"objective argument shape {z_any.shape} != {model.z.shape}")
    k = model.gram.values
    resid = np.eye(model.n) - z_any
    quad = float(np.sum(resid * (k @ resid)))
    return 0.5 * quad + model.lam * nuclear_norm(z_any)


def spectral_objective(model: KlrrModel) -> float:
    """Closed-form objective value 0.5 sum sigma_i (1 - d_i)^2 + lam sum d_i.

    Independent of the assembled Z; used as a cross-check against
    :func:`objective`.
    """
    s = model.spectrum.values
    d = model.spectrum.retained
    return float(0.5 * np.sum(s * (1.0 - d) ** 2) + model.lam * np.sum(d))


@dataclass(frozen=True)
class TestRepresentation:
    """Representation of a held-out point plus its reconstruction residual."""

    z: np.ndarray
    residual: float
    empty_model: bool = False


def _projection_operator(model: KlrrModel) -> np.ndarray:
    # Maps a cross-kernel vector to the test representation:
    # z_test = Z (Z^T K Z)^+ Z^T k_cross, pseudo-inverse with relative cutoff.
    if model._proj is None:
        z, k = model.z, model.gram.values
        inner = z.T @ k @ z
        model._proj = z @ np.linalg.pinv(inner, rcond=PINV_RCOND, hermitian=True) @ z.T
    return model._proj


def project_test(model: KlrrModel, k_cross: np.ndarray, k_self: float) -> TestRepresentation:
    """Represent a held-out point against the fitted model.

    Parameters
    ----------
    k_cross : (n,) kernel evaluations between the training points and the
        test point.
    k_self : kernel evaluation of the test point with itself.

    Returns the coefficient vector and the feature-space reconstruction
    residual sqrt(max(0, k_self - 2 z.k_cross + z.K z)). Residual mass below
    the rounding noise of those three terms reports as exactly zero. A
    rank-zero model yields z = 0, residual sqrt(k_self), and the
    ``empty_model`` flag.
    """
    k_cross = np.asarray(k_cross, dtype=float).ravel()
    if k_cross.shape != (model.n,):
        raise InputError(f"k_cross has shape {k_cross.shape}, expected ({model.n},)")
    check_finite(k_cross, "k_cross")
    k_self = float(k_self)
    if not np.isfinite(k_self):
        raise InputError("k_self is not finite")

    if model.rank == 0:
        return TestRepresentation(z=np.zeros(model.n),
                                  residual=float(np.sqrt(max(0.0, k_self))),
                                  empty_model=True)
    z = _projection_operator(model) @ k_cross
    quad = float(z @ (model.gram.values @ z))
    lin = float(z @ k_cross)
    r2 = k_self - 2.0 * lin + quad
    if r2 <= RESIDUAL_NOISE_REL * (abs(k_self) + 2.0 * abs(lin) + abs(quad)):
        r2 = 0.0
    return TestRepresentation(z=z, residual=float(np.sqrt(max(0.0, r2))))


def offblock_bound(model: KlrrModel) -> float:
    """Bound on any coefficient linking points of independent structures.

    For data on independent subspaces, every cross-structure entry of Z is at
    most lam * sqrt(sum over retained modes of 1/sigma_i^2).
    """
    s = model.spectrum.values
    kept = s > model.lam
    if not np.any(kept):
        return 0.0
    return float(model.lam * np.sqrt(np.sum(1.0 / s[kept] ** 2)))


@dataclass(frozen=True)
class PerturbationReport:
    lhs: float
    rhs: float
    holds: bool
    sigma_r: float
    sigma_e: float


def perturbation_check(gram_matrix: GramMatrix, e: np.ndarray, lam: float,
                       partition: np.ndarray, atol: float = 1e-9) -> PerturbationReport:
    """Check the off-block mass of a perturbed fit against its stability bound.

    Fits on K + E with absolute weight ``lam``, measures the Frobenius norm of
    the entries linking different partition groups (lhs), and compares against
    4 sqrt(2) ||E||_F / (sigma_r - sigma_e), where sigma_r is the smallest
    nonzero eigenvalue of the clean K and sigma_e the largest singular value
    of E. ``atol`` absorbs floating-point mass when both sides are near zero.

    Raises
    ------
    InputError
        If E is not symmetric, shapes disagree, or sigma_e >= sigma_r.
    """
    e = np.asarray(e, dtype=float)
    if e.shape != gram_matrix.values.shape:
        raise InputError(f"perturbation shape {e.shape} != {gram_matrix.values.shape}")
    if float(np.max(np.abs(e - e.T))) > 1e-10 * max(1.0, float(np.max(np.abs(e))) if e.size else 1.0):
        raise InputError("perturbation matrix must be symmetric")
    partition = np.asarray(partition)
    if partition.shape != (gram_matrix.n,):
        raise InputError("partition must assign one group per point")

    w = np.linalg.eigvalsh(gram_matrix.values)[::-1].copy()
    smax = float(w[0]) if w.size else 0.0
    w[w < EIG_CLAMP_REL * max(smax, 0.0)] = 0.0
    nonzero = w[w > 0.0]
    if nonzero.size == 0:
        raise InputError("clean gram matrix has rank zero")
    sigma_r = float(nonzero[-1])
    sigma_e = float(np.max(np.abs(np.linalg.eigvalsh(e)))) if e.size else 0.0
    if sigma_e >= sigma_r:
        raise InputError(
            f"perturbation too large: sigma_e={sigma_e:.3e} >= sigma_r={sigma_r:.3e}")

    perturbed = GramMatrix.from_matrix(gram_matrix.values + e)
    model = fit(perturbed, LambdaRule("absolute", lam))
    cross = partition[:, None] != partition[None, :]
    lhs = float(np.sqrt(np.sum(model.z[cross] ** 2)))
    rhs = float(4.0 * np.sqrt(2.0) * np.linalg.norm(e) / (sigma_r - sigma_e))
    return PerturbationReport(lhs=lhs, rhs=rhs, holds=bool(lhs <= rhs + atol),
                              sigma_r=sigma_r, sigma_e=sigma_e)


def prox_nuclear(m: np.ndarray, alpha: float):
    """Singular value shrinkage; returns the prox point and its singular values."""
    u, s, vt = np.linalg.svd(m, full_matrices=False)
    ss = np.maximum(0.0, s - alpha)
    return u @ (ss[:, None] * vt), ss


def prox_gradient_solve(gram_matrix: GramMatrix, lam: float, max_iter: int = 5000,
                        tol: float = 1e-12) -> np.ndarray:
    """Independent iterative solver for the same objective.

    Plain proximal gradient with step 1/sigma_max from Z = 0, stopping early
    only when the objective change falls below ``tol`` relative (the iterate
    is then stationary at working precision; the cap stays at ``max_iter``).
    """
    k = gram_matrix.values if isinstance(gram_matrix, GramMatrix) else np.asarray(gram_matrix)
    n = k.shape[0]
    smax = float(np.linalg.eigvalsh(k)[-1])
    if smax <= 0.0:
        return np.zeros((n, n))
    step = 1.0 / smax
    eye = np.eye(n)
    z = np.zeros((n, n))
    prev = np.inf
    for _ in range(max_iter):
        z, ss = prox_nuclear(z - step * (k @ z - k), step * lam)
        resid = eye - z
        obj = 0.5 * float(np.sum(resid * (k @ resid))) + lam * float(ss.sum())
        if abs(prev - obj) <= tol * (1.0 + abs(obj)):
            break
        prev = obj
    return z


MODEL_FORMAT = "klrr-model"
MODEL_VERSION = 1


def save_model(model: KlrrModel, path: str) -> None:
    """Write the model as versioned JSON.

    Floats are stored at full repr precision so the load-time invariant
    checks see exactly what was fitted; the 9-digit display rule applies to
    reports, not to this file.
    """
    doc = {
        "format": MODEL_FORMAT,
        "version": MODEL_VERSION,
        "kernel": None if model.kernel is None else kernel_to_config(model.kernel),
        "lambda": model.lam,
        "eigenvalues": model.spectrum.values.tolist(),
        "eigenvectors": model.spectrum.vectors.tolist(),
        "fingerprint": model.gram.fingerprint,
    }
    with open(path, "w") as fh:
        json.dump(doc, fh)
        fh.write("\n")


def load_model(path: str) -> KlrrModel:
    """Load a model file, verifying format and spectral invariants.

    The Gram matrix is reconstructed from the stored spectrum (clamped modes
    included), which is what every downstream computation consumes.
    """
    with open(path) as fh:
        try:
            doc = json.load(fh)
        except json.JSONDecodeError as exc:
            raise InputError(f"{path}: not valid JSON ({exc})") from None
    if doc.get("format") != MODEL_FORMAT:
        raise InputError(f"{path}: not a model file")
    if doc.get("version") != MODEL_VERSION:
        raise InputError(f"{path}: unsupported model version {doc.get('version')!r}")
    w = np.asarray(doc["eigenvalues"], dtype=float)
    u = np.asarray(doc["eigenvectors"], dtype=float)
    lam = float(doc["lambda"])
    d = _threshold(w, lam)
    spec = Spectrum(values=w, vectors=u, lam=lam, retained=d)
    k = (u * w) @ u.T
    g = GramMatrix(values=0.5 * (k + k.T),
                   kernel=None if doc["kernel"] is None else kernel_from_config(doc["kernel"]),
                   fingerprint=doc["fingerprint"])
    z = (u * d) @ u.T
    z = 0.5 * (z + z.T)
    return KlrrModel(spectrum=spec, z=z, gram=g)
