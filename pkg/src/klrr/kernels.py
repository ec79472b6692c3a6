"""Kernel specifications and Gram matrix construction.

Kernels are small frozen dataclasses combined into trees (products of
products are allowed up to a fixed nesting depth). All Gram assembly goes
through the same scalar evaluation path so that ``gram`` agrees with
``eval_kernel`` bit for bit, entry by entry.

Data convention: a data matrix holds one observation per column, shape
``(d, n)``.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Union

import numpy as np

from .util import InputError, check_finite, fingerprint_bytes

MAX_NESTING = 8


@dataclass(frozen=True)
class Linear:
    """Inner product kernel k(a, b) = a.b."""


@dataclass(frozen=True)
class RBF:
    """Gaussian kernel k(a, b) = exp(-||a-b||^2 / (2 bandwidth^2))."""

    bandwidth: float

    def __post_init__(self):
        if not (float(self.bandwidth) > 0.0):
            raise InputError(f"rbf bandwidth must be positive, got {self.bandwidth}")
        object.__setattr__(self, "bandwidth", float(self.bandwidth))


@dataclass(frozen=True)
class Polynomial:
    """Inhomogeneous polynomial kernel k(a, b) = (a.b + offset)^degree."""

    degree: int
    offset: float = 1.0

    def __post_init__(self):
        if int(self.degree) != self.degree or self.degree < 1:
            raise InputError(f"polynomial degree must be an integer >= 1, got {self.degree}")
        if self.offset < 0.0:
            raise InputError(f"polynomial offset must be >= 0, got {self.offset}")
        object.__setattr__(self, "degree", int(self.degree))
        object.__setattr__(self, "offset", float(self.offset))


@dataclass(frozen=True)
class Product:
    """Pointwise product of two kernels, k(a, b) = left(a, b) * right(a, b)."""

    left: "KernelSpec"
    right: "KernelSpec"

    def __post_init__(self):
        if nesting_depth(self) > MAX_NESTING:
            raise InputError(f"kernel nesting depth exceeds {MAX_NESTING}")


KernelSpec = Union[Linear, RBF, Polynomial, Product]


def nesting_depth(spec: KernelSpec) -> int:
    if isinstance(spec, Product):
        return 1 + max(nesting_depth(spec.left), nesting_depth(spec.right))
    return 1


def _pair_fn(spec: KernelSpec) -> Callable[[np.ndarray, np.ndarray], float]:
    """Compile a spec tree into a scalar pair function."""
    if isinstance(spec, Linear):
        return lambda a, b: float(np.dot(a, b))
    if isinstance(spec, RBF):
        denom = 2.0 * spec.bandwidth * spec.bandwidth

        def rbf(a, b, denom=denom):
            d = a - b
            return float(np.exp(-np.dot(d, d) / denom))

        return rbf
    if isinstance(spec, Polynomial):
        deg, off = spec.degree, spec.offset
        return lambda a, b: float((np.dot(a, b) + off) ** deg)
    if isinstance(spec, Product):
        lf, rf = _pair_fn(spec.left), _pair_fn(spec.right)
        return lambda a, b: lf(a, b) * rf(a, b)
    raise InputError(f"unknown kernel spec {spec!r}")


def eval_kernel(spec: KernelSpec, a: np.ndarray, b: np.ndarray) -> float:
    """Evaluate the kernel on a single pair of vectors.

    Raises
    ------
    InputError
        If the vectors have different lengths.
    """
    a = np.asarray(a, dtype=float).ravel()
    b = np.asarray(b, dtype=float).ravel()
    if a.shape != b.shape:
        raise InputError(f"kernel arguments disagree in dimension: {a.shape} vs {b.shape}")
    return _pair_fn(spec)(a, b)


def _columns(data) -> np.ndarray:
    """Accept a Dataset or a raw (d, n) array and return the column matrix."""
    x = getattr(data, "X", data)
    x = np.asarray(x, dtype=float)
    if x.ndim == 1:
        x = x[:, None]
    if x.ndim != 2:
        raise InputError(f"expected a (d, n) matrix, got ndim={x.ndim}")
    check_finite(x, "data matrix")
    return x


@dataclass(frozen=True)
class GramMatrix:
    """Symmetric kernel matrix with provenance.

    ``kernel`` is None for externally supplied matrices (tests, synthetic
    spectra); ``fingerprint`` hashes the source data, or the matrix itself
    when no source exists.
    """

    values: np.ndarray
    kernel: KernelSpec | None
    fingerprint: str

    def __post_init__(self):
        v = np.asarray(self.values, dtype=float)
        if v.ndim != 2 or v.shape[0] != v.shape[1]:
            raise InputError(f"gram matrix must be square, got shape {v.shape}")
        check_finite(v, "gram matrix")
        scale = max(1.0, float(np.max(np.abs(v))) if v.size else 1.0)
        if float(np.max(np.abs(v - v.T))) > 1e-10 * scale:
            raise InputError("gram matrix is not symmetric within tolerance")
        if v.size and float(np.min(np.diag(v))) < -1e-12 * scale:
            raise InputError("gram matrix has a negative diagonal entry")
        object.__setattr__(self, "values", v)

    @property
    def n(self) -> int:
        return self.values.shape[0]

    @classmethod
    def from_matrix(cls, values: np.ndarray, fingerprint: str | None = None) -> "GramMatrix":
        v = np.asarray(values, dtype=float)
        sym = 0.5 * (v + v.T)
        return cls(values=sym, kernel=None,
                   fingerprint=fingerprint or fingerprint_bytes(sym))


def gram(spec: KernelSpec, data) -> GramMatrix:
    """Build the full kernel matrix of a dataset.

    Entries are produced by the same scalar path as :func:`eval_kernel`;
    the upper triangle is mirrored (scalar evaluation is exactly symmetric)
    and the result is averaged with its transpose, which is a bitwise no-op
    on the mirrored assembly but keeps the symmetry contract explicit.
    """
    x = _columns(data)
    n = x.shape[1]
    rows = np.ascontiguousarray(x.T)
    fn = _pair_fn(spec)
    out = np.empty((n, n))
    for i in range(n):
        ri = rows[i]
        out[i, i] = fn(ri, ri)
        for j in range(i + 1, n):
            v = fn(ri, rows[j])
            out[i, j] = v
            out[j, i] = v
    out = 0.5 * (out + out.T)
    return GramMatrix(values=out, kernel=spec, fingerprint=fingerprint_bytes(x))


def cross_gram(spec: KernelSpec, data, test_data) -> np.ndarray:
    """Kernel evaluations between a dataset (columns) and test points (columns).

    Returns an (n, m) array with entry (i, j) = eval_kernel(spec, x_i, t_j).
    """
    x = _columns(data)
    t = _columns(test_data)
    if x.shape[0] != t.shape[0]:
        raise InputError(
            f"cross kernel dimension mismatch: {x.shape[0]} vs {t.shape[0]}")
    fn = _pair_fn(spec)
    xr = np.ascontiguousarray(x.T)
    tr = np.ascontiguousarray(t.T)
    out = np.empty((x.shape[1], t.shape[1]))
    for i in range(xr.shape[0]):
        ri = xr[i]
        for j in range(tr.shape[0]):
            out[i, j] = fn(ri, tr[j])
    return out


def median_bandwidth(data) -> float:
    """Median pairwise Euclidean distance over all i < j pairs.

    Raises
    ------
    InputError
        If fewer than two points are given or the median distance is zero
        (degenerate dataset, e.g. all points identical).
    """
    x = _columns(data)
    n = x.shape[1]
    if n < 2:
        raise InputError("median bandwidth needs at least two points")
    from scipy.spatial.distance import pdist

    med = float(np.median(pdist(x.T)))
    if med <= 0.0:
        raise InputError("median pairwise distance is zero (degenerate dataset)")
    return med


def kernel_to_config(spec: KernelSpec) -> dict:
    """Serialize a kernel spec to a plain JSON-ready dict."""
    if isinstance(spec, Linear):
        return {"type": "linear"}
    if isinstance(spec, RBF):
        return {"type": "rbf", "bandwidth": spec.bandwidth}
    if isinstance(spec, Polynomial):
        return {"type": "poly", "degree": spec.degree, "offset": spec.offset}
    if isinstance(spec, Product):
        return {"type": "product",
                "left": kernel_to_config(spec.left),
                "right": kernel_to_config(spec.right)}
    raise InputError(f"unknown kernel spec {spec!r}")


def kernel_from_config(cfg: dict, data=None, path: str = "kernel") -> KernelSpec:
    """Parse a kernel config dict, rejecting unknown keys.

    An RBF bandwidth given as the string ``"median"`` is resolved against
    ``data`` via :func:`median_bandwidth`; this fails if no data is supplied.
    """
    if not isinstance(cfg, dict):
        raise InputError(f"{path}: expected an object, got {type(cfg).__name__}")
    if "type" not in cfg:
        raise InputError(f"{path}: missing 'type'")
    kind = cfg["type"]
    if kind == "linear":
        _reject_unknown(cfg, {"type"}, path)
        return Linear()
    if kind == "rbf":
        _reject_unknown(cfg, {"type", "bandwidth"}, path)
        bw = cfg.get("bandwidth", "median")
        if bw == "median":
            if data is None:
                raise InputError(f"{path}: bandwidth 'median' needs data to resolve against")
            bw = median_bandwidth(data)
        if not isinstance(bw, (int, float)):
            raise InputError(f"{path}.bandwidth: expected a number or 'median', got {bw!r}")
        return RBF(bandwidth=float(bw))
    if kind == "poly":
        _reject_unknown(cfg, {"type", "degree", "offset"}, path)
        if "degree" not in cfg:
            raise InputError(f"{path}: poly kernel needs 'degree'")
        return Polynomial(degree=cfg["degree"], offset=cfg.get("offset", 1.0))
    if kind == "product":
        _reject_unknown(cfg, {"type", "left", "right"}, path)
        if "left" not in cfg or "right" not in cfg:
            raise InputError(f"{path}: product kernel needs 'left' and 'right'")
        return Product(left=kernel_from_config(cfg["left"], data, path + ".left"),
                       right=kernel_from_config(cfg["right"], data, path + ".right"))
    raise InputError(f"{path}.type: unknown kernel type {kind!r}")


def _reject_unknown(cfg: dict, allowed: set, path: str) -> None:
    extra = set(cfg) - allowed
    if extra:
        raise InputError(f"{path}: unknown key(s) {sorted(extra)}")
