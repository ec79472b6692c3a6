"""Datasets: CSV loading, seeded synthetic generators, benchmark splits.

Observations live in columns internally, shape (d, n). CSV files are the
usual row-per-observation layout and get transposed on load.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field

import numpy as np

from .util import InputError, check_finite, fingerprint_bytes


@dataclass
class Dataset:
    X: np.ndarray
    labels: np.ndarray | None = None
    name: str = ""
    label_names: tuple | None = None

    def __post_init__(self):
        x = np.asarray(self.X, dtype=float)
        if x.ndim != 2:
            raise InputError(f"dataset matrix must be 2-D (d, n), got ndim={x.ndim}")
        check_finite(x, "dataset matrix")
        self.X = x
        if self.labels is not None:
            lab = np.asarray(self.labels)
            if lab.shape != (x.shape[1],):
                raise InputError(
                    f"labels length {lab.shape} does not match n={x.shape[1]}")
            self.labels = lab.astype(int)

    @property
    def d(self) -> int:
        return self.X.shape[0]

    @property
    def n(self) -> int:
        return self.X.shape[1]

    @property
    def fingerprint(self) -> str:
        return fingerprint_bytes(self.X)

    def take(self, idx) -> "Dataset":
        idx = np.asarray(idx, dtype=int)
        return Dataset(X=self.X[:, idx],
                       labels=None if self.labels is None else self.labels[idx],
                       name=self.name,
                       label_names=self.label_names)


@dataclass
class TrainTest:
    train: Dataset
    test: Dataset


@dataclass
class SplitPlan:
    """Index sets into a source dataset plus the seed that produced them."""

    train: np.ndarray
    test: np.ndarray
    seed: int
    source: str = ""


def load_csv(path: str, has_header: bool = False, label_column=None) -> Dataset:
    """Load a row-per-observation CSV into a column-convention Dataset.

    ``label_column`` may be a zero-based index or, with a header, a column
    name. Errors carry the file path and 1-based line number.
    """
    rows = []
    header = None
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        for lineno, row in enumerate(reader, start=1):
            if not row or all(c.strip() == "" for c in row):
                continue
            row = [c.strip() for c in row]
            if has_header and header is None:
                header = row
                continue
            rows.append((lineno, row))
    if not rows:
        raise InputError(f"{path}: no data rows")

    label_idx = None
    if label_column is not None:
        if isinstance(label_column, str):
            if header is None:
                raise InputError(f"{path}: label column {label_column!r} needs a header")
            if label_column not in header:
                raise InputError(f"{path}: no column named {label_column!r} in header")
            label_idx = header.index(label_column)
        else:
            label_idx = int(label_column)

    width = len(rows[0][1])
    feats, raw_labels = [], []
    for lineno, row in rows:
        if len(row) != width:
            raise InputError(
                f"{path}:{lineno}: ragged row, expected {width} fields, got {len(row)}")
        if label_idx is not None:
            if not (-len(row) <= label_idx < len(row)):
                raise InputError(f"{path}: label column index {label_idx} out of range")
            raw_labels.append(row[label_idx])
            row = [c for k, c in enumerate(row) if k != label_idx % len(row)]
        try:
            feats.append([float(c) for c in row])
        except ValueError as exc:
            raise InputError(f"{path}:{lineno}: non-numeric value ({exc})") from None

    x = np.asarray(feats, dtype=float).T
    check_finite(x, f"{path}")
    labels = None
    label_names = None
    if raw_labels:
        names = sorted(set(raw_labels))
        label_names = tuple(names)
        lut = {v: k for k, v in enumerate(names)}
        labels = np.array([lut[v] for v in raw_labels], dtype=int)
    return Dataset(X=x, labels=labels, name=path, label_names=label_names)


# Fixed geometry for the synthetic sets. Kept in one place so experiments and
# tests agree on the constants.
LINE_HALF_LENGTH = 0.8
CIRCLE_RADIUS = 1.0
CLUSTER_A_MEAN = (0.0, 0.0)
CLUSTER_A_STD = 0.35
CLUSTER_B_MEAN = (2.5, 2.5)
CLUSTER_B_STD = 0.7


def gen_line_circle(n_per_class: int = 200, noise_std: float = 0.05,
                    seed: int = 0) -> Dataset:
    """Line segment inside a circle in the plane, one label per structure.

    Class 0 is uniform along the segment y=0, |x| <= LINE_HALF_LENGTH, which
    sits strictly inside the circle; class 1 is uniform by angle on the
    circle. Both get isotropic Gaussian noise. The two structures overlap
    spatially (the circle surrounds the segment), so coordinate k-means
    cannot separate them, while their local geometry differs.
    """
    if n_per_class < 1:
        raise InputError("n_per_class must be >= 1")
    if noise_std < 0:
        raise InputError("noise_std must be >= 0")
    rng = np.random.default_rng(seed)
    t = rng.uniform(-LINE_HALF_LENGTH, LINE_HALF_LENGTH, n_per_class)
    line = np.stack([t, np.zeros(n_per_class)])
    theta = rng.uniform(0.0, 2.0 * np.pi, n_per_class)
    circle = CIRCLE_RADIUS * np.stack([np.cos(theta), np.sin(theta)])
    pts = np.concatenate([line, circle], axis=1)
    pts = pts + noise_std * rng.standard_normal(pts.shape)
    labels = np.concatenate([np.zeros(n_per_class, int), np.ones(n_per_class, int)])
    return Dataset(X=pts, labels=labels, name="line-circle")


def _clusters_box():
    lo = min(CLUSTER_A_MEAN[0] - 3 * CLUSTER_A_STD, CLUSTER_B_MEAN[0] - 3 * CLUSTER_B_STD)
    hi = max(CLUSTER_A_MEAN[0] + 3 * CLUSTER_A_STD, CLUSTER_B_MEAN[0] + 3 * CLUSTER_B_STD)
    return lo, hi


def sample_clusters_nominal(n: int, seed: int) -> Dataset:
    """Nominal draws from the two-Gaussian mixture (equal weights)."""
    rng = np.random.default_rng(seed)
    return Dataset(X=_nominal_from(rng, n), name="clusters-nominal")


def _nominal_from(rng: np.random.Generator, n: int) -> np.ndarray:
    which = rng.integers(0, 2, n)
    a = np.asarray(CLUSTER_A_MEAN)[:, None] + CLUSTER_A_STD * rng.standard_normal((2, n))
    b = np.asarray(CLUSTER_B_MEAN)[:, None] + CLUSTER_B_STD * rng.standard_normal((2, n))
    return np.where(which[None, :] == 0, a, b)


def gen_clusters(seed: int = 0, n_train: int = 20, n_test_nominal: int = 50,
                 n_test_anomalous: int = 50) -> TrainTest:
    """Two Gaussian clusters of different spread plus box-uniform anomalies.

    Train is nominal only. Test labels: 0 nominal, 1 anomalous. Anomalies are
    uniform over the square covering both components' 3-sigma extents.
    """
    rng = np.random.default_rng(seed)
    train = _nominal_from(rng, n_train)
    nom = _nominal_from(rng, n_test_nominal)
    lo, hi = _clusters_box()
    anom = rng.uniform(lo, hi, (2, n_test_anomalous))
    test = np.concatenate([nom, anom], axis=1)
    labels = np.concatenate([np.zeros(n_test_nominal, int), np.ones(n_test_anomalous, int)])
    return TrainTest(train=Dataset(X=train, name="clusters-train"),
                     test=Dataset(X=test, labels=labels, name="clusters-test"))


def gen_linear_subspace(seed: int = 0, n_train: int = 20, n_test_nominal: int = 50,
                        n_test_anomalous: int = 50, ambient_dim: int = 3,
                        subspace_dim: int = 2, coeff_scale: float = 2.0,
                        nominal_noise: float = 0.05,
                        anomalous_noise: float = 1.0) -> TrainTest:
    """Points near a random low-dimensional subspace; anomalies perturbed hard.

    The anomalous perturbation is 20x the nominal one by default. Test labels:
    0 nominal, 1 anomalous.
    """
    if not (1 <= subspace_dim < ambient_dim):
        raise InputError("need 1 <= subspace_dim < ambient_dim")
    if anomalous_noise < 10 * nominal_noise and nominal_noise > 0:
        raise InputError("anomalous perturbation must be at least 10x the nominal one")
    rng = np.random.default_rng(seed)
    basis, _ = np.linalg.qr(rng.standard_normal((ambient_dim, subspace_dim)))

    def draw(n, noise):
        coeff = coeff_scale * rng.standard_normal((subspace_dim, n))
        return basis @ coeff + noise * rng.standard_normal((ambient_dim, n))

    train = draw(n_train, nominal_noise)
    nom = draw(n_test_nominal, nominal_noise)
    anom = draw(n_test_anomalous, anomalous_noise)
    test = np.concatenate([nom, anom], axis=1)
    labels = np.concatenate([np.zeros(n_test_nominal, int), np.ones(n_test_anomalous, int)])
    return TrainTest(train=Dataset(X=train, name="linear-subspace-train"),
                     test=Dataset(X=test, labels=labels, name="linear-subspace-test"))


IONOSPHERE_SHAPE = (34, 351)
IONOSPHERE_TRAIN = 175
IONOSPHERE_TEST = 30


def split_ionosphere(dataset: Dataset, seed: int) -> SplitPlan:
    """Draw 175 good-class training points and a 30-point mixed test set.

    The good class is identified by label name 'g'/'good' when present,
    otherwise taken as the majority class. Expects the canonical 34 x 351
    two-class set.
    """
    if dataset.X.shape != IONOSPHERE_SHAPE:
        raise InputError(
            f"expected shape {IONOSPHERE_SHAPE}, got {dataset.X.shape}")
    if dataset.labels is None:
        raise InputError("ionosphere split needs labels")
    classes = np.unique(dataset.labels)
    if len(classes) != 2:
        raise InputError(f"expected two classes, got {len(classes)}")

    good = None
    if dataset.label_names:
        for k, name in enumerate(dataset.label_names):
            if str(name).lower() in ("g", "good"):
                good = k
    if good is None:
        counts = [(np.sum(dataset.labels == c), c) for c in classes]
        good = max(counts)[1]

    good_idx = np.flatnonzero(dataset.labels == good)
    if len(good_idx) < IONOSPHERE_TRAIN:
        raise InputError(
            f"good class has {len(good_idx)} points, need {IONOSPHERE_TRAIN}")
    rng = np.random.default_rng(seed)
    train = rng.choice(good_idx, IONOSPHERE_TRAIN, replace=False)
    rest = np.setdiff1d(np.arange(dataset.n), train)
    test = rng.choice(rest, IONOSPHERE_TEST, replace=False)
    return SplitPlan(train=np.sort(train), test=np.sort(test), seed=seed,
                     source=dataset.name or "ionosphere")


def anomaly_labels_for_split(dataset: Dataset, plan: SplitPlan) -> np.ndarray:
    """0 for points sharing the training class, 1 otherwise."""
    train_classes = set(dataset.labels[plan.train].tolist())
    return np.array([0 if c in train_classes else 1
                     for c in dataset.labels[plan.test]], dtype=int)
