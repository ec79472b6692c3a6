"""Shared fixtures and data builders for the test suite."""

import os

import numpy as np
import pytest

from klrr.data import Dataset


def two_subspace_dataset(seed, n_per=30, dim=8, rank=2, shear_deg=20.0):
    """Points on two independent rank-`rank` linear subspaces of R^dim.

    The second subspace is tilted toward the first by `shear_deg` degrees
    (principal angles 90 - shear_deg), so the pair is independent but not
    orthogonal. Coefficient matrices have singular values pinned to
    [0.9, 1.1] so no spectral mode of the union collapses.
    """
    rng = np.random.default_rng(seed)
    q, _ = np.linalg.qr(rng.standard_normal((dim, 2 * rank)))
    base = q[:, :rank]
    comp = q[:, rank:2 * rank]
    t = np.deg2rad(shear_deg)
    tilted = np.cos(t) * comp + np.sin(t) * base

    def coeffs():
        u, _, vt = np.linalg.svd(rng.standard_normal((rank, n_per)),
                                 full_matrices=False)
        return u @ np.diag(np.linspace(1.1, 0.9, rank)) @ vt

    x = np.concatenate([base @ coeffs(), tilted @ coeffs()], axis=1)
    labels = np.repeat(np.array([0, 1]), n_per)
    return x, labels


def random_psd_gram_values(rng, n, eig_lo=0.5, eig_hi=5.0):
    """Random symmetric PSD matrix with eigenvalues uniform in [lo, hi]."""
    q, _ = np.linalg.qr(rng.standard_normal((n, n)))
    eig = rng.uniform(eig_lo, eig_hi, size=n)
    vals = (q * eig) @ q.T
    return (vals + vals.T) / 2.0


@pytest.fixture(scope="session")
def iris_dataset():
    sklearn_datasets = pytest.importorskip("sklearn.datasets")
    raw = sklearn_datasets.load_iris()
    return Dataset(X=np.asarray(raw.data, dtype=float).T,
                   labels=np.asarray(raw.target, dtype=int),
                   name="iris",
                   label_names=tuple(str(s) for s in raw.target_names))


def ionosphere_csv_path():
    """Path to a user-supplied ionosphere CSV, or None if absent."""
    env = os.environ.get("KLRR_IONOSPHERE", "")
    if env and os.path.exists(env):
        return env
    local = os.path.join(os.path.dirname(__file__), "..", "data",
                         "ionosphere.csv")
    return local if os.path.exists(local) else None
