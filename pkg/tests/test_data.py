"""Generators, CSV ingestion, and split plans."""

import numpy as np
import pytest

from klrr.data import (Dataset, TrainTest, SplitPlan, load_csv,
                       gen_line_circle, gen_clusters, gen_linear_subspace,
                       sample_clusters_nominal, split_ionosphere,
                       anomaly_labels_for_split, LINE_HALF_LENGTH,
                       CIRCLE_RADIUS, CLUSTER_A_STD, CLUSTER_B_STD,
                       IONOSPHERE_SHAPE, IONOSPHERE_TRAIN, IONOSPHERE_TEST)
from klrr.kernels import Linear, gram, cross_gram
from klrr.lowrank import LambdaRule, fit, project_test
from klrr.util import InputError


# ----------------------------------------------------------------- datasets

def test_dataset_validates_shape_and_labels():
    with pytest.raises(InputError):
        Dataset(X=np.zeros(3))
    with pytest.raises(InputError):
        Dataset(X=np.zeros((2, 5)), labels=np.zeros(4, dtype=int))
    with pytest.raises(InputError):
        Dataset(X=np.array([[np.nan, 0.0]]))


def test_dataset_take_subsets_columns_and_labels():
    ds = Dataset(X=np.arange(12, dtype=float).reshape(3, 4),
                 labels=np.array([0, 1, 0, 1]))
    sub = ds.take(np.array([2, 0]))
    assert sub.X.shape == (3, 2)
    assert np.array_equal(sub.X[:, 0], ds.X[:, 2])
    assert np.array_equal(sub.labels, [0, 0])


def test_dataset_fingerprint_tracks_content():
    a = Dataset(X=np.ones((2, 3)))
    b = Dataset(X=np.ones((2, 3)))
    c = Dataset(X=np.ones((2, 3)) * 2.0)
    assert a.fingerprint == b.fingerprint
    assert a.fingerprint != c.fingerprint


# -------------------------------------------------------------- line-circle

def test_line_circle_counts_and_labels():
    ds = gen_line_circle()
    assert ds.X.shape == (2, 400)
    assert sorted(set(ds.labels.tolist())) == [0, 1]
    assert int(np.sum(ds.labels == 0)) == 200


def test_line_circle_noiseless_geometry():
    ds = gen_line_circle(n_per_class=50, noise_std=0.0, seed=5)
    line = ds.X[:, ds.labels == 0]
    circle = ds.X[:, ds.labels == 1]
    assert np.all(np.abs(line[1]) <= 1e-12)
    assert np.all(np.abs(line[0]) <= LINE_HALF_LENGTH + 1e-12)
    radii = np.linalg.norm(circle, axis=0)
    assert np.allclose(radii, CIRCLE_RADIUS, atol=1e-12)


def test_line_circle_deterministic():
    a = gen_line_circle(n_per_class=30, noise_std=0.05, seed=9)
    b = gen_line_circle(n_per_class=30, noise_std=0.05, seed=9)
    assert np.array_equal(a.X, b.X)
    assert not np.array_equal(a.X, gen_line_circle(30, 0.05, 10).X)


def test_line_circle_finite():
    ds = gen_line_circle(n_per_class=100, noise_std=0.2, seed=1)
    assert np.all(np.isfinite(ds.X))


# ----------------------------------------------------------------- clusters

def test_clusters_protocol_counts():
    tt = gen_clusters(seed=0)
    assert isinstance(tt, TrainTest)
    assert tt.train.X.shape == (2, 20)
    assert tt.train.labels is None
    assert tt.test.X.shape == (2, 100)
    assert int(np.sum(tt.test.labels == 0)) == 50
    assert int(np.sum(tt.test.labels == 1)) == 50


def test_clusters_component_variances_differ():
    assert CLUSTER_B_STD > CLUSTER_A_STD


def test_clusters_deterministic():
    a = gen_clusters(seed=7)
    b = gen_clusters(seed=7)
    assert np.array_equal(a.train.X, b.train.X)
    assert np.array_equal(a.test.X, b.test.X)


def test_clusters_fresh_nominal_sampler():
    ds = sample_clusters_nominal(500, seed=3)
    assert ds.X.shape == (2, 500)
    assert np.array_equal(ds.X, sample_clusters_nominal(500, seed=3).X)


# ----------------------------------------------------------- linear subspace

def test_linear_subspace_counts_and_dims():
    tt = gen_linear_subspace(seed=0)
    assert tt.train.X.shape == (3, 20)
    assert tt.test.X.shape == (3, 100)
    assert int(np.sum(tt.test.labels == 0)) == 50
    assert int(np.sum(tt.test.labels == 1)) == 50


def test_linear_subspace_zero_noise_is_exact_rank():
    tt = gen_linear_subspace(seed=1, nominal_noise=0.0)
    rank = np.linalg.matrix_rank(tt.train.X, tol=1e-10)
    assert rank == 2


def test_linear_subspace_rejects_weak_anomalies():
    with pytest.raises(InputError):
        gen_linear_subspace(seed=0, nominal_noise=0.1, anomalous_noise=0.5)


def test_linear_subspace_residual_separation():
    """Noiseless plane fit: anomalous residuals beat nominal in >= 95% of pairs."""
    tt = gen_linear_subspace(seed=4, nominal_noise=0.0)
    g = gram(Linear(), tt.train.X)
    model = fit(g, LambdaRule("absolute", 0.0))
    kc = cross_gram(Linear(), tt.train.X, tt.test.X)
    ks = np.sum(tt.test.X * tt.test.X, axis=0)
    res = np.array([project_test(model, kc[:, t], ks[t]).residual
                    for t in range(tt.test.n)])
    r_nom = res[tt.test.labels == 0]
    r_ano = res[tt.test.labels == 1]
    wins = np.mean(r_ano[:, None] > r_nom[None, :])
    assert wins >= 0.95


# -------------------------------------------------------------- csv loading

def test_load_csv_plain_matrix(tmp_path):
    p = tmp_path / "m.csv"
    p.write_text("1.0,2.0,3.0\n4.0,5.0,6.0\n")
    ds = load_csv(p)
    assert ds.d == 3 and ds.n == 2
    assert ds.labels is None
    assert ds.X[0, 1] == 4.0  # column-per-observation transpose


def test_load_csv_header_and_named_label_column(tmp_path):
    p = tmp_path / "m.csv"
    p.write_text("a,b,cls\n1,2,dog\n3,4,cat\n5,6,dog\n")
    ds = load_csv(p, has_header=True, label_column="cls")
    assert ds.d == 2 and ds.n == 3
    # label ids follow sorted name order: cat=0, dog=1
    assert ds.label_names == ("cat", "dog")
    assert np.array_equal(ds.labels, [1, 0, 1])


def test_load_csv_label_by_index(tmp_path):
    p = tmp_path / "m.csv"
    p.write_text("1,2,0\n3,4,1\n")
    ds = load_csv(p, label_column=2)
    assert ds.d == 2
    assert np.array_equal(ds.labels, [0, 1])


def test_load_csv_ragged_row_reports_line(tmp_path):
    p = tmp_path / "bad.csv"
    p.write_text("1,2\n3\n")
    with pytest.raises(InputError, match=r"bad\.csv:2"):
        load_csv(p)


def test_load_csv_non_numeric_reports_line(tmp_path):
    p = tmp_path / "bad.csv"
    p.write_text("1,2\n3,x\n")
    with pytest.raises(InputError, match=r"bad\.csv:2"):
        load_csv(p)


def test_load_csv_empty_file(tmp_path):
    p = tmp_path / "empty.csv"
    p.write_text("")
    with pytest.raises(InputError):
        load_csv(p)


def test_load_csv_missing_file(tmp_path):
    with pytest.raises((InputError, OSError)):
        load_csv(tmp_path / "nope.csv")


# ----------------------------------------------------------- ionosphere split

def _fake_ionosphere(seed=0):
    d, n = IONOSPHERE_SHAPE
    rng = np.random.default_rng(seed)
    x = rng.standard_normal((d, n))
    labels = (rng.uniform(size=n) < 0.36).astype(int)  # 0 = good majority
    return Dataset(X=x, labels=labels, name="ionosphere",
                   label_names=("g", "b"))


def test_split_ionosphere_counts_and_disjointness():
    ds = _fake_ionosphere()
    plan = split_ionosphere(ds, seed=11)
    assert isinstance(plan, SplitPlan)
    assert plan.train.size == IONOSPHERE_TRAIN
    assert plan.test.size == IONOSPHERE_TEST
    assert not set(plan.train.tolist()) & set(plan.test.tolist())
    assert np.all(ds.labels[plan.train] == 0)  # all train rows nominal


def test_split_ionosphere_rejects_wrong_shape():
    small = Dataset(X=np.zeros((4, 20)), labels=np.zeros(20, dtype=int))
    with pytest.raises(InputError):
        split_ionosphere(small, seed=0)


def test_split_ionosphere_deterministic():
    ds = _fake_ionosphere()
    a = split_ionosphere(ds, seed=5)
    b = split_ionosphere(ds, seed=5)
    assert np.array_equal(a.train, b.train)
    assert np.array_equal(a.test, b.test)


def test_anomaly_labels_for_split():
    ds = _fake_ionosphere()
    plan = split_ionosphere(ds, seed=2)
    lab = anomaly_labels_for_split(ds, plan)
    assert lab.shape == (IONOSPHERE_TEST,)
    assert np.array_equal(sorted(set(lab.tolist())), [0, 1]) or np.all(lab == 0)
    assert np.array_equal(lab, (ds.labels[plan.test] != 0).astype(int))
