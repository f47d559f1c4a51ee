import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

import oracles
from mqgraph.analysis import (
    FeatureMatrix,
    ari,
    cluster_features,
    kmeans,
    kmeans_once,
    minmax_normalize,
    nmi,
    pca,
    pca_components,
    silhouette,
)
from mqgraph.core import MappingError

metrics = pytest.importorskip("sklearn.metrics")

labels_st = st.lists(st.integers(0, 4), min_size=2, max_size=40)


def test_minmax_example_and_constant_column():
    X = np.array([[1.0, 5.0], [3.0, 5.0], [2.0, 5.0]])
    assert minmax_normalize(X).tolist() == [[0.0, 0.0], [1.0, 0.0], [0.5, 0.0]]


@settings(max_examples=200, deadline=None)
@given(st.integers(0, 2**32 - 1), st.floats(0.1, 100), st.floats(-50, 50))
def test_minmax_affine_invariant(seed, scale, shift):
    X = np.random.default_rng(seed).normal(size=(12, 4))
    Y = minmax_normalize(X)
    assert Y.min() >= 0 and Y.max() <= 1
    assert np.allclose(minmax_normalize(X * scale + shift), Y, atol=1e-9)


def test_pca_matches_covariance_eigendecomposition():
    rng = np.random.default_rng(0)
    X = rng.normal(size=(200, 5)) @ rng.normal(size=(5, 5))
    scores, ratios = pca(X)
    evals = np.sort(np.linalg.eigvalsh(np.cov(X.T)))[::-1]
    assert ratios == pytest.approx(evals / evals.sum())
    assert scores.var(axis=0, ddof=1) == pytest.approx(evals)
    # scores reconstruct the centred data
    V = pca_components(X)
    assert np.allclose(scores @ V, X - X.mean(axis=0))
    assert np.all(V[np.arange(5), np.abs(V).argmax(axis=1)] > 0)


def test_pca_rejects_single_row():
    with pytest.raises(MappingError):
        pca(np.ones((1, 3)))


def test_ari_nmi_singletons_vs_single_block():
    assert ari([0, 1, 2, 3], [0, 0, 0, 0]) == 0.0
    assert nmi([0, 1, 2, 3], [0, 0, 0, 0]) == 0.0


def test_identical_partitions_score_one():
    assert ari([0, 0, 1, 1], [5, 5, 2, 2]) == 1.0
    assert nmi([0, 0, 1, 1], [5, 5, 2, 2]) == pytest.approx(1.0)


@settings(max_examples=1000, deadline=None)
@given(labels_st, st.data())
def test_metrics_match_sklearn(a, data):
    b = data.draw(st.lists(st.integers(0, 4), min_size=len(a), max_size=len(a)))
    assert ari(a, b) == pytest.approx(metrics.adjusted_rand_score(a, b), abs=1e-10)
    assert ari(a, b) == pytest.approx(oracles.ari(a, b), abs=1e-10)
    assert ari(a, b) == pytest.approx(ari(b, a), abs=1e-12)
    for avg in ("arithmetic", "geometric", "min", "max"):
        assert nmi(a, b, avg) == pytest.approx(
            metrics.normalized_mutual_info_score(a, b, average_method=avg), abs=1e-10)
    assert 0 <= nmi(a, b) <= 1
    assert ari(a, b) <= 1 + 1e-12


@settings(max_examples=300, deadline=None)
@given(st.integers(0, 2**32 - 1), st.integers(3, 30), st.integers(2, 4))
def test_silhouette_matches_sklearn(seed, n, k):
    rng = np.random.default_rng(seed)
    X = rng.normal(size=(n, 3))
    labels = rng.integers(0, k, n)
    got = silhouette(X, labels)
    if 2 <= np.unique(labels).size < n:
        assert got.value == pytest.approx(metrics.silhouette_score(X, labels), abs=1e-9)
        assert -1 <= got.value <= 1
    else:
        assert got.degenerate


def test_kmeans_deterministic_and_separates_blobs():
    rng = np.random.default_rng(0)
    centres = np.array([[0, 0], [10, 0], [0, 10]])
    truth = np.repeat(np.arange(3), 30)
    X = centres[truth] + rng.normal(scale=0.5, size=(90, 2))
    a = kmeans(X, 3, 5, seed=4)
    b = kmeans(X, 3, 5, seed=4)
    assert all(np.array_equal(x, y) for x, y in zip(a, b))
    assert all(ari(truth, x) == 1.0 for x in a)


def test_kmeans_inertia_not_worse_than_sklearn_single_init():
    cluster = pytest.importorskip("sklearn.cluster")
    rng = np.random.default_rng(1)
    X = rng.normal(size=(120, 3))
    ours = min(kmeans_once(X, 4, s)[1] for s in range(5))
    theirs = cluster.KMeans(4, n_init=5, random_state=0).fit(X).inertia_
    assert ours <= theirs * 1.05


def test_kmeans_rejects_bad_k():
    with pytest.raises(MappingError):
        kmeans_once(np.zeros((3, 2)), 4, 0)


def test_cluster_features_report(tmp_path):
    rng = np.random.default_rng(2)
    labels = [lab for lab in "abc" for _ in range(10)]
    values = np.repeat(np.eye(3), 10, axis=0) * 5 + rng.normal(scale=0.1, size=(30, 3))
    fm = FeatureMatrix(tuple(f"x{i}" for i in range(30)), tuple(labels), ("f1", "f2", "f3"), values)
    fm.to_csv(tmp_path / "f.csv")
    back = FeatureMatrix.from_csv(tmp_path / "f.csv")
    assert back.columns == fm.columns and np.allclose(back.values, fm.values)
    rep = cluster_features(back, ["f1", "f2", "f3"], k=3, reps=4, seed=0)
    assert rep.ari == 1.0 and rep.nmi == pytest.approx(1.0)
    assert len(rep.per_repetition) == 4
    assert sum(rep.explained_variance) == pytest.approx(1.0)
