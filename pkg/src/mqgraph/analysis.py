"""Feature normalisation, PCA, k-means and clustering quality scores."""

from __future__ import annotations

import csv
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .core import MappingError
from .features import FEATURE_NAMES, FEATURE_SUBSETS


@dataclass(frozen=True)
class FeatureMatrix:
    """Rows are instances, columns are named features."""

    ids: tuple[str, ...]
    labels: tuple[str, ...]
    columns: tuple[str, ...]
    values: np.ndarray

    def __post_init__(self):
        values = np.asarray(self.values, dtype=float)
        if values.ndim != 2 or values.shape != (len(self.ids), len(self.columns)):
            raise MappingError(
                f"values shape {values.shape} does not match {len(self.ids)} rows x {len(self.columns)} columns"
            )
        if len(set(self.columns)) != len(self.columns):
            raise MappingError("column names must be unique")
        if len(self.labels) != len(self.ids):
            raise MappingError("one label per row is required")
        if not np.all(np.isfinite(values)):
            raise MappingError("feature matrix has missing or non-finite entries")
        object.__setattr__(self, "values", values)

    @classmethod
    def from_records(cls, records, columns=FEATURE_NAMES) -> "FeatureMatrix":
        """``records`` is an iterable of ``(id, label, {feature: value})``."""
        ids, labels, rows = [], [], []
        for instance_id, label, feats in records:
            ids.append(instance_id)
            labels.append(label)
            rows.append([feats[c] for c in columns])
        return cls(tuple(ids), tuple(labels), tuple(columns), np.array(rows, dtype=float).reshape(len(ids), len(columns)))

    def select(self, subset) -> "FeatureMatrix":
        cols = FEATURE_SUBSETS[subset] if isinstance(subset, str) else tuple(subset)
        missing = [c for c in cols if c not in self.columns]
        if missing:
            raise MappingError(f"unknown feature columns: {missing}")
        idx = [self.columns.index(c) for c in cols]
        return FeatureMatrix(self.ids, self.labels, cols, self.values[:, idx])

    def with_values(self, values) -> "FeatureMatrix":
        return FeatureMatrix(self.ids, self.labels, self.columns, values)

    def to_csv(self, path) -> None:
        with Path(path).open("w", newline="", encoding="utf-8") as fh:
            writer = csv.writer(fh, lineterminator="\n")
            writer.writerow(("instance_id", "label") + self.columns)
            for i, (iid, lab) in enumerate(zip(self.ids, self.labels)):
                writer.writerow([iid, lab] + [repr(float(v)) for v in self.values[i]])

    @classmethod
    def from_csv(cls, path) -> "FeatureMatrix":
        path = Path(path)
        if not path.exists():
            raise FileNotFoundError(f"feature matrix not found: {path}")
        with path.open(newline="", encoding="utf-8") as fh:
            reader = csv.reader(fh)
            header = next(reader)
            rows = list(reader)
        if header[:2] != ["instance_id", "label"]:
            raise MappingError(f"{path}: expected 'instance_id,label,...' header")
        values = np.array([[float(x) for x in r[2:]] for r in rows]).reshape(len(rows), len(header) - 2)
        return cls(tuple(r[0] for r in rows), tuple(r[1] for r in rows), tuple(header[2:]), values)


def minmax_normalize(X):
    """Rescale each column to [0, 1]; constant columns become 0."""
    fm = X if isinstance(X, FeatureMatrix) else None
    A = np.asarray(fm.values if fm is not None else X, dtype=float)
    lo = A.min(axis=0)
    span = A.max(axis=0) - lo
    out = np.zeros_like(A)
    nz = span > 0
    out[:, nz] = (A[:, nz] - lo[nz]) / span[nz]
    return fm.with_values(out) if fm is not None else out


def pca(X) -> tuple[np.ndarray, np.ndarray]:
    """Principal component scores and explained-variance ratios.

    The matrix is mean-centred but not rescaled. Components come from the
    SVD of the centred matrix, ordered by decreasing variance, with signs
    fixed so the largest-magnitude loading of each component is positive.
    """
    A = np.asarray(getattr(X, "values", X), dtype=float)
    if A.ndim != 2 or A.shape[0] < 2:
        raise MappingError("PCA needs at least 2 rows")
    centred = A - A.mean(axis=0)
    U, s, Vt = np.linalg.svd(centred, full_matrices=False)
    flip = np.sign(Vt[np.arange(Vt.shape[0]), np.argmax(np.abs(Vt), axis=1)])
    flip[flip == 0] = 1
    Vt = Vt * flip[:, None]
    scores = centred @ Vt.T
    var = s**2
    total = var.sum()
    ratios = var / total if total > 0 else np.zeros_like(var)
    return scores, ratios


def pca_components(X) -> np.ndarray:
    """Loadings (rows = components) matching :func:`pca`'s sign convention."""
    A = np.asarray(getattr(X, "values", X), dtype=float)
    centred = A - A.mean(axis=0)
    _, _, Vt = np.linalg.svd(centred, full_matrices=False)
    flip = np.sign(Vt[np.arange(Vt.shape[0]), np.argmax(np.abs(Vt), axis=1)])
    flip[flip == 0] = 1
    return Vt * flip[:, None]


def _kmeans_pp(X: np.ndarray, k: int, rng: np.random.Generator) -> np.ndarray:
    n = X.shape[0]
    centers = np.empty((k, X.shape[1]))
    centers[0] = X[rng.integers(n)]
    d2 = ((X - centers[0]) ** 2).sum(axis=1)
    for c in range(1, k):
        total = d2.sum()
        idx = rng.integers(n) if total <= 0 else rng.choice(n, p=d2 / total)
        centers[c] = X[idx]
        d2 = np.minimum(d2, ((X - centers[c]) ** 2).sum(axis=1))
    return centers


def kmeans_once(X, k: int, seed: int, max_iter: int = 300) -> tuple[np.ndarray, float]:
    """One Lloyd run from a k-means++ start; returns (labels, inertia)."""
    X = np.asarray(X, dtype=float)
    n = X.shape[0]
    if k < 1 or k > n:
        raise MappingError(f"k must lie in 1..{n}, got {k}")
    rng = np.random.Generator(np.random.PCG64(np.random.SeedSequence(seed)))
    centers = _kmeans_pp(X, k, rng)
    labels = None
    for _ in range(max_iter):
        d = ((X[:, None, :] - centers[None, :, :]) ** 2).sum(axis=2)
        new = d.argmin(axis=1)
        if labels is not None and np.array_equal(new, labels):
            break
        labels = new
        for c in range(k):
            members = labels == c
            if members.any():
                centers[c] = X[members].mean(axis=0)
            else:
                # re-seed an empty cluster at the point farthest from its centre
                far = d[np.arange(n), labels].argmax()
                centers[c] = X[far]
                labels[far] = c
    inertia = float(((X - centers[labels]) ** 2).sum())
    return labels, inertia


def repetition_seed(seed: int, rep: int) -> int:
    return int(np.random.SeedSequence(seed, spawn_key=(rep,)).generate_state(1, np.uint64)[0])


def kmeans(scores, k: int, n_repetitions: int = 10, seed: int = 0) -> list[np.ndarray]:
    """Assignments of ``n_repetitions`` independent k-means runs."""
    if n_repetitions < 1:
        raise MappingError("n_repetitions must be >= 1")
    return [kmeans_once(scores, k, repetition_seed(seed, r))[0] for r in range(n_repetitions)]


def _contingency(a, b) -> np.ndarray:
    a = np.asarray(a)
    b = np.asarray(b)
    if a.shape != b.shape or a.ndim != 1:
        raise MappingError(f"partitions differ in size: {a.shape} vs {b.shape}")
    _, ia = np.unique(a, return_inverse=True)
    _, ib = np.unique(b, return_inverse=True)
    table = np.zeros((ia.max() + 1, ib.max() + 1), dtype=np.int64)
    np.add.at(table, (ia, ib), 1)
    return table


def ari(a, b) -> float:
    """Adjusted Rand index (permutation-model expectation)."""
    table = _contingency(a, b)
    n = table.sum()

    def comb2(x):
        x = np.asarray(x, dtype=float)
        return x * (x - 1) / 2

    sum_ij = comb2(table).sum()
    sum_a = comb2(table.sum(axis=1)).sum()
    sum_b = comb2(table.sum(axis=0)).sum()
    expected = sum_a * sum_b / comb2(n) if n > 1 else 0.0
    max_index = 0.5 * (sum_a + sum_b)
    if max_index == expected:
        return 1.0
    return float((sum_ij - expected) / (max_index - expected))


def _entropy(counts) -> float:
    p = np.asarray(counts, dtype=float)
    p = p[p > 0] / p.sum()
    return float(-(p * np.log(p)).sum())


def nmi(a, b, average: str = "arithmetic") -> float:
    """Normalised mutual information; ``average`` picks the entropy mean."""
    table = _contingency(a, b)
    n = table.sum()
    pa = table.sum(axis=1) / n
    pb = table.sum(axis=0) / n
    nz = table > 0
    pij = table[nz] / n
    mi = float((pij * np.log(pij / np.outer(pa, pb)[nz])).sum())
    ha, hb = _entropy(pa), _entropy(pb)
    if ha == 0 and hb == 0:
        return 1.0
    norm = {
        "arithmetic": 0.5 * (ha + hb),
        "geometric": np.sqrt(ha * hb),
        "min": min(ha, hb),
        "max": max(ha, hb),
    }[average]
    if norm == 0:
        return 0.0
    return float(min(1.0, max(0.0, mi / norm)))


@dataclass(frozen=True)
class SilhouetteResult:
    value: float
    degenerate: bool

    def __float__(self) -> float:
        return self.value


def silhouette(scores, partition) -> SilhouetteResult:
    """Mean silhouette width with Euclidean distances.

    Points in singleton clusters score 0. With fewer than 2 clusters the
    result is 0 and flagged degenerate.
    """
    X = np.asarray(scores, dtype=float)
    labels = np.asarray(partition)
    if X.shape[0] != labels.size:
        raise MappingError("scores and partition differ in size")
    uniq, inv = np.unique(labels, return_inverse=True)
    k = uniq.size
    if k < 2 or k >= X.shape[0]:
        return SilhouetteResult(0.0, True)
    sq = (X**2).sum(axis=1)
    D = np.sqrt(np.maximum(sq[:, None] + sq[None, :] - 2 * X @ X.T, 0.0))
    np.fill_diagonal(D, 0.0)
    sums = np.zeros((X.shape[0], k))
    for c in range(k):
        sums[:, c] = D[:, inv == c].sum(axis=1)
    sizes = np.bincount(inv)
    own = sizes[inv]
    a = np.where(own > 1, sums[np.arange(X.shape[0]), inv] / np.maximum(own - 1, 1), 0.0)
    other = sums / sizes
    other[np.arange(X.shape[0]), inv] = np.inf
    b = other.min(axis=1)
    s = np.where(own > 1, (b - a) / np.maximum(np.maximum(a, b), 1e-300), 0.0)
    return SilhouetteResult(float(s.mean()), False)


@dataclass
class ClusteringReport:
    assignments: list[int]
    ari: float
    nmi: float
    silhouette: float
    repetitions: int
    per_repetition: list[dict] = field(default_factory=list)
    subset: str = "full"
    columns: tuple[str, ...] = ()
    explained_variance: list[float] = field(default_factory=list)
    degenerate_silhouette: bool = False

    def to_dict(self) -> dict:
        return {
            "subset": self.subset,
            "ari": self.ari,
            "nmi": self.nmi,
            "silhouette": self.silhouette,
            "repetitions": self.repetitions,
            "per_repetition": self.per_repetition,
            "assignments": list(self.assignments),
            "columns": list(self.columns),
            "explained_variance": list(self.explained_variance),
            "degenerate_silhouette": self.degenerate_silhouette,
        }


def cluster_features(fm: FeatureMatrix, subset="full", k: int = 6, reps: int = 10,
                     seed: int = 0, nmi_average: str = "arithmetic") -> ClusteringReport:
    """Min-max -> PCA (all components) -> repeated k-means -> scores vs labels."""
    sel = fm.select(subset)
    scores, ratios = pca(minmax_normalize(sel.values))
    truth = np.asarray(sel.labels)
    per_rep = []
    runs = kmeans(scores, k, reps, seed)
    degenerate = False
    for r, labels in enumerate(runs):
        sil = silhouette(scores, labels)
        degenerate |= sil.degenerate
        per_rep.append({
            "repetition": r,
            "ari": ari(truth, labels),
            "nmi": nmi(truth, labels, nmi_average),
            "silhouette": sil.value,
        })
    mean = {key: float(np.mean([p[key] for p in per_rep])) for key in ("ari", "nmi", "silhouette")}
    return ClusteringReport(
        assignments=runs[0].tolist(),
        ari=mean["ari"],
        nmi=mean["nmi"],
        silhouette=mean["silhouette"],
        repetitions=reps,
        per_repetition=per_rep,
        subset=subset if isinstance(subset, str) else "custom",
        columns=sel.columns,
        explained_variance=ratios.tolist(),
        degenerate_silhouette=degenerate,
    )


def extract_features(dataset, mapper: str = "mqg", eta=50, jobs: int = 1) -> FeatureMatrix:
    """Map each labelled series and collect its feature vector."""
    from .pipeline import map_and_extract

    records = map_and_extract(dataset, mapper=mapper, eta=eta, jobs=jobs)
    return FeatureMatrix.from_records(records)


def run_experiment(dataset, mapper: str = "mqg", feature_subset="full", k: int = 6,
                   reps: int = 10, seed: int = 0, eta=50, jobs: int = 1) -> ClusteringReport:
    """Map, extract features, select a subset and cluster against the labels."""
    fm = extract_features(dataset, mapper=mapper, eta=eta, jobs=jobs)
    return cluster_features(fm, feature_subset, k=k, reps=reps, seed=seed)


def regenerated_experiment(n_per_model: int, T: int, subsets=("full",), k: int = 6, reps: int = 10,
                           seed: int = 0, mapper: str = "mqg", eta=50, jobs: int = 1,
                           models=None, burn_in=None) -> dict[str, ClusteringReport]:
    """Repetitions that each simulate a fresh dataset and run k-means once.

    Repetition ``r`` draws its dataset from base seed
    ``repetition_seed(seed, r)`` and seeds its single k-means run the same
    way. Scores are averaged per subset.
    """
    from .generators import MODEL_KINDS, generate_dataset

    per_subset: dict[str, list[dict]] = {s: [] for s in subsets}
    for r in range(reps):
        rep_seed = repetition_seed(seed, r)
        data = generate_dataset(n_per_model, T, base_seed=rep_seed, models=models or MODEL_KINDS, burn_in=burn_in)
        fm = extract_features(data, mapper=mapper, eta=eta, jobs=jobs)
        truth = np.asarray(fm.labels)
        for s in subsets:
            scores, _ = pca(minmax_normalize(fm.select(s).values))
            labels, _ = kmeans_once(scores, k, rep_seed)
            per_subset[s].append({
                "repetition": r,
                "ari": ari(truth, labels),
                "nmi": nmi(truth, labels),
                "silhouette": silhouette(scores, labels).value,
            })
    out = {}
    for s, rows in per_subset.items():
        mean = {key: float(np.mean([p[key] for p in rows])) for key in ("ari", "nmi", "silhouette")}
        out[s] = ClusteringReport(assignments=[], ari=mean["ari"], nmi=mean["nmi"], silhouette=mean["silhouette"],
                                  repetitions=reps, per_repetition=rows, subset=s,
                                  columns=FEATURE_SUBSETS[s])
    return out
